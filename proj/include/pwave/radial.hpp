#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "pwave/common.hpp"
#include "pwave/specfun.hpp"

namespace pwave {

// Radial nodes on (r_min, r_max): geometric spacing below 1, uniform spacing
// above, joined by a smooth softplus map r(u) = a log(1 + exp((u - c)/b)) of
// the node index u.  Weights are the trapezoid rule in u times r'(u), plus
// the interval (0, r_min) on the first node, so quadrature of smooth decaying
// integrands converges spectrally.
struct radial_grid {
    rvec r;      // nodes, strictly increasing
    rvec w;      // quadrature weights
    rvec dr;     // r'(u): local node spacing, also the operator inner-product weight
    double r_min = 0, r_max = 0;
    int n_log = 0, n_lin = 0;
    double map_a = 0, map_b = 0, map_c = 0;

    std::size_t size() const { return r.size(); }
};

using grid_ptr = std::shared_ptr<const radial_grid>;

namespace detail {
inline double softplus(double x) { return x > 30 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double softplus_inv(double y) { return y > 30 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y)); }
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace detail

inline grid_ptr build_radial_grid(double r_min, double r_max, int n_log, int n_lin) {
    if (!(r_min > 0.0 && r_min < 1.0 && r_max > 1.0))
        throw domain_error("build_radial_grid: need 0 < r_min < 1 < r_max");
    if (n_log < 2 || n_lin < 2) throw domain_error("build_radial_grid: need n_log, n_lin >= 2");
    const int N = n_log + n_lin;
    // For a fixed scale a, the end conditions fix b and c; a is chosen so that
    // node n_log-1 lands on r = 1.
    auto solve = [&](double a, double& b, double& c) {
        double x0 = detail::softplus_inv(r_min / a);
        double x1 = detail::softplus_inv(r_max / a);
        b = (N - 1) / (x1 - x0);
        c = -b * x0;
        return a * detail::softplus((n_log - 1 - c) / b) - 1.0;
    };
    double lo = std::log(1e-6), hi = std::log(1e8), b = 0, c = 0;
    double flo = solve(std::exp(lo), b, c);
    double fhi = solve(std::exp(hi), b, c);
    if (flo * fhi > 0) throw domain_error("build_radial_grid: cannot place the log/linear split");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = solve(std::exp(mid), b, c);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double a = std::exp(0.5 * (lo + hi));
    solve(a, b, c);

    auto g = std::make_shared<radial_grid>();
    g->r_min = r_min;
    g->r_max = r_max;
    g->n_log = n_log;
    g->n_lin = n_lin;
    g->map_a = a;
    g->map_b = b;
    g->map_c = c;
    g->r.resize(N);
    g->w.resize(N);
    g->dr.resize(N);
    for (int i = 0; i < N; ++i) {
        double x = (i - c) / b;
        g->r[i] = a * detail::softplus(x);
        g->dr[i] = a * detail::logistic(x) / b;
        g->w[i] = g->dr[i] * ((i == 0 || i == N - 1) ? 0.5 : 1.0);
    }
    g->r.front() = r_min;
    g->r.back() = r_max;
    g->w.front() += r_min;  // the interval (0, r_min)
    return g;
}

// Scales every node count of a grid by `factor` (refinement studies).
inline grid_ptr refine_grid(const radial_grid& g, double factor) {
    return build_radial_grid(g.r_min, g.r_max, static_cast<int>(std::lround(g.n_log * factor)),
                             static_cast<int>(std::lround(g.n_lin * factor)));
}

inline double integrate(const radial_grid& g, const rvec& f) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.w[i] * f[i];
    return s;
}

// ---------------------------------------------------------------- weights

enum class weight_kind { w_sigma, v_sigma, tau_eps, jap_bracket_pow, power };

inline double weight_eval(weight_kind kind, double p, double r) {
    if (r <= 0.0 && kind != weight_kind::jap_bracket_pow) throw domain_error("weight_eval: need r > 0");
    switch (kind) {
        case weight_kind::w_sigma: return r * std::pow(1.0 + std::abs(std::log(r)), p);
        case weight_kind::v_sigma:
            return std::sqrt(r) * std::pow(std::abs(std::log(r)), p) + std::pow(japanese(r), 1.0 + p);
        case weight_kind::tau_eps: return std::pow(r, 0.5 - p) + r;
        case weight_kind::jap_bracket_pow: return std::pow(1.0 + r * r, 0.5 * p);
        case weight_kind::power: return std::pow(r, p);
    }
    return 0.0;
}

// ------------------------------------------------------------ differences

// Centered first derivative in the node index with zero ghost values; with
// the grid weights this operator is exactly skew-adjoint.
struct skew_difference {
    int half = 3;
    rvec c;  // c[0..half-1] for offsets 1..half
    explicit skew_difference(int order = 6) {
        if (order == 2) {
            half = 1;
            c = {0.5};
        } else if (order == 4) {
            half = 2;
            c = {2.0 / 3.0, -1.0 / 12.0};
        } else {
            half = 3;
            c = {0.75, -0.15, 1.0 / 60.0};
        }
    }
    template <class V>
    V apply(const radial_grid& g, const V& f) const {
        const int N = static_cast<int>(g.size());
        V out(N);
        for (int i = 0; i < N; ++i) {
            typename V::value_type s{};
            for (int m = 1; m <= half; ++m) {
                if (i + m < N) s += c[m - 1] * f[i + m];
                if (i - m >= 0) s -= c[m - 1] * f[i - m];
            }
            out[i] = s / g.dr[i];
        }
        return out;
    }
};

// Radial derivative with centered differences in the mapped coordinate and
// one-sided second-order differences at the ends.  order is 2 or 6.
template <class V>
V radial_derivative(const radial_grid& g, const V& f, int order = 2) {
    const int N = static_cast<int>(g.size());
    if (N < 3) throw domain_error("radial_derivative: need at least 3 nodes");
    V out(N);
    const int half = order >= 6 ? 3 : 1;
    skew_difference op(order >= 6 ? 6 : 2);
    for (int i = 0; i < N; ++i) {
        typename V::value_type s{};
        if (i == 0) {
            s = -1.5 * f[0] + 2.0 * f[1] - 0.5 * f[2];
        } else if (i == N - 1) {
            s = 1.5 * f[N - 1] - 2.0 * f[N - 2] + 0.5 * f[N - 3];
        } else if (i < half || i > N - 1 - half) {
            s = 0.5 * (f[i + 1] - f[i - 1]);
        } else {
            for (int m = 1; m <= op.half; ++m) s += op.c[m - 1] * (f[i + m] - f[i - m]);
        }
        out[i] = s / g.dr[i];
    }
    return out;
}

// ------------------------------------------------------------------ Hankel

// Unitary Hankel kernel K(r, rho) = sqrt(r rho) J_nu(r rho) sampled between a
// position grid and a frequency grid.
struct hankel_plan {
    grid_ptr rg, kg;
    double nu = 0;
    Eigen::MatrixXd K;  // rows: r nodes, cols: rho nodes

    // a(rho_j) = sum_i w_i K_ij psi_i
    cvec to_freq(const cvec& psi) const {
        const auto Nr = rg->size(), Nk = kg->size();
        Eigen::VectorXd vr(Nr), vi(Nr);
        for (std::size_t i = 0; i < Nr; ++i) {
            vr(i) = rg->w[i] * psi[i].real();
            vi(i) = rg->w[i] * psi[i].imag();
        }
        Eigen::VectorXd orr = K.transpose() * vr, oi = K.transpose() * vi;
        cvec out(Nk);
        for (std::size_t j = 0; j < Nk; ++j) out[j] = {orr(j), oi(j)};
        return out;
    }
    // psi(r_i) = sum_j w_j K_ij a_j
    cvec to_pos(const cvec& a) const {
        const auto Nr = rg->size(), Nk = kg->size();
        Eigen::VectorXd vr(Nk), vi(Nk);
        for (std::size_t j = 0; j < Nk; ++j) {
            vr(j) = kg->w[j] * a[j].real();
            vi(j) = kg->w[j] * a[j].imag();
        }
        Eigen::VectorXd orr = K * vr, oi = K * vi;
        cvec out(Nr);
        for (std::size_t i = 0; i < Nr; ++i) out[i] = {orr(i), oi(i)};
        return out;
    }
    // Columns of A are frequency vectors; returns position matrix.
    Eigen::MatrixXcd to_pos(const Eigen::MatrixXcd& A) const {
        Eigen::MatrixXcd B = A;
        for (std::size_t j = 0; j < kg->size(); ++j) B.row(j) *= kg->w[j];
        Eigen::MatrixXd re = K * B.real(), im = K * B.imag();
        Eigen::MatrixXcd out(re.rows(), re.cols());
        out.real() = re;
        out.imag() = im;
        return out;
    }
};

using plan_ptr = std::shared_ptr<const hankel_plan>;

namespace detail {
// A grid is determined by its build parameters, so equal grids built
// separately (one per ensemble member, say) share their plans.
using grid_key = std::tuple<double, double, int, int>;
inline grid_key key_of(const radial_grid& g) { return {g.r_min, g.r_max, g.n_log, g.n_lin}; }

struct plan_cache {
    std::mutex mu;
    std::map<std::tuple<grid_key, grid_key, long long>, plan_ptr> map;
    std::size_t bytes = 0;
    static constexpr std::size_t max_bytes = std::size_t{1} << 30;
};
inline plan_cache& plans() {
    static plan_cache c;
    return c;
}
}  // namespace detail

inline void clear_hankel_cache() {
    auto& c = detail::plans();
    std::lock_guard<std::mutex> lk(c.mu);
    c.map.clear();
    c.bytes = 0;
}

inline plan_ptr hankel_plan_for(const grid_ptr& rg, const grid_ptr& kg, double nu) {
    auto& c = detail::plans();
    auto key = std::make_tuple(detail::key_of(*rg), detail::key_of(*kg), std::llround(nu * 1024.0));
    {
        std::lock_guard<std::mutex> lk(c.mu);
        auto it = c.map.find(key);
        if (it != c.map.end()) return it->second;
    }
    auto p = std::make_shared<hankel_plan>();
    p->rg = rg;
    p->kg = kg;
    p->nu = nu;
    const auto Nr = rg->size(), Nk = kg->size();
    p->K.resize(Nr, Nk);
    parallel_for(Nr, [&](std::size_t i) {
        for (std::size_t j = 0; j < Nk; ++j) {
            double x = rg->r[i] * kg->r[j];
            p->K(i, j) = std::sqrt(x) * bessel_j(nu, x);
        }
    });
    const std::size_t size = sizeof(double) * Nr * Nk;
    std::lock_guard<std::mutex> lk(c.mu);
    // plans already handed out stay alive through their shared_ptr
    if (c.bytes + size > c.max_bytes) {
        c.map.clear();
        c.bytes = 0;
    }
    auto [it, fresh] = c.map.emplace(key, p);
    if (fresh) c.bytes += size;
    return it->second;
}

// Hankel order for degree-k harmonics in dimension n.
inline double hankel_order(int k, int n) { return k + 0.5 * (n - 2); }

// Throws when a significant part of `f` sits on nodes too coarse to carry
// four samples per oscillation of exp(i X x).
inline void check_nyquist(const radial_grid& g, const cvec& f, double X, const char* what) {
    double mx = 0;
    for (auto& z : f) mx = std::max(mx, std::abs(z));
    if (mx == 0) return;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(f[i]) > 1e-9 * mx && g.dr[i] * X > 0.5 * pi)
            throw resolution_error(std::string(what) + ": fewer than 4 nodes per oscillation at x = " +
                                   std::to_string(g.r[i]));
    }
}

// Frequency profile -> position profile for a degree-k channel:
// g(r) = (2pi)^{n/2} i^{-k} r^{-(n-2)/2} int c(rho) J_{k+(n-2)/2}(r rho) rho^{n/2} drho.
inline cvec hankel_synthesize(const cvec& c, int k, int n, const grid_ptr& kg, const grid_ptr& rg) {
    check_nyquist(*kg, c, rg->r_max, "hankel_synthesize");
    auto plan = hankel_plan_for(rg, kg, hankel_order(k, n));
    cplx ph = std::pow(2.0 * pi, 0.5 * n) * ipow(-k);
    cvec a(kg->size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = ph * std::pow(kg->r[j], 0.5 * (n - 1)) * c[j];
    cvec psi = plan->to_pos(a);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::pow(rg->r[i], -0.5 * (n - 1));
    return psi;
}

// Position profile -> frequency profile (inverse of hankel_synthesize).
inline cvec hankel_analyze(const cvec& g, int k, int n, const grid_ptr& rg, const grid_ptr& kg) {
    check_nyquist(*rg, g, kg->r_max, "hankel_analyze");
    auto plan = hankel_plan_for(rg, kg, hankel_order(k, n));
    cvec psi(rg->size());
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = std::pow(rg->r[i], 0.5 * (n - 1)) * g[i];
    cvec a = plan->to_freq(psi);
    cplx ph = std::pow(2.0 * pi, -0.5 * n) * ipow(k);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] *= ph * std::pow(kg->r[j], -0.5 * (n - 1));
    return a;
}

// ----------------------------------------------------------- channel data

struct channel_profile {
    int k = 0;  // harmonic degree
    int l = 1;  // index within the degree-k space, 1..d_k
    cvec v;     // samples on the owning grid
};
using channel_set = std::vector<channel_profile>;

// (sum_k <k>^{2 sigma} || rho^s fcheck rho^{(n-1)/2} ||^2)^{1/2} on the frequency grid.
inline double channel_sobolev_norm(const channel_set& ch, double s, double sigma, int n,
                                   const radial_grid& kg) {
    double tot = 0;
    for (auto& c : ch) {
        double wk = std::pow(1.0 + double(c.k) * c.k, sigma);
        double acc = 0;
        for (std::size_t j = 0; j < kg.size(); ++j)
            acc += kg.w[j] * std::norm(c.v[j]) * std::pow(kg.r[j], 2.0 * s + n - 1);
        tot += wk * acc;
    }
    return std::sqrt(tot);
}

// Position-side (sum ||<k>^sigma g r^{(n-1)/2}||^2 + ||<k>^sigma grad g||^2 terms)
// pieces: returns {L2, gradient} norms with the <k>^sigma channel weight.
struct position_norms {
    double l2 = 0, grad = 0;
};
inline position_norms channel_position_norms(const channel_set& ch, double sigma, int n,
                                             const radial_grid& rg) {
    position_norms out;
    double a = 0, b = 0;
    for (auto& c : ch) {
        double wk = std::pow(1.0 + double(c.k) * c.k, sigma);
        cvec d = radial_derivative(rg, c.v, 6);
        double lam = double(c.k) * (c.k + n - 2);
        for (std::size_t i = 0; i < rg.size(); ++i) {
            double r = rg.r[i], rn = std::pow(r, n - 1);
            a += wk * rg.w[i] * std::norm(c.v[i]) * rn;
            b += wk * rg.w[i] * (std::norm(d[i]) + lam * std::norm(c.v[i]) / (r * r)) * rn;
        }
    }
    out.l2 = std::sqrt(a);
    out.grad = std::sqrt(b);
    return out;
}

// {||f/|x|||, ||grad f||} for position-side channels.
inline std::pair<double, double> hardy_witness(const channel_set& ch, int n, const radial_grid& rg) {
    double a = 0;
    for (auto& c : ch)
        for (std::size_t i = 0; i < rg.size(); ++i)
            a += rg.w[i] * std::norm(c.v[i]) * std::pow(rg.r[i], n - 3);
    return {std::sqrt(a), channel_position_norms(ch, 0.0, n, rg).grad};
}

}  // namespace pwave
