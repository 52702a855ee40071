#pragma once

#include <cmath>
#include <functional>

#include "pwave/common.hpp"
#include "pwave/propagators.hpp"
#include "pwave/radial.hpp"
#include "pwave/sphere.hpp"

namespace pwave {

// How a profile relates to the field on the sphere of radius r:
// scalar   u(r w)  = sum_c p_c(r) Y_c(w)
// reduced  u(r w)  = (1/r) sum_c p_c(r) Phi_c(w)   (Dirac partial waves)
enum class profile_kind { scalar, reduced };

struct trajectory {
    int dim = 3;
    grid_ptr grid;
    profile_kind kind = profile_kind::scalar;
    std::vector<int> degree;  // angular degree of each component
    rvec times;
    std::vector<std::vector<cvec>> frames;  // frames[t][component][r]

    std::size_t components() const { return degree.size(); }
};

inline trajectory make_dirac_trajectory(const grid_ptr& g, const std::vector<spinor_label>& labels) {
    trajectory tr;
    tr.dim = 3;
    tr.grid = g;
    tr.kind = profile_kind::reduced;
    for (auto& l : labels) {
        tr.degree.push_back(l.ell_plus());
        tr.degree.push_back(l.ell_minus());
    }
    return tr;
}

inline std::vector<cvec> dirac_frame(const dirac_state& st) {
    std::vector<cvec> f;
    for (auto& c : st.ch) {
        f.push_back(c.plus);
        f.push_back(c.minus);
    }
    return f;
}

inline double lambda_weight(int l, int n, double s) {
    return std::pow(1.0 + double(l) * (l + n - 2), 0.5 * s);
}

// ||Lambda^s u(r .)||^2_{L^2(S^{n-1})} at node i.
inline double angular_density(const trajectory& tr, const std::vector<cvec>& fr, std::size_t i, double s = 0.0) {
    double acc = 0;
    for (std::size_t c = 0; c < tr.components(); ++c) acc += sq(lambda_weight(tr.degree[c], tr.dim, s)) * std::norm(fr[c][i]);
    if (tr.kind == profile_kind::reduced) acc /= sq(tr.grid->r[i]);
    return acc;
}

// |grad Lambda^s u|^2 integrated over the sphere of radius r, at every node.
inline rvec gradient_density(const trajectory& tr, const std::vector<cvec>& fr, double s = 0.0) {
    const auto& g = *tr.grid;
    rvec out(g.size(), 0.0);
    for (std::size_t c = 0; c < tr.components(); ++c) {
        double lw = sq(lambda_weight(tr.degree[c], tr.dim, s));
        int l = tr.degree[c];
        cvec d = radial_derivative(g, fr[c], 6);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double r = g.r[i];
            if (tr.kind == profile_kind::scalar) {
                out[i] += lw * (std::norm(d[i]) + double(l) * (l + tr.dim - 2) * std::norm(fr[c][i]) / (r * r));
            } else {
                // u = psi/r: |d_r u|^2 = |psi' - psi/r|^2 / r^2
                out[i] += lw * (std::norm(d[i] - fr[c][i] / r) + double(l) * (l + 1) * std::norm(fr[c][i]) / (r * r)) / (r * r);
            }
        }
    }
    return out;
}

// Trapezoid rule over the frames with t <= t_end.
inline double time_integral(const rvec& t, const rvec& f, double t_end) {
    double s = 0;
    for (std::size_t m = 1; m < t.size() && t[m] <= t_end + 1e-12; ++m) s += 0.5 * (t[m] - t[m - 1]) * (f[m] + f[m - 1]);
    return s;
}

struct norm_report {
    double value = 0;
    double T = 0;  // length of the time window actually used
};

inline double window_end(const trajectory& tr, double t_end) {
    double T = 0;
    for (double t : tr.times)
        if (t <= t_end + 1e-12) T = t;
    return T;
}

// ||Lambda^s u||_{L^2_t L^infty_r L^2_omega} on [0, t_end].
inline norm_report mixed_endpoint_norm(const trajectory& tr, double s = 0.0, double t_end = 1e300) {
    rvec sup(tr.times.size(), 0.0);
    for (std::size_t m = 0; m < tr.times.size(); ++m)
        for (std::size_t i = 0; i < tr.grid->size(); ++i) sup[m] = std::max(sup[m], angular_density(tr, tr.frames[m], i, s));
    return {std::sqrt(time_integral(tr.times, sup, t_end)), window_end(tr, t_end)};
}

// Time integral of the radial mean of ||u(r .)||^2, normalised by the radial
// extent of the grid; never exceeds the endpoint norm.
inline norm_report mean_radial_proxy(const trajectory& tr, double t_end = 1e300) {
    const auto& g = *tr.grid;
    double len = 0;
    for (double w : g.w) len += w;
    rvec mean(tr.times.size(), 0.0);
    for (std::size_t m = 0; m < tr.times.size(); ++m) {
        for (std::size_t i = 0; i < g.size(); ++i) mean[m] += g.w[i] * angular_density(tr, tr.frames[m], i);
        mean[m] /= len;
    }
    return {std::sqrt(time_integral(tr.times, mean, t_end)), window_end(tr, t_end)};
}

// ||weight^{-1/2} Lambda^s u||_{L^2_t L^2_x}; with gradient = true the
// integrand is |grad Lambda^s u|^2 instead.
inline norm_report smoothing_norm(const trajectory& tr, const std::function<double(double)>& weight, double s = 0.0,
                                  bool gradient = false, double t_end = 1e300) {
    const auto& g = *tr.grid;
    rvec winv(g.size()), rn(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        winv[i] = 1.0 / weight(g.r[i]);
        rn[i] = std::pow(g.r[i], tr.dim - 1);
    }
    rvec per(tr.times.size(), 0.0);
    for (std::size_t m = 0; m < tr.times.size(); ++m) {
        if (tr.times[m] > t_end + 1e-12) break;
        if (gradient) {
            rvec d = gradient_density(tr, tr.frames[m], s);
            for (std::size_t i = 0; i < g.size(); ++i) per[m] += g.w[i] * d[i] * winv[i] * rn[i];
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) per[m] += g.w[i] * angular_density(tr, tr.frames[m], i, s) * winv[i] * rn[i];
        }
    }
    return {std::sqrt(time_integral(tr.times, per, t_end)), window_end(tr, t_end)};
}

// ||Lambda^s u(t)||_{H^1} with H^1 = L^2 + homogeneous H^1.
inline double frame_h1(const trajectory& tr, const std::vector<cvec>& fr, double s = 0.0) {
    const auto& g = *tr.grid;
    rvec d = gradient_density(tr, fr, s);
    double acc = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        acc += g.w[i] * (angular_density(tr, fr, i, s) + d[i]) * std::pow(g.r[i], tr.dim - 1);
    return std::sqrt(acc);
}

inline double frame_hdot1(const trajectory& tr, const std::vector<cvec>& fr, double s = 0.0) {
    const auto& g = *tr.grid;
    rvec d = gradient_density(tr, fr, s);
    double acc = 0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += g.w[i] * d[i] * std::pow(g.r[i], tr.dim - 1);
    return std::sqrt(acc);
}

inline double frame_l2(const trajectory& tr, const std::vector<cvec>& fr, double s = 0.0) {
    const auto& g = *tr.grid;
    double acc = 0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += g.w[i] * angular_density(tr, fr, i, s) * std::pow(g.r[i], tr.dim - 1);
    return std::sqrt(acc);
}

struct x_norm_report {
    double value = 0, endpoint = 0, energy = 0, T = 0;
};

// ||Lambda^s u||_{L^2 L^infty L^2_omega} + ||Lambda^s u||_{L^infty H^1}.
inline x_norm_report x_norm(const trajectory& tr, double s, double t_end = 1e300) {
    if (s <= 1.0) throw domain_error("x_norm: need s > 1");
    x_norm_report r;
    auto e = mixed_endpoint_norm(tr, s, t_end);
    r.endpoint = e.value;
    r.T = e.T;
    for (std::size_t m = 0; m < tr.times.size() && tr.times[m] <= t_end + 1e-12; ++m)
        r.energy = std::max(r.energy, frame_h1(tr, tr.frames[m], s));
    r.value = r.endpoint + r.energy;
    return r;
}

// Both sides of the weighted Fourier transfer inequality for frequency-side
// channels fcheck_k:
//   lhs = sum <k>^{2 sigma} || <y>^s F_{l->y}(1_+ l^{(n-1)/2} fcheck_k) ||^2
//   rhs = (2 pi)^{1-n} sum <k>^{2 sigma} || <x>^s g_k ||^2_{L^2(r^{n-1} dr)}
// with g_k the position-side profiles.  For s = 0 the two agree (Plancherel
// in both variables); for s = 1 lhs <= rhs.
struct transfer_report {
    double lhs = 0, rhs = 0;
};

inline transfer_report weighted_transfer_check(const channel_set& fcheck, int s, double sigma, int n,
                                               const grid_ptr& kg, const grid_ptr& rg, double y_max = 0.0) {
    if (s != 0 && s != 1) throw domain_error("weighted_transfer_check: s must be 0 or 1");
    const auto& K = *kg;
    if (y_max <= 0.0) y_max = 0.5 * pi / K.dr.back();
    double lam_max = 0;
    for (auto& c : fcheck) lam_max = std::max(lam_max, significant_extent(K, c.v));
    const double dy = 0.25 * pi / std::max(lam_max, 1e-3);
    const int M = static_cast<int>(std::ceil(y_max / dy));
    transfer_report out;
    for (auto& c : fcheck) {
        check_nyquist(K, c.v, y_max, "weighted_transfer_check");
        double wk = std::pow(1.0 + double(c.k) * c.k, sigma);
        cvec h(K.size());
        for (std::size_t j = 0; j < K.size(); ++j) h[j] = K.w[j] * std::pow(K.r[j], 0.5 * (n - 1)) * c.v[j];
        rvec vals(2 * M + 1);
        parallel_for(vals.size(), [&](std::size_t m) {
            double y = (double(m) - M) * dy;
            cplx acc = 0;
            for (std::size_t j = 0; j < K.size(); ++j) acc += h[j] * std::exp(I * (y * K.r[j]));
            vals[m] = std::norm(acc) * (s == 1 ? 1.0 + y * y : 1.0);
        });
        double acc = 0;
        for (std::size_t m = 0; m < vals.size(); ++m) acc += vals[m] * ((m == 0 || m + 1 == vals.size()) ? 0.5 : 1.0);
        out.lhs += wk * acc * dy;
        cvec g = hankel_synthesize(c.v, c.k, n, kg, rg);
        double pr = 0;
        for (std::size_t i = 0; i < rg->size(); ++i) {
            double r = rg->r[i];
            pr += rg->w[i] * std::norm(g[i]) * std::pow(r, n - 1) * (s == 1 ? 1.0 + r * r : 1.0);
        }
        out.rhs += wk * pr * std::pow(2.0 * pi, 1 - n);
    }
    return out;
}

}  // namespace pwave
