#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>

#include "pwave/common.hpp"
#include "pwave/radial.hpp"
#include "pwave/specfun.hpp"
#include "pwave/sphere.hpp"

namespace pwave {

// Largest node carrying a non-negligible sample of f.
inline double significant_extent(const radial_grid& g, const cvec& f, double tol = 1e-12) {
    double mx = 0;
    for (auto& z : f) mx = std::max(mx, std::abs(z));
    double ext = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(f[i]) > tol * mx) ext = g.r[i];
    return ext;
}

// ------------------------------------------------------------ scalar wave

// Frames u(r, t_m) = e^{i t_m |D|} f for one degree-k channel, as columns.
// half_wave = false gives cos(t|D|) f instead.
inline Eigen::MatrixXcd wave_frames(const cvec& fcheck, int k, int n, const rvec& times, const grid_ptr& kg,
                                    const grid_ptr& rg, bool half_wave = true) {
    double tmax = 0;
    for (double t : times) tmax = std::max(tmax, std::abs(t));
    check_nyquist(*kg, fcheck, rg->r_max + tmax, "wave_frames");
    auto plan = hankel_plan_for(rg, kg, hankel_order(k, n));
    const auto Nk = kg->size(), Nt = times.size();
    cplx ph = std::pow(2.0 * pi, 0.5 * n) * ipow(-k);
    Eigen::MatrixXcd A(Nk, Nt);
    for (std::size_t j = 0; j < Nk; ++j) {
        cplx a = ph * std::pow(kg->r[j], 0.5 * (n - 1)) * fcheck[j];
        for (std::size_t m = 0; m < Nt; ++m) {
            double p = times[m] * kg->r[j];
            A(j, m) = a * (half_wave ? std::exp(I * p) : cplx(std::cos(p)));
        }
    }
    Eigen::MatrixXcd U = plan->to_pos(A);
    for (std::size_t i = 0; i < rg->size(); ++i) U.row(i) *= std::pow(rg->r[i], -0.5 * (n - 1));
    return U;
}

inline cvec wave_channel_evolve_multiplier(const cvec& fcheck, int k, int n, double t, const grid_ptr& kg,
                                           const grid_ptr& rg, bool half_wave = true) {
    Eigen::MatrixXcd U = wave_frames(fcheck, k, n, {t}, kg, rg, half_wave);
    return cvec(U.data(), U.data() + U.rows());
}

struct qrep_options {
    int lambda_nodes = 0;       // 0 selects per radius automatically
    double mu_oversample = 32;  // mu-grid samples per shortest period of ghat
};

// e^{it|D|} f for one channel through the kernel representation
// u(r,t) = 2 pi^{(n-1)/2} int_{-1}^{1} Q_k(l) ghat(t + l r) dl,
// ghat(mu) = int_0^inf e^{i mu rho} rho^{n-1} fcheck(rho) drho.
inline cvec wave_channel_evolve_qrep(const cvec& fcheck, int k, int n, double t, const grid_ptr& kg,
                                     const grid_ptr& rg, qrep_options opt = {}) {
    if (n < 3) throw domain_error("wave_channel_evolve_qrep: need n >= 3");
    const double rho_max = std::max(significant_extent(*kg, fcheck), 1e-3);
    check_nyquist(*kg, fcheck, rg->r_max + std::abs(t), "wave_channel_evolve_qrep");
    const double a = q_alpha(n);
    // Samples of ghat on a uniform mu-grid, then 6-point Lagrange interpolation.
    const double dmu = 2.0 * pi / (rho_max * opt.mu_oversample);
    const double mu0 = t - rg->r_max - 4 * dmu;
    const int M = static_cast<int>(std::ceil((2.0 * rg->r_max + 8 * dmu) / dmu)) + 1;
    cvec gh(M);
    cvec wf(kg->size());
    for (std::size_t j = 0; j < kg->size(); ++j) wf[j] = kg->w[j] * std::pow(kg->r[j], n - 1) * fcheck[j];
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t m) {
        double mu = mu0 + m * dmu;
        cplx s = 0;
        for (std::size_t j = 0; j < kg->size(); ++j) s += wf[j] * std::exp(I * (mu * kg->r[j]));
        gh[m] = s;
    });
    auto interp = [&](double mu) {
        double x = (mu - mu0) / dmu;
        int i0 = static_cast<int>(std::floor(x)) - 2;
        i0 = std::clamp(i0, 0, M - 6);
        cplx s = 0;
        for (int p = 0; p < 6; ++p) {
            double L = 1;
            for (int q = 0; q < 6; ++q)
                if (q != p) L *= (x - (i0 + q)) / double(p - q);
            s += L * gh[i0 + p];
        }
        return s;
    };
    const double pref = 2.0 * std::pow(pi, 0.5 * (n - 1)) * (k % 2 == 0 ? 1.0 : -1.0) *
                        std::exp(std::lgamma(k + 1.0) - std::lgamma(k + a + 1.0));
    cvec out(rg->size());
    parallel_for(rg->size(), [&](std::size_t i) {
        double r = rg->r[i];
        int need = static_cast<int>(std::ceil(0.5 * k + 0.7 * rho_max * r)) + 12;
        int m = opt.lambda_nodes > 0 ? opt.lambda_nodes : 16 * (static_cast<int>(1.5 * need) / 16 + 1);
        if (m < need) throw resolution_error("wave_channel_evolve_qrep: lambda grid too coarse for r = " + std::to_string(r));
        const quadrature& q = gauss_jacobi_sym(m, a);
        cplx s = 0;
        for (int p = 0; p < m; ++p) s += q.w[p] * jacobi_eval(k, a, a, q.x[p]) * interp(t + q.x[p] * r);
        out[i] = pref * s;
    });
    return out;
}

// int_0^t e^{i(t-s)|D|} F(s) ds for one channel, trapezoid rule on the
// forcing's time grid.  Output frame m is at time s_grid[m].
inline Eigen::MatrixXcd wave_duhamel_channel(const std::vector<cvec>& Fcheck, const rvec& s_grid, int k, int n,
                                             const grid_ptr& kg, const grid_ptr& rg) {
    if (Fcheck.size() != s_grid.size() || s_grid.empty()) throw domain_error("wave_duhamel_channel: size mismatch");
    double rho_max = 0;
    for (auto& F : Fcheck) rho_max = std::max(rho_max, significant_extent(*kg, F));
    for (std::size_t m = 1; m < s_grid.size(); ++m)
        if ((s_grid[m] - s_grid[m - 1]) * rho_max > 0.25 * pi)
            throw resolution_error("wave_duhamel_channel: time grid too coarse for the forcing bandwidth");
    const auto Nk = kg->size(), Nt = s_grid.size();
    double tmax = s_grid.back();
    for (auto& F : Fcheck) check_nyquist(*kg, F, rg->r_max + tmax, "wave_duhamel_channel");
    // cumulative int_0^t e^{-is rho} F(s) ds, then multiply by e^{it rho}
    Eigen::MatrixXcd A(Nk, Nt);
    cvec acc(Nk, 0.0), prev(Nk, 0.0);
    for (std::size_t m = 0; m < Nt; ++m) {
        cvec cur(Nk);
        for (std::size_t j = 0; j < Nk; ++j) cur[j] = std::exp(-I * (s_grid[m] * kg->r[j])) * Fcheck[m][j];
        if (m > 0) {
            double ds = s_grid[m] - s_grid[m - 1];
            for (std::size_t j = 0; j < Nk; ++j) acc[j] += 0.5 * ds * (prev[j] + cur[j]);
        }
        for (std::size_t j = 0; j < Nk; ++j) A(j, m) = std::exp(I * (s_grid[m] * kg->r[j])) * acc[j];
        prev = cur;
    }
    auto plan = hankel_plan_for(rg, kg, hankel_order(k, n));
    cplx ph = std::pow(2.0 * pi, 0.5 * n) * ipow(-k);
    for (std::size_t j = 0; j < Nk; ++j) A.row(j) *= ph * std::pow(kg->r[j], 0.5 * (n - 1));
    Eigen::MatrixXcd U = plan->to_pos(A);
    for (std::size_t i = 0; i < rg->size(); ++i) U.row(i) *= std::pow(rg->r[i], -0.5 * (n - 1));
    return U;
}

// ------------------------------------------------------------ Dirac, free

using mat4 = Eigen::Matrix4cd;

// alpha_1, alpha_2, alpha_3 (k = 0, 1, 2) of D = -i sum alpha_k d_k.
inline mat4 dirac_alpha(int k) {
    mat4 a = mat4::Zero();
    if (k == 0) {
        a(0, 3) = a(1, 2) = a(2, 1) = a(3, 0) = 1.0;
    } else if (k == 1) {
        a(0, 3) = -I;
        a(1, 2) = I;
        a(2, 1) = -I;
        a(3, 0) = I;
    } else if (k == 2) {
        a(0, 2) = a(2, 0) = 1.0;
        a(1, 3) = a(3, 1) = -1.0;
    } else {
        throw domain_error("dirac_alpha: index must be 0, 1 or 2");
    }
    return a;
}

inline mat4 dirac_beta() { return mat4(Eigen::Vector4cd(1.0, 1.0, -1.0, -1.0).asDiagonal()); }

struct radial_pair {
    cvec plus, minus;
};

// Channel action of D = -i alpha . grad:
// phi^+ = -psi^-' + (kappa/r) psi^-,  phi^- = psi^+' + (kappa/r) psi^+.
inline radial_pair dirac_radial_apply(const cvec& psi_p, const cvec& psi_m, int kappa, const radial_grid& g,
                                      int order = 2) {
    cvec dp = radial_derivative(g, psi_p, order), dm = radial_derivative(g, psi_m, order);
    radial_pair out{cvec(g.size()), cvec(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) {
        double kr = kappa / g.r[i];
        out.plus[i] = -dm[i] + kr * psi_m[i];
        out.minus[i] = dp[i] + kr * psi_p[i];
    }
    return out;
}

// sin(t rho)/rho with the rho -> 0 limit t.
inline double sin_over(double t, double rho) {
    double x = t * rho;
    if (std::abs(x) < 1e-4) return t * (1.0 - x * x / 6.0);
    return std::sin(x) / rho;
}

// Spectral coefficients of a Dirac channel in the unitary Hankel basis:
// psi^{+-}(r) = int a^{+-}(rho) sqrt(r rho) J_{l+-+1/2}(r rho) drho.  In
// these coordinates D acts as sign(kappa) rho [[0,1],[1,0]].
struct dirac_spectral {
    grid_ptr rg, kg;
    std::vector<spinor_label> labels;
    std::vector<cvec> ap, am;
};

inline dirac_spectral dirac_to_freq(const dirac_state& st, const grid_ptr& kg) {
    dirac_spectral sp{st.grid, kg, {}, {}, {}};
    const std::size_t C = st.ch.size();
    sp.labels.resize(C);
    sp.ap.resize(C);
    sp.am.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        auto& ch = st.ch[c];
        check_nyquist(*st.grid, ch.plus, kg->r_max, "dirac_to_freq");
        check_nyquist(*st.grid, ch.minus, kg->r_max, "dirac_to_freq");
    }
    parallel_for(C, [&](std::size_t c) {
        auto& ch = st.ch[c];
        sp.labels[c] = ch.label;
        sp.ap[c] = hankel_plan_for(st.grid, kg, ch.label.ell_plus() + 0.5)->to_freq(ch.plus);
        sp.am[c] = hankel_plan_for(st.grid, kg, ch.label.ell_minus() + 0.5)->to_freq(ch.minus);
    });
    return sp;
}

inline dirac_state dirac_to_pos(const dirac_spectral& sp) {
    dirac_state st;
    st.grid = sp.rg;
    st.ch.resize(sp.labels.size());
    for (std::size_t c = 0; c < sp.labels.size(); ++c) {
        check_nyquist(*sp.kg, sp.ap[c], sp.rg->r_max, "dirac_to_pos");
        check_nyquist(*sp.kg, sp.am[c], sp.rg->r_max, "dirac_to_pos");
    }
    parallel_for(sp.labels.size(), [&](std::size_t c) {
        st.ch[c].label = sp.labels[c];
        st.ch[c].plus = hankel_plan_for(sp.rg, sp.kg, sp.labels[c].ell_plus() + 0.5)->to_pos(sp.ap[c]);
        st.ch[c].minus = hankel_plan_for(sp.rg, sp.kg, sp.labels[c].ell_minus() + 0.5)->to_pos(sp.am[c]);
    });
    return st;
}

// e^{itD} = cos(t|D|) + i sin(t|D|)/|D| D, applied exactly in frequency.
inline void dirac_free_evolve_spectral(dirac_spectral& sp, double t) {
    const auto& kg = *sp.kg;
    for (std::size_t c = 0; c < sp.labels.size(); ++c) {
        double s = sp.labels[c].kappa > 0 ? 1.0 : -1.0;
        auto& ap = sp.ap[c];
        auto& am = sp.am[c];
        for (std::size_t j = 0; j < kg.size(); ++j) {
            double rho = kg.r[j];
            double cs = std::cos(t * rho), so = sin_over(t, rho);
            cplx dp = s * rho * am[j], dm = s * rho * ap[j];  // D a
            cplx np = cs * ap[j] + I * so * dp;
            cplx nm = cs * am[j] + I * so * dm;
            ap[j] = np;
            am[j] = nm;
        }
    }
}

inline dirac_state dirac_free_evolve(const dirac_state& st, double t, const grid_ptr& kg) {
    auto sp = dirac_to_freq(st, kg);
    dirac_free_evolve_spectral(sp, t);
    return dirac_to_pos(sp);
}

// --------------------------------------------------------- banded solver

// LU without pivoting for complex banded matrices whose Hermitian part is
// positive definite (the Crank-Nicolson matrices below).
struct banded_lu {
    int n = 0, p = 0;
    std::vector<cplx> a;  // row-major band storage, width 2p+1
    cplx& at(int i, int j) { return a[static_cast<std::size_t>(i) * (2 * p + 1) + (j - i + p)]; }
    cplx at(int i, int j) const { return a[static_cast<std::size_t>(i) * (2 * p + 1) + (j - i + p)]; }

    banded_lu() = default;
    banded_lu(int n_, int p_) : n(n_), p(p_), a(static_cast<std::size_t>(n_) * (2 * p_ + 1), 0.0) {}

    void factor() {
        for (int k = 0; k < n; ++k) {
            cplx piv = at(k, k);
            if (std::abs(piv) < 1e-300) throw domain_error("banded_lu: zero pivot");
            for (int i = k + 1; i <= std::min(n - 1, k + p); ++i) {
                cplx l = at(i, k) / piv;
                at(i, k) = l;
                for (int j = k + 1; j <= std::min(n - 1, k + p); ++j) at(i, j) -= l * at(k, j);
            }
        }
    }
    void solve(cvec& b) const {
        for (int i = 0; i < n; ++i)
            for (int j = std::max(0, i - p); j < i; ++j) b[i] -= at(i, j) * b[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j <= std::min(n - 1, i + p); ++j) b[i] -= at(i, j) * b[j];
            b[i] /= at(i, i);
        }
    }
};

// Radial potential acting on a Dirac partial wave as v0(r) + v1(r) beta.
// Both pieces preserve the channel structure.
struct dirac_radial_potential {
    std::function<double(double)> v0, v1;
    bool empty() const { return !v0 && !v1; }
};

// Crank-Nicolson propagator for i u_t = (D + V) u in one kappa sector
// (unitary for every kappa; the zero-ghost closure at r_min loses accuracy
// in psi/r for j = 1/2, where the l = 0 component has psi ~ r):
// (I + i dt/2 A) u_new = (I - i dt/2 A) u_old.  A is self-adjoint for the
// inner product sum dr_i (|psi^+|^2 + |psi^-|^2), so the step is unitary.
struct dirac_cn_operator {
    grid_ptr g;
    int kappa = 1;
    double dt = 0;
    banded_lu lhs;
    std::vector<cplx> S;  // symmetric band of W A, interleaved, width 2p+1
    int p = 0;

    dirac_cn_operator(const grid_ptr& grid, int kappa_, double dt_, const dirac_radial_potential& V) :
        g(grid), kappa(kappa_), dt(dt_) {
        const int N = static_cast<int>(g->size());
        skew_difference D(6);
        p = 2 * D.half + 1;
        const int n2 = 2 * N;
        std::vector<double> band(static_cast<std::size_t>(n2) * (2 * p + 1), 0.0);
        auto B = [&](int i, int j) -> double& { return band[static_cast<std::size_t>(i) * (2 * p + 1) + (j - i + p)]; };
        for (int i = 0; i < N; ++i) {
            double r = g->r[i], w = g->dr[i];
            double v0 = V.v0 ? V.v0(r) : 0.0, v1 = V.v1 ? V.v1(r) : 0.0;
            B(2 * i, 2 * i) = w * (v0 + v1);
            B(2 * i + 1, 2 * i + 1) = w * (v0 - v1);
            // + row: (-D + k/r) psi^-,  - row: (D + k/r) psi^+
            B(2 * i, 2 * i + 1) += w * kappa / r;
            B(2 * i + 1, 2 * i) += w * kappa / r;
            for (int m = 1; m <= D.half; ++m) {
                double c = D.c[m - 1];
                if (i + m < N) {
                    B(2 * i, 2 * (i + m) + 1) -= c;
                    B(2 * i + 1, 2 * (i + m)) += c;
                }
                if (i - m >= 0) {
                    B(2 * i, 2 * (i - m) + 1) += c;
                    B(2 * i + 1, 2 * (i - m)) -= c;
                }
            }
        }
        S.assign(band.begin(), band.end());
        lhs = banded_lu(n2, p);
        for (int i = 0; i < n2; ++i) {
            for (int j = std::max(0, i - p); j <= std::min(n2 - 1, i + p); ++j) {
                double w = (i == j) ? g->dr[i / 2] : 0.0;
                lhs.at(i, j) = w + I * (0.5 * dt) * B(i, j);
            }
        }
        lhs.factor();
    }

    // In-place step of one channel.
    void step(cvec& plus, cvec& minus) const {
        const int N = static_cast<int>(g->size()), n2 = 2 * N;
        cvec u(n2), b(n2);
        for (int i = 0; i < N; ++i) {
            u[2 * i] = plus[i];
            u[2 * i + 1] = minus[i];
        }
        for (int i = 0; i < n2; ++i) {
            cplx s = g->dr[i / 2] * u[i];
            for (int j = std::max(0, i - p); j <= std::min(n2 - 1, i + p); ++j)
                s -= I * (0.5 * dt) * S[static_cast<std::size_t>(i) * (2 * p + 1) + (j - i + p)] * u[j];
            b[i] = s;
        }
        lhs.solve(b);
        for (int i = 0; i < N; ++i) {
            plus[i] = b[2 * i];
            minus[i] = b[2 * i + 1];
        }
    }
};

// sum dr_i (|psi^+|^2 + |psi^-|^2): the norm conserved by the CN step.
inline double dirac_operator_norm(const dirac_state& st) {
    double t = 0;
    for (auto& c : st.ch)
        for (std::size_t i = 0; i < st.grid->size(); ++i)
            t += st.grid->dr[i] * (std::norm(c.plus[i]) + std::norm(c.minus[i]));
    return std::sqrt(t);
}

// Caches one CN operator per kappa and steps a whole state.
class dirac_cn_stepper {
public:
    dirac_cn_stepper(grid_ptr g, double dt, dirac_radial_potential V = {}) : g_(std::move(g)), dt_(dt), V_(std::move(V)) {}

    void step(dirac_state& st) {
        for (auto& c : st.ch) op(c.label.kappa).step(c.plus, c.minus);
    }
    const dirac_cn_operator& op(int kappa) {
        auto it = ops_.find(kappa);
        if (it == ops_.end()) it = ops_.emplace(kappa, std::make_unique<dirac_cn_operator>(g_, kappa, dt_, V_)).first;
        return *it->second;
    }
    double dt() const { return dt_; }

private:
    grid_ptr g_;
    double dt_;
    dirac_radial_potential V_;
    std::map<int, std::unique_ptr<dirac_cn_operator>> ops_;
};

inline void dirac_cn_step(dirac_state& st, double dt, const dirac_radial_potential& V = {}) {
    dirac_cn_stepper s(st.grid, dt, V);
    s.step(st);
}

// ------------------------------------------------ wave with a potential

// Crank-Nicolson for u_tt + L u = F in one degree-k channel, written for the
// reduced profile psi = r^{(n-1)/2} u with
// L = B* B + V,  B = d/dr + c/r,  c = k + (n-3)/2.
// Discrete B uses the skew difference, so L is self-adjoint for the dr
// inner product and the discrete energy is conserved exactly when F = 0.
// The zero ghost values at r_min are accurate only when psi decays fast
// there; for k = 0, n = 3 (psi ~ r) use wave_potential_split_evolve.
class wave_cn_channel {
public:
    wave_cn_channel(grid_ptr g, int k, int n, double dt, std::function<double(double)> V = {}) :
        g_(std::move(g)), k_(k), n_(n), dt_(dt) {
        const int N = static_cast<int>(g_->size());
        skew_difference D(6);
        const double c = k + 0.5 * (n - 3);
        // B as a dense band (half width 3), then W L = B^T W B + W V (half width 6)
        const int hb = D.half;
        p_ = 2 * hb;
        Bm_.assign(static_cast<std::size_t>(N) * (2 * hb + 1), 0.0);
        auto Bat = [&](int i, int j) -> double& { return Bm_[static_cast<std::size_t>(i) * (2 * hb + 1) + (j - i + hb)]; };
        for (int i = 0; i < N; ++i) {
            Bat(i, i) = c / g_->r[i];
            for (int m = 1; m <= hb; ++m) {
                if (i + m < N) Bat(i, i + m) += D.c[m - 1] / g_->dr[i];
                if (i - m >= 0) Bat(i, i - m) -= D.c[m - 1] / g_->dr[i];
            }
        }
        SL_.assign(static_cast<std::size_t>(N) * (2 * p_ + 1), 0.0);
        auto S = [&](int i, int j) -> double& { return SL_[static_cast<std::size_t>(i) * (2 * p_ + 1) + (j - i + p_)]; };
        for (int m = 0; m < N; ++m) {
            for (int i = std::max(0, m - hb); i <= std::min(N - 1, m + hb); ++i)
                for (int j = std::max(0, m - hb); j <= std::min(N - 1, m + hb); ++j)
                    S(i, j) += Bat(m, i) * g_->dr[m] * Bat(m, j);
        }
        vdiag_.assign(N, 0.0);
        if (V)
            for (int i = 0; i < N; ++i) {
                vdiag_[i] = V(g_->r[i]);
                S(i, i) += g_->dr[i] * vdiag_[i];
            }
        lhs_ = banded_lu(N, p_);
        for (int i = 0; i < N; ++i)
            for (int j = std::max(0, i - p_); j <= std::min(N - 1, i + p_); ++j)
                lhs_.at(i, j) = (i == j ? g_->dr[i] : 0.0) + 0.25 * dt_ * dt_ * S(i, j);
        lhs_.factor();
    }

    // W L psi
    cvec apply_SL(const cvec& psi) const {
        const int N = static_cast<int>(g_->size());
        cvec out(N, 0.0);
        for (int i = 0; i < N; ++i)
            for (int j = std::max(0, i - p_); j <= std::min(N - 1, i + p_); ++j)
                out[i] += SL_[static_cast<std::size_t>(i) * (2 * p_ + 1) + (j - i + p_)] * psi[j];
        return out;
    }

    // One step of (psi, v = psi_t); F0, F1 are reduced forcing at both ends
    // (empty vectors for F = 0).
    void step(cvec& psi, cvec& v, const cvec& F0 = {}, const cvec& F1 = {}) const {
        const int N = static_cast<int>(g_->size());
        const double h = dt_;
        cvec Spsi = apply_SL(psi);
        cvec rhs(N);
        for (int i = 0; i < N; ++i) {
            double w = g_->dr[i];
            cplx f = 0;
            if (!F0.empty()) f = 0.25 * h * h * w * (F0[i] + F1[i]);
            rhs[i] = w * psi[i] - 0.25 * h * h * Spsi[i] + h * w * v[i] + f;
        }
        lhs_.solve(rhs);
        // v_new = v - dt/2 L (psi + psi_new) + dt/2 (F0 + F1)
        cvec sum(N);
        for (int i = 0; i < N; ++i) sum[i] = psi[i] + rhs[i];
        cvec Ss = apply_SL(sum);
        for (int i = 0; i < N; ++i) {
            v[i] -= 0.5 * h * Ss[i] / g_->dr[i];
            if (!F0.empty()) v[i] += 0.5 * h * (F0[i] + F1[i]);
        }
        psi = std::move(rhs);
    }

    // <v, v> + <psi, L psi> in the dr inner product.
    double energy(const cvec& psi, const cvec& v) const {
        cvec Sp = apply_SL(psi);
        double e = 0;
        for (std::size_t i = 0; i < psi.size(); ++i) e += g_->dr[i] * std::norm(v[i]) + std::real(std::conj(psi[i]) * Sp[i]);
        return e;
    }

    const grid_ptr& grid() const { return g_; }
    double dt() const { return dt_; }

private:
    grid_ptr g_;
    int k_, n_;
    double dt_;
    int p_ = 0;
    rvec Bm_, SL_, vdiag_;
    banded_lu lhs_;
};

inline cvec to_reduced(const cvec& u, int n, const radial_grid& g) {
    cvec p(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) p[i] = std::pow(g.r[i], 0.5 * (n - 1)) * u[i];
    return p;
}
inline cvec from_reduced(const cvec& p, int n, const radial_grid& g) {
    cvec u(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) u[i] = std::pow(g.r[i], -0.5 * (n - 1)) * p[i];
    return u;
}

struct wave_trajectory {
    rvec times;
    std::vector<cvec> u;  // position profiles (not reduced) per frame
    rvec energy;
};

// Evolves data (f, g) of one channel with u_tt - Delta u + V u = 0 and
// records every `stride`-th step.
inline wave_trajectory wave_potential_evolve(const cvec& f, const cvec& gdot, int k, int n, const grid_ptr& grid,
                                             double dt, int steps, std::function<double(double)> V = {},
                                             int stride = 1) {
    wave_cn_channel op(grid, k, n, dt, std::move(V));
    cvec psi = to_reduced(f, n, *grid), v = to_reduced(gdot, n, *grid);
    wave_trajectory tr;
    auto record = [&](int s) {
        tr.times.push_back(s * dt);
        tr.u.push_back(from_reduced(psi, n, *grid));
        tr.energy.push_back(0.5 * op.energy(psi, v));
    };
    record(0);
    for (int s = 1; s <= steps; ++s) {
        op.step(psi, v);
        if (s % stride == 0) record(s);
    }
    return tr;
}

// Strang splitting for u_tt - Delta u + V u = 0 in one channel: half kick
// u_t -= (dt/2) V u, exact free flow over dt in frequency, half kick.
// Unlike the Crank-Nicolson form, no boundary closure at r_min is needed.
inline wave_trajectory wave_potential_split_evolve(const cvec& f, const cvec& gdot, int k, int n, const grid_ptr& rg,
                                                   const grid_ptr& kg, double dt, int steps,
                                                   const std::function<double(double)>& V = {}, int stride = 1) {
    const auto Nr = rg->size(), Nk = kg->size();
    rvec v(Nr, 0.0);
    if (V)
        for (std::size_t i = 0; i < Nr; ++i) v[i] = V(rg->r[i]);
    cvec u = f, ut = gdot;
    wave_trajectory tr;
    auto energy = [&] {
        cvec a = hankel_analyze(u, k, n, rg, kg), b = hankel_analyze(ut, k, n, rg, kg);
        double e = 0;
        for (std::size_t j = 0; j < Nk; ++j)
            e += kg->w[j] * (std::norm(b[j]) + sq(kg->r[j]) * std::norm(a[j])) * std::pow(kg->r[j], n - 1);
        e *= std::pow(2.0 * pi, n);
        for (std::size_t i = 0; i < Nr; ++i) e += rg->w[i] * v[i] * std::norm(u[i]) * std::pow(rg->r[i], n - 1);
        return 0.5 * e;
    };
    auto record = [&](int s) {
        tr.times.push_back(s * dt);
        tr.u.push_back(u);
        tr.energy.push_back(energy());
    };
    auto kick = [&](double tau) {
        if (!V) return;
        for (std::size_t i = 0; i < Nr; ++i) ut[i] -= tau * v[i] * u[i];
    };
    record(0);
    for (int s = 1; s <= steps; ++s) {
        kick(0.5 * dt);
        cvec a = hankel_analyze(u, k, n, rg, kg), b = hankel_analyze(ut, k, n, rg, kg);
        for (std::size_t j = 0; j < Nk; ++j) {
            double rho = kg->r[j], c = std::cos(dt * rho), so = sin_over(dt, rho);
            cplx na = c * a[j] + so * b[j];
            cplx nb = -rho * std::sin(dt * rho) * a[j] + c * b[j];
            a[j] = na;
            b[j] = nb;
        }
        u = hankel_synthesize(a, k, n, kg, rg);
        ut = hankel_synthesize(b, k, n, kg, rg);
        kick(0.5 * dt);
        if (s % stride == 0) record(s);
    }
    return tr;
}

}  // namespace pwave
