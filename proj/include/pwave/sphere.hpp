#pragma once

#include <array>
#include <cmath>
#include <memory>

#include "pwave/common.hpp"
#include "pwave/radial.hpp"
#include "pwave/specfun.hpp"

namespace pwave {

// Product grid on S^2: L+1 Gauss-Legendre nodes in cos(theta) times 2L+1
// equispaced azimuths.  Integrates Y_a conj(Y_b) exactly for degrees <= L.
struct sphere_grid {
    int L = 0;
    int n_theta = 0, n_phi = 0;
    rvec x, w_theta, phi;
    // plm[(l*(2L+1) + (m+L))*n_theta + i] = normalised P_l^m(x_i), Condon-Shortley
    rvec plm;
    cvec eimp;  // eimp[(m+L)*n_phi + j] = exp(i m phi_j)

    std::size_t size() const { return static_cast<std::size_t>(n_theta) * n_phi; }
    double weight(int i, int) const { return w_theta[i] * 2.0 * pi / n_phi; }
    double P(int l, int m, int i) const { return plm[(static_cast<std::size_t>(l) * (2 * L + 1) + (m + L)) * n_theta + i]; }
    cplx E(int m, int j) const { return eimp[static_cast<std::size_t>(m + L) * n_phi + j]; }
};

using sphere_ptr = std::shared_ptr<const sphere_grid>;

inline std::size_t sh_index(int l, int m) { return static_cast<std::size_t>(l * l + l + m); }
inline std::size_t sh_count(int L) { return static_cast<std::size_t>((L + 1) * (L + 1)); }

// Normalised associated Legendre values P_l^m(x) for 0 <= m <= l <= L.
inline void legendre_table(int L, double x, std::vector<rvec>& out) {
    out.assign(L + 1, rvec(L + 1, 0.0));
    double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = std::sqrt(1.0 / (4.0 * pi));
    for (int m = 0; m <= L; ++m) {
        if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
        out[m][m] = pmm;
        if (m + 1 <= L) out[m + 1][m] = x * std::sqrt(2.0 * m + 3.0) * pmm;
        for (int l = m + 2; l <= L; ++l) {
            double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
            double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
            out[l][m] = a * (x * out[l - 1][m] - b * out[l - 2][m]);
        }
    }
}

// Complex orthonormal spherical harmonic with Condon-Shortley phase.
inline cplx sph_harmonic(int l, int m, double cos_theta, double phi) {
    if (l < 0 || std::abs(m) > l) return 0.0;
    std::vector<rvec> t;
    legendre_table(l, cos_theta, t);
    double p = t[l][std::abs(m)];
    if (m < 0 && (m % 2 != 0)) p = -p;
    return p * std::exp(I * (double(m) * phi));
}

inline sphere_ptr make_sphere_grid(int L) {
    if (L < 0) throw domain_error("make_sphere_grid: need L >= 0");
    auto g = std::make_shared<sphere_grid>();
    g->L = L;
    g->n_theta = L + 1;
    g->n_phi = 2 * L + 1;
    auto q = gauss_legendre(L + 1);
    g->x = q.x;
    g->w_theta = q.w;
    g->phi.resize(g->n_phi);
    for (int j = 0; j < g->n_phi; ++j) g->phi[j] = 2.0 * pi * j / g->n_phi;
    g->plm.assign(static_cast<std::size_t>(L + 1) * (2 * L + 1) * g->n_theta, 0.0);
    std::vector<rvec> t;
    for (int i = 0; i < g->n_theta; ++i) {
        legendre_table(L, g->x[i], t);
        for (int l = 0; l <= L; ++l)
            for (int m = -l; m <= l; ++m) {
                double p = t[l][std::abs(m)];
                if (m < 0 && (m % 2 != 0)) p = -p;
                g->plm[(static_cast<std::size_t>(l) * (2 * L + 1) + (m + L)) * g->n_theta + i] = p;
            }
    }
    g->eimp.resize(static_cast<std::size_t>(2 * L + 1) * g->n_phi);
    for (int m = -L; m <= L; ++m)
        for (int j = 0; j < g->n_phi; ++j)
            g->eimp[static_cast<std::size_t>(m + L) * g->n_phi + j] = std::exp(I * (double(m) * g->phi[j]));
    return g;
}

using scalar_coeffs = cvec;  // indexed by sh_index(l, m)

// Values are stored theta-major: f[i * n_phi + j].  Coefficients up to degree
// band <= grid.L.
inline scalar_coeffs sht_forward(const sphere_grid& g, const cvec& f, int band = -1) {
    if (band < 0) band = g.L;
    if (band > g.L) throw resolution_error("sht_forward: band exceeds grid resolution");
    if (f.size() != g.size()) throw domain_error("sht_forward: size mismatch");
    scalar_coeffs c(sh_count(band), 0.0);
    cvec F(g.n_theta);
    const double dphi = 2.0 * pi / g.n_phi;
    for (int m = -band; m <= band; ++m) {
        for (int i = 0; i < g.n_theta; ++i) {
            cplx s = 0;
            for (int j = 0; j < g.n_phi; ++j) s += f[static_cast<std::size_t>(i) * g.n_phi + j] * std::conj(g.E(m, j));
            F[i] = s * dphi * g.w_theta[i];
        }
        for (int l = std::abs(m); l <= band; ++l) {
            cplx s = 0;
            for (int i = 0; i < g.n_theta; ++i) s += g.P(l, m, i) * F[i];
            c[sh_index(l, m)] = s;
        }
    }
    return c;
}

inline cvec sht_inverse(const sphere_grid& g, const scalar_coeffs& c) {
    int band = static_cast<int>(std::lround(std::sqrt(double(c.size())))) - 1;
    if (sh_count(band) != c.size()) throw domain_error("sht_inverse: coefficient count is not a square");
    if (band > g.L) throw resolution_error("sht_inverse: band exceeds grid resolution");
    cvec f(g.size(), 0.0);
    for (int m = -band; m <= band; ++m) {
        for (int i = 0; i < g.n_theta; ++i) {
            cplx F = 0;
            for (int l = std::abs(m); l <= band; ++l) F += c[sh_index(l, m)] * g.P(l, m, i);
            if (F == cplx(0.0)) continue;
            for (int j = 0; j < g.n_phi; ++j) f[static_cast<std::size_t>(i) * g.n_phi + j] += F * g.E(m, j);
        }
    }
    return f;
}

inline double lambda_eigen(int l, double s) { return std::pow(1.0 + double(l) * (l + 1), 0.5 * s); }

inline scalar_coeffs lambda_omega_apply(const scalar_coeffs& c, double s) {
    int band = static_cast<int>(std::lround(std::sqrt(double(c.size())))) - 1;
    scalar_coeffs out = c;
    for (int l = 0; l <= band; ++l)
        for (int m = -l; m <= l; ++m) out[sh_index(l, m)] *= lambda_eigen(l, s);
    return out;
}

inline double sphere_l2(const scalar_coeffs& c, double s = 0.0) {
    int band = static_cast<int>(std::lround(std::sqrt(double(c.size())))) - 1;
    double t = 0;
    for (int l = 0; l <= band; ++l)
        for (int m = -l; m <= l; ++m) t += sq(lambda_eigen(l, s)) * std::norm(c[sh_index(l, m)]);
    return std::sqrt(t);
}

inline double sphere_l2_grid(const sphere_grid& g, const cvec& f) {
    double t = 0;
    for (int i = 0; i < g.n_theta; ++i)
        for (int j = 0; j < g.n_phi; ++j) t += g.weight(i, j) * std::norm(f[static_cast<std::size_t>(i) * g.n_phi + j]);
    return std::sqrt(t);
}

// {||Lambda^s (g h)||, ||Lambda^s g|| ||Lambda^s h||}, with the product
// resolved exactly on a grid of twice the band.
inline std::pair<double, double> sphere_product(const scalar_coeffs& gc, const scalar_coeffs& hc, double s) {
    if (s <= 1.0) throw domain_error("sphere_product: the algebra property needs s > 1");
    int bg = static_cast<int>(std::lround(std::sqrt(double(gc.size())))) - 1;
    int bh = static_cast<int>(std::lround(std::sqrt(double(hc.size())))) - 1;
    auto grid = make_sphere_grid(bg + bh);
    cvec gv = sht_inverse(*grid, gc), hv = sht_inverse(*grid, hc);
    for (std::size_t q = 0; q < gv.size(); ++q) gv[q] *= hv[q];
    auto pc = sht_forward(*grid, gv);
    return {sphere_l2(pc, s), sphere_l2(gc, s) * sphere_l2(hc, s)};
}

// ----------------------------------------------------------------- spinors

// Dirac partial-wave label.  j = jj/2, m = mm/2, kappa = +-(j + 1/2).
struct spinor_label {
    int jj = 1, mm = 1, kappa = 1;
    double j() const { return 0.5 * jj; }
    double m() const { return 0.5 * mm; }
    int ell_plus() const { return kappa > 0 ? kappa : -kappa - 1; }
    int ell_minus() const { return kappa > 0 ? kappa - 1 : -kappa; }
    bool operator==(const spinor_label&) const = default;
};

// Spinor harmonic Phi^{+-}: component `offset` carries c_lo Y_ell^{m-1/2},
// component `offset+1` carries c_hi Y_ell^{m+1/2}.
struct spinor_form {
    int offset = 0;
    int ell = 0;
    int m_lo = 0, m_hi = 0;
    cplx c_lo, c_hi;
};

inline spinor_form spinor_basis_form(const spinor_label& s, int sign) {
    double j = s.j(), m = s.m();
    spinor_form f;
    f.m_lo = (s.mm - 1) / 2;
    f.m_hi = (s.mm + 1) / 2;
    bool upper_type = (sign > 0) == (s.kappa > 0);  // Y of degree j + 1/2
    double a, b;
    if (upper_type) {
        a = std::sqrt((j + 1.0 - m) / (2.0 * j + 2.0));
        b = -std::sqrt((j + 1.0 + m) / (2.0 * j + 2.0));
    } else {
        a = std::sqrt((j + m) / (2.0 * j));
        b = std::sqrt((j - m) / (2.0 * j));
    }
    if (sign > 0) {
        f.offset = 0;
        f.ell = s.ell_plus();
        f.c_lo = I * a;
        f.c_hi = I * b;
    } else {
        f.offset = 2;
        f.ell = s.ell_minus();
        f.c_lo = a;
        f.c_hi = b;
    }
    return f;
}

inline std::array<cplx, 4> spinor_basis_eval(const spinor_label& s, int sign, double cos_theta, double phi) {
    auto f = spinor_basis_form(s, sign);
    std::array<cplx, 4> v{};
    v[f.offset] = f.c_lo * sph_harmonic(f.ell, f.m_lo, cos_theta, phi);
    v[f.offset + 1] = f.c_hi * sph_harmonic(f.ell, f.m_hi, cos_theta, phi);
    return v;
}

// All labels with j <= jmax (jj_max = 2 jmax), ordered by j, kappa sign
// (positive first), then m.
inline std::vector<spinor_label> spinor_labels(int jj_max) {
    std::vector<spinor_label> out;
    for (int jj = 1; jj <= jj_max; jj += 2)
        for (int sgn : {1, -1})
            for (int mm = -jj; mm <= jj; mm += 2) out.push_back({jj, mm, sgn * (jj + 1) / 2});
    return out;
}

// Radial profiles psi^{+-}(r) of one Dirac partial wave; the field is
// (1/r)(psi^+ Phi^+ + psi^- Phi^-).
struct dirac_channel {
    spinor_label label;
    cvec plus, minus;
};

struct dirac_state {
    grid_ptr grid;
    std::vector<dirac_channel> ch;
};

// Collocation samples of a 4-spinor: data[(ir * nodes + q) * 4 + c].
struct spinor_field {
    grid_ptr grid;
    sphere_ptr sphere;
    cvec data;

    cplx& at(std::size_t ir, std::size_t q, int c) { return data[(ir * sphere->size() + q) * 4 + c]; }
    const cplx& at(std::size_t ir, std::size_t q, int c) const { return data[(ir * sphere->size() + q) * 4 + c]; }
};

inline spinor_field spinor_reconstruct(const dirac_state& st, const sphere_ptr& sg) {
    spinor_field f{st.grid, sg, cvec(st.grid->size() * sg->size() * 4, 0.0)};
    int band = 0;
    for (auto& c : st.ch) band = std::max({band, c.label.ell_plus(), c.label.ell_minus()});
    if (band > sg->L) throw resolution_error("spinor_reconstruct: channel degree exceeds sphere grid");
    const std::size_t Nr = st.grid->size(), Q = sg->size();
    parallel_for(Nr, [&](std::size_t ir) {
        std::array<scalar_coeffs, 4> comp;
        for (auto& v : comp) v.assign(sh_count(band), 0.0);
        double rinv = 1.0 / st.grid->r[ir];
        for (auto& c : st.ch) {
            for (int sgn : {1, -1}) {
                cplx amp = (sgn > 0 ? c.plus[ir] : c.minus[ir]) * rinv;
                if (amp == cplx(0.0)) continue;
                auto fm = spinor_basis_form(c.label, sgn);
                if (std::abs(fm.m_lo) <= fm.ell) comp[fm.offset][sh_index(fm.ell, fm.m_lo)] += amp * fm.c_lo;
                if (std::abs(fm.m_hi) <= fm.ell) comp[fm.offset + 1][sh_index(fm.ell, fm.m_hi)] += amp * fm.c_hi;
            }
        }
        for (int k = 0; k < 4; ++k) {
            cvec v = sht_inverse(*sg, comp[k]);
            for (std::size_t q = 0; q < Q; ++q) f.data[(ir * Q + q) * 4 + k] = v[q];
        }
    });
    return f;
}

// Projects collocation samples onto all partial waves with j <= jj_max/2.
inline dirac_state spinor_decompose(const spinor_field& f, int jj_max) {
    const auto& sg = *f.sphere;
    if ((jj_max + 1) / 2 > sg.L) throw resolution_error("spinor_decompose: jmax exceeds sphere grid resolution");
    dirac_state st;
    st.grid = f.grid;
    auto labels = spinor_labels(jj_max);
    const std::size_t Nr = f.grid->size(), Q = sg.size();
    st.ch.resize(labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) {
        st.ch[c].label = labels[c];
        st.ch[c].plus.assign(Nr, 0.0);
        st.ch[c].minus.assign(Nr, 0.0);
    }
    const int band = (jj_max + 1) / 2;
    parallel_for(Nr, [&](std::size_t ir) {
        std::array<scalar_coeffs, 4> comp;
        cvec v(Q);
        for (int k = 0; k < 4; ++k) {
            for (std::size_t q = 0; q < Q; ++q) v[q] = f.data[(ir * Q + q) * 4 + k];
            comp[k] = sht_forward(sg, v, band);
        }
        double r = f.grid->r[ir];
        for (std::size_t c = 0; c < labels.size(); ++c) {
            for (int sgn : {1, -1}) {
                auto fm = spinor_basis_form(labels[c], sgn);
                cplx s = 0;
                if (std::abs(fm.m_lo) <= fm.ell) s += std::conj(fm.c_lo) * comp[fm.offset][sh_index(fm.ell, fm.m_lo)];
                if (std::abs(fm.m_hi) <= fm.ell) s += std::conj(fm.c_hi) * comp[fm.offset + 1][sh_index(fm.ell, fm.m_hi)];
                (sgn > 0 ? st.ch[c].plus : st.ch[c].minus)[ir] = r * s;
            }
        }
    });
    return st;
}

// sum over channels of int |psi^+|^2 + |psi^-|^2 dr
inline double dirac_l2(const dirac_state& st) {
    double t = 0;
    for (auto& c : st.ch)
        for (std::size_t i = 0; i < st.grid->size(); ++i)
            t += st.grid->w[i] * (std::norm(c.plus[i]) + std::norm(c.minus[i]));
    return std::sqrt(t);
}

inline double spinor_field_l2(const spinor_field& f) {
    const auto& sg = *f.sphere;
    double t = 0;
    for (std::size_t ir = 0; ir < f.grid->size(); ++ir) {
        double r = f.grid->r[ir], acc = 0;
        for (int i = 0; i < sg.n_theta; ++i)
            for (int j = 0; j < sg.n_phi; ++j) {
                std::size_t q = static_cast<std::size_t>(i) * sg.n_phi + j;
                for (int k = 0; k < 4; ++k) acc += sg.weight(i, j) * std::norm(f.at(ir, q, k));
            }
        t += f.grid->w[ir] * r * r * acc;
    }
    return std::sqrt(t);
}

// |kappa|^sigma over the Lambda_omega^sigma eigenvalue on Phi^{+-}.
inline double lambda_tilde_ratio(const spinor_label& s, int sign, double sigma) {
    int l = sign > 0 ? s.ell_plus() : s.ell_minus();
    return std::pow(std::abs(s.kappa), sigma) / lambda_eigen(l, sigma);
}

}  // namespace pwave
