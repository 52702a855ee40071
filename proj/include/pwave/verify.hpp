#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "pwave/common.hpp"
#include "pwave/nld.hpp"
#include "pwave/norms.hpp"
#include "pwave/propagators.hpp"
#include "pwave/radial.hpp"
#include "pwave/specfun.hpp"
#include "pwave/sphere.hpp"

namespace pwave {

// ------------------------------------------------------------- ensembles

struct ensemble_spec {
    std::uint64_t seed = 1;
    int count = 20;
    int k_min = 0, k_max = 4;  // scalar degree range
    int jj_max = 3;            // Dirac members use j <= jj_max / 2
    int channels = 2;          // channels per member
    int bumps = 2;             // Gaussian bumps per channel
    double rho_lo = 0.5, rho_hi = 4.0;
    double width_lo = 0.2, width_hi = 0.3;
};

// Independent stream per (seed, member), so members can be built in any
// order or on any worker.
inline std::mt19937_64 member_rng(std::uint64_t seed, int member) {
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(member) + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return std::mt19937_64(z ^ (z >> 31));
}

inline double uniform(std::mt19937_64& g, double a, double b) {
    // 53 random bits mapped to [a, b); independent of the library's distributions
    double u = static_cast<double>(g() >> 11) * (1.0 / 9007199254740992.0);
    return a + (b - a) * u;
}

// C-infinity step: 0 for x <= 0, 1 for x >= 1.
inline double smooth_step(double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

// Smooth cutoff to [lo, hi] with transitions of width `edge` inside the band.
inline double band_window(double rho, double lo, double hi, double edge = 0.3) {
    return smooth_step((rho - lo) / edge) * smooth_step((hi - rho) / edge);
}

struct bump {
    double center, width;
    cplx amp;
};

// Gaussian bumps with centers at least five widths inside the band.
inline std::vector<bump> random_bumps(std::mt19937_64& g, const ensemble_spec& e) {
    std::vector<bump> out;
    for (int b = 0; b < e.bumps; ++b) {
        double w = uniform(g, e.width_lo, e.width_hi);
        double lo = e.rho_lo + 5 * w, hi = e.rho_hi - 5 * w;
        if (hi <= lo) throw spec_error("ensemble: band [rho_lo, rho_hi] too narrow for the bump widths");
        double c = uniform(g, lo, hi);
        double a = uniform(g, 0.5, 1.0), ph = uniform(g, 0.0, 2.0 * pi);
        out.push_back({c, w, std::polar(a, ph)});
    }
    return out;
}

inline cvec sample_bumps(const std::vector<bump>& bs, const radial_grid& kg, const ensemble_spec& e) {
    cvec v(kg.size(), 0.0);
    for (std::size_t j = 0; j < kg.size(); ++j) {
        double rho = kg.r[j], win = band_window(rho, e.rho_lo, e.rho_hi);
        if (win == 0.0) continue;
        cplx s = 0;
        for (auto& b : bs) s += b.amp * std::exp(-0.5 * sq((rho - b.center) / b.width));
        v[j] = win * s;
    }
    return v;
}

struct scalar_member {
    channel_set fcheck;      // frequency side, on kg
    std::string descriptor;  // channel list
};

inline scalar_member make_scalar_member(const ensemble_spec& e, int member, const radial_grid& kg, int n) {
    auto g = member_rng(e.seed, member);
    scalar_member m;
    std::vector<std::pair<int, int>> used;
    for (int c = 0; c < e.channels; ++c) {
        int k = e.k_min + static_cast<int>(g() % static_cast<std::uint64_t>(e.k_max - e.k_min + 1));
        int dk = static_cast<int>(harmonic_dim(k, n));
        int l = 1 + static_cast<int>(g() % static_cast<std::uint64_t>(dk));
        auto bs = random_bumps(g, e);
        if (std::find(used.begin(), used.end(), std::make_pair(k, l)) != used.end()) continue;
        used.emplace_back(k, l);
        m.fcheck.push_back({k, l, sample_bumps(bs, kg, e)});
        m.descriptor += (m.descriptor.empty() ? "" : " ") + std::string("k") + std::to_string(k) + "l" + std::to_string(l);
    }
    return m;
}

// Dirac member given by its spectral coefficients a^{+-} on kg.
struct dirac_member {
    dirac_spectral sp;
    std::string descriptor;
};

inline dirac_member make_dirac_member(const ensemble_spec& e, int member, const grid_ptr& rg, const grid_ptr& kg) {
    auto g = member_rng(e.seed, member);
    auto labels = spinor_labels(e.jj_max);
    dirac_member m;
    m.sp = {rg, kg, {}, {}, {}};
    for (int c = 0; c < e.channels; ++c) {
        const auto& l = labels[g() % labels.size()];
        auto bp = random_bumps(g, e), bm = random_bumps(g, e);
        if (std::find(m.sp.labels.begin(), m.sp.labels.end(), l) != m.sp.labels.end()) continue;
        m.sp.labels.push_back(l);
        m.sp.ap.push_back(sample_bumps(bp, *kg, e));
        m.sp.am.push_back(sample_bumps(bm, *kg, e));
        m.descriptor += (m.descriptor.empty() ? "" : " ") + std::string("j") + std::to_string(l.jj) + "/2m" +
                        std::to_string(l.mm) + "/2k" + std::to_string(l.kappa);
    }
    return m;
}

// ------------------------------------------------------------------ grids

struct grid_pair {
    grid_ptr rg, kg;
};

// Grid on (lo, hi] whose outer spacing stays within 10% of (hi - 1)/n_lin;
// the log part takes the largest node count that allows it.
inline grid_ptr grid_with_spacing(double lo, double hi, int n_lin) {
    const double h = (hi - 1.0) / n_lin;
    grid_ptr best;
    for (double nl = 8; nl < 4000; nl *= 1.1) {
        try {
            auto g = build_radial_grid(lo, hi, static_cast<int>(nl), n_lin);
            if (g->dr.back() <= 1.1 * h) best = g;
        } catch (const domain_error&) {
        }
    }
    if (!best) throw resolution_error("grid_with_spacing: no admissible split for n_lin = " + std::to_string(n_lin));
    return best;
}

// Position grid on (r_min, r_max] and frequency grid on (rho_min, rho_max]
// with at least five samples per oscillation of exp(i r rho) over the
// product range (x_pos, x_freq are the largest radius / frequency the
// transforms will see); linear node counts are then scaled by `factor`.
inline grid_pair study_grids(double r_max, double rho_max, double x_pos, double x_freq, double factor,
                             double r_min = 1e-3, double rho_min = 1e-3) {
    auto nlin = [&](double top, double X) {
        double h = 0.4 * pi / X;
        return static_cast<int>(std::ceil(std::ceil((top - 1.0) / h) * factor));
    };
    return {grid_with_spacing(r_min, r_max, nlin(r_max, x_freq)), grid_with_spacing(rho_min, rho_max, nlin(rho_max, x_pos))};
}

// ------------------------------------------------------------ ratio studies

struct ratio_member {
    int id = 0;
    std::string descriptor;
    double lhs = 0, rhs = 0, ratio = 0;
    double lhs_2T = 0, ratio_2T = 0;
    double ratio_refined = 0;
    std::string error;  // non-empty when the member failed (recorded, not fatal)
};

struct ratio_study {
    std::string id;
    double T = 0;
    std::vector<ratio_member> members;
    double max_ratio = 0, median_ratio = 0;
    double max_ratio_2T = 0, t_growth = 0;
    double max_ratio_refined = 0, drift = 0;
    bool check_growth = true, check_drift = true;
    bool pass = false;
    std::string note;
    std::vector<std::pair<std::string, double>> extras;  // study-specific witnesses
};

struct level_result {
    double lhs_T = 0, lhs_2T = 0, rhs = 0;
    std::string descriptor;
};

// eval(member, level): level 0 is the base resolution (run to 2T), level 1
// the refined one (run to T).
using member_eval = std::function<level_result(int, int)>;

struct study_gates {
    double T = 10;
    bool growth = true;
    bool refine = true;
    double drift_tol = 0.10, growth_tol = 0.05;
};

inline double median_of(rvec v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double safe_ratio(double a, double b) {
    if (b <= 0 || !std::isfinite(a) || !std::isfinite(b)) return std::numeric_limits<double>::quiet_NaN();
    return a / b;
}

inline void finalize_study(ratio_study& st, const study_gates& gates) {
    rvec r, r2, rr;
    for (auto& m : st.members) {
        if (!m.error.empty() || !std::isfinite(m.ratio)) continue;
        r.push_back(m.ratio);
        if (gates.growth) r2.push_back(m.ratio_2T);
        if (gates.refine) rr.push_back(m.ratio_refined);
    }
    st.check_growth = gates.growth;
    st.check_drift = gates.refine;
    if (r.empty()) {
        st.pass = false;
        st.note = "no valid members";
        return;
    }
    st.max_ratio = *std::max_element(r.begin(), r.end());
    st.median_ratio = median_of(r);
    bool ok = std::isfinite(st.max_ratio);
    if (gates.growth) {
        st.max_ratio_2T = *std::max_element(r2.begin(), r2.end());
        st.t_growth = st.max_ratio_2T / st.max_ratio - 1.0;
        ok = ok && std::isfinite(st.t_growth) && st.t_growth <= gates.growth_tol;
    }
    if (gates.refine) {
        st.max_ratio_refined = *std::max_element(rr.begin(), rr.end());
        st.drift = std::abs(st.max_ratio_refined - st.max_ratio) / st.max_ratio;
        ok = ok && std::isfinite(st.drift) && st.drift <= gates.drift_tol;
    }
    std::size_t failed = st.members.size() - r.size();
    if (failed) st.note = std::to_string(failed) + " member(s) failed";
    st.pass = ok;
}

// Members run in parallel; every member owns its slot.
inline ratio_study run_ratio_study(const std::string& id, int count, const member_eval& eval,
                                   const study_gates& gates) {
    ratio_study st;
    st.id = id;
    st.T = gates.T;
    st.members.resize(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        auto& m = st.members[i];
        m.id = static_cast<int>(i);
        try {
            level_result a = eval(static_cast<int>(i), 0);
            m.descriptor = a.descriptor;
            m.lhs = a.lhs_T;
            m.rhs = a.rhs;
            m.ratio = safe_ratio(a.lhs_T, a.rhs);
            m.lhs_2T = a.lhs_2T;
            m.ratio_2T = safe_ratio(a.lhs_2T, a.rhs);
            if (gates.refine) {
                level_result b = eval(static_cast<int>(i), 1);
                m.ratio_refined = safe_ratio(b.lhs_T, b.rhs);
            }
        } catch (const std::exception& ex) {
            m.error = ex.what();
        }
    });
    finalize_study(st, gates);
    return st;
}

// Several estimates computed from the same member evolution: eval returns
// one level_result per estimate.
using multi_member_eval = std::function<std::vector<level_result>(int, int)>;

inline std::vector<ratio_study> run_ratio_studies(const std::vector<std::string>& ids, int count,
                                                  const multi_member_eval& eval, const study_gates& gates) {
    const std::size_t S = ids.size();
    std::vector<ratio_study> out(S);
    for (std::size_t s = 0; s < S; ++s) {
        out[s].id = ids[s];
        out[s].T = gates.T;
        out[s].members.resize(static_cast<std::size_t>(count));
    }
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        try {
            auto a = eval(static_cast<int>(i), 0);
            std::vector<level_result> b;
            if (gates.refine) b = eval(static_cast<int>(i), 1);
            for (std::size_t s = 0; s < S; ++s) {
                auto& m = out[s].members[i];
                m.id = static_cast<int>(i);
                m.descriptor = a[s].descriptor;
                m.lhs = a[s].lhs_T;
                m.rhs = a[s].rhs;
                m.ratio = safe_ratio(a[s].lhs_T, a[s].rhs);
                m.lhs_2T = a[s].lhs_2T;
                m.ratio_2T = safe_ratio(a[s].lhs_2T, a[s].rhs);
                if (gates.refine) m.ratio_refined = safe_ratio(b[s].lhs_T, b[s].rhs);
            }
        } catch (const std::exception& ex) {
            for (std::size_t s = 0; s < S; ++s) {
                out[s].members[i].id = static_cast<int>(i);
                out[s].members[i].error = ex.what();
            }
        }
    });
    for (auto& st : out) finalize_study(st, gates);
    return out;
}

// ------------------------------------------------------------ lemma Q_k

struct lemma_row {
    int k = 0;
    double sup = 0, normalized = 0;
};

struct lemma_study {
    int n = 3, kmax = 0;
    std::vector<lemma_row> rows;
    double worst = 0;  // n = 3: max sup; n >= 4: max over [10, kmax] / value at 10
    bool pass = false;
};

// sup_x |Q_k| on a 4096-point grid of [-1, 1] and k^{n/2-1} sup_x |Q_k|.
inline lemma_study lemma_qk_study(int n, int kmax, int points = 4096) {
    if (n < 3) throw domain_error("lemma_qk_study: need n >= 3");
    lemma_study st;
    st.n = n;
    st.kmax = kmax;
    st.rows.resize(static_cast<std::size_t>(kmax + 1));
    parallel_for(st.rows.size(), [&](std::size_t k) {
        double sup = 0;
        for (int i = 0; i < points; ++i) {
            double x = -1.0 + 2.0 * i / (points - 1);
            sup = std::max(sup, std::abs(q_poly_eval(static_cast<int>(k), n, x)));
        }
        st.rows[k] = {static_cast<int>(k), sup, k == 0 ? sup : std::pow(double(k), 0.5 * n - 1.0) * sup};
    });
    if (n == 3) {
        for (auto& r : st.rows) st.worst = std::max(st.worst, r.sup);
        st.pass = st.worst <= 1.0 + 1e-12;
    } else {
        if (kmax < 10) throw domain_error("lemma_qk_study: need kmax >= 10 for n >= 4");
        double ref = st.rows[10].normalized, mx = 0, mn = 1e300;
        for (int k = 10; k <= kmax; ++k) {
            mx = std::max(mx, st.rows[k].normalized);
            mn = std::min(mn, st.rows[k].normalized);
        }
        st.worst = std::max(mx / ref, ref / mn);
        st.pass = st.worst <= 2.0;
    }
    return st;
}

// Q_k table as a ratio study: lhs = sup |Q_k|, rhs = 1 for n = 3 and
// k^{1-n/2} otherwise (so the ratio is the normalized value).
inline ratio_study lemma_as_ratio_study(const lemma_study& L) {
    ratio_study st;
    st.id = "lemmaQk";
    for (auto& r : L.rows) {
        ratio_member m;
        m.id = r.k;
        m.descriptor = "n=" + std::to_string(L.n) + " k=" + std::to_string(r.k);
        m.lhs = r.sup;
        m.rhs = (L.n == 3 || r.k == 0) ? 1.0 : std::pow(double(r.k), 1.0 - 0.5 * L.n);
        m.ratio = safe_ratio(m.lhs, m.rhs);
        st.members.push_back(m);
    }
    finalize_study(st, {0, false, false});
    st.pass = L.pass;
    st.extras.push_back({"worst", L.worst});
    return st;
}

// ----------------------------------------------------- product estimate

struct prodest_config {
    std::uint64_t seed = 1;
    int count = 20;
    double s = 1.5;
    int band = 8, band_refined = 16;
};

// Random coefficients with |c_lm| ~ <l>^{-(s+2)}; level 1 extends the same
// sequence to the refined band.
inline scalar_coeffs random_sphere_coeffs(std::mt19937_64& g, int band, int keep, double s) {
    scalar_coeffs c(sh_count(keep), 0.0);
    for (int l = 0; l <= band; ++l)
        for (int m = -l; m <= l; ++m) {
            double a = uniform(g, 0.5, 1.0) * std::pow(1.0 + l, -(s + 2.0));
            cplx z = std::polar(a, uniform(g, 0.0, 2 * pi));
            if (l <= keep) c[sh_index(l, m)] = z;
        }
    return c;
}

inline ratio_study prodest_study(const prodest_config& cfg) {
    if (cfg.band_refined < cfg.band) throw spec_error("prodest: refined band below base band");
    auto eval = [&](int i, int level) {
        auto g = member_rng(cfg.seed, i);
        int keep = level == 0 ? cfg.band : cfg.band_refined;
        auto gc = random_sphere_coeffs(g, cfg.band_refined, keep, cfg.s);
        auto hc = random_sphere_coeffs(g, cfg.band_refined, keep, cfg.s);
        auto [lhs, rhs] = sphere_product(gc, hc, cfg.s);
        level_result r;
        r.lhs_T = r.lhs_2T = lhs;
        r.rhs = rhs;
        r.descriptor = "band=" + std::to_string(keep) + " s=" + std::to_string(cfg.s);
        return r;
    };
    study_gates gates{0, false, true};
    return run_ratio_study("prodest", cfg.count, eval, gates);
}

// ----------------------------------------------------- free wave endpoint

struct wave_study_config {
    int n = 3;
    ensemble_spec ens;
    double T = 10;
    double extra_s = 0;  // additional angular regularity on both sides
    double data_radius = 12;  // position-side support radius of the data
    double refine_factor = 1.5;
};

inline double sigma_of(int n) { return n == 3 ? 0.0 : 1.0 - 0.5 * n; }

// Position-side L^2 norm over frequency-side norm of the same channel data.
inline double plancherel(int n) { return std::pow(2.0 * pi, 0.5 * n); }

// Frame times on [0, t_end] with spacing at most (1/8) 2 pi / rho_max / sub.
inline rvec frame_times(double t_end, double rho_max, int sub) {
    double h = 0.25 * pi / rho_max / sub;
    int m = static_cast<int>(std::ceil(t_end / h));
    rvec t(static_cast<std::size_t>(m + 1));
    for (int i = 0; i <= m; ++i) t[i] = t_end * i / m;
    return t;
}

// Trajectory of e^{it|D|} f for scalar channels.
inline trajectory free_wave_trajectory(const channel_set& fcheck, int n, const rvec& times, const grid_ptr& kg,
                                       const grid_ptr& rg) {
    trajectory tr;
    tr.dim = n;
    tr.grid = rg;
    tr.kind = profile_kind::scalar;
    tr.times = times;
    tr.frames.assign(times.size(), std::vector<cvec>(fcheck.size()));
    for (std::size_t c = 0; c < fcheck.size(); ++c) {
        tr.degree.push_back(fcheck[c].k);
        Eigen::MatrixXcd U = wave_frames(fcheck[c].v, fcheck[c].k, n, times, kg, rg);
        for (std::size_t m = 0; m < times.size(); ++m) {
            auto col = U.col(static_cast<Eigen::Index>(m));
            tr.frames[m][c].assign(col.data(), col.data() + col.size());
        }
    }
    return tr;
}

// Endpoint estimate for e^{it|D|}:
//   ||Lambda^{s} u||_{L^2_t L^inf_r L^2_w} <~ || |D|^{(n-1)/2} Lambda^{sigma(n)+s} f ||.
inline ratio_study strichartz_free_study(const wave_study_config& cfg) {
    const int n = cfg.n;
    if (n < 3) throw domain_error("strichartz_free_study: need n >= 3");
    const double T = cfg.T;
    member_eval eval = [&](int i, int level) {
        double fac = level == 0 ? 1.0 : cfg.refine_factor;
        double t_end = level == 0 ? 2 * T : T;
        double r_max = cfg.data_radius + t_end + 2.0;
        double rho_max = cfg.ens.rho_hi + 0.5;
        auto gp = study_grids(r_max, rho_max, r_max + t_end, rho_max, fac);
        auto m = make_scalar_member(cfg.ens, i, *gp.kg, n);
        auto tr = free_wave_trajectory(m.fcheck, n, frame_times(t_end, cfg.ens.rho_hi, level + 1), gp.kg, gp.rg);
        level_result out;
        out.descriptor = m.descriptor;
        out.lhs_T = mixed_endpoint_norm(tr, cfg.extra_s, T).value;
        out.lhs_2T = level == 0 ? mixed_endpoint_norm(tr, cfg.extra_s, 2 * T).value : 0.0;
        out.rhs = plancherel(n) * channel_sobolev_norm(m.fcheck, 0.5 * (n - 1), sigma_of(n) + cfg.extra_s, n, *gp.kg);
        return out;
    };
    return run_ratio_study(n == 3 ? "strich3D" : "strichartz1", cfg.ens.count, eval, {T, true, true});
}

// ------------------------------------------------------- inhomogeneous wave

struct inhom_study_config {
    int n = 3;
    ensemble_spec ens;
    double T = 10;
    double eps = 0.1;
    double pulse = 4.0;  // duration of the forcing
    double data_radius = 12;
    double refine_factor = 1.5;
};

// sin^2(pi (s - t0) / tau) e^{i omega s} on [t0, t0 + tau], zero elsewhere.
inline cplx pulse_value(double s, double t0, double tau, double omega) {
    double x = (s - t0) / tau;
    if (x <= 0 || x >= 1) return 0.0;
    return sq(std::sin(pi * x)) * std::exp(I * (omega * (s - t0)));
}

inline rvec uniform_times(double h, int count) {
    rvec t(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) t[i] = h * i;
    return t;
}

// Duhamel trajectory for F(s, x) = pulse(s) f(x), f given by its channels.
inline trajectory duhamel_trajectory(const channel_set& fcheck, int n, const rvec& times, double t0, double tau,
                                     double omega, const grid_ptr& kg, const grid_ptr& rg) {
    trajectory tr;
    tr.dim = n;
    tr.grid = rg;
    tr.kind = profile_kind::scalar;
    tr.times = times;
    tr.frames.assign(times.size(), std::vector<cvec>(fcheck.size()));
    for (std::size_t c = 0; c < fcheck.size(); ++c) {
        tr.degree.push_back(fcheck[c].k);
        std::vector<cvec> F(times.size());
        for (std::size_t m = 0; m < times.size(); ++m) {
            cplx ph = pulse_value(times[m], t0, tau, omega);
            F[m].resize(kg->size());
            for (std::size_t j = 0; j < kg->size(); ++j) F[m][j] = ph * fcheck[c].v[j];
        }
        Eigen::MatrixXcd U = wave_duhamel_channel(F, times, fcheck[c].k, n, kg, rg);
        for (std::size_t m = 0; m < times.size(); ++m) {
            auto col = U.col(static_cast<Eigen::Index>(m));
            tr.frames[m][c].assign(col.data(), col.data() + col.size());
        }
    }
    return tr;
}

// || <x>^{1/2+eps} |D|^{(n-1)/2} <k>^sigma f ||_{L^2_x} for frequency-side channels.
inline double weighted_forcing_norm(const channel_set& fcheck, int n, double sigma, double eps, const grid_ptr& kg,
                                    const grid_ptr& rg) {
    double tot = 0;
    for (auto& c : fcheck) {
        cvec d(kg->size());
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = std::pow(kg->r[j], 0.5 * (n - 1)) * c.v[j];
        cvec h = hankel_synthesize(d, c.k, n, kg, rg);
        double acc = 0;
        for (std::size_t i = 0; i < rg->size(); ++i) {
            double r = rg->r[i];
            acc += rg->w[i] * std::norm(h[i]) * std::pow(1.0 + r * r, 0.5 + eps) * std::pow(r, n - 1);
        }
        tot += std::pow(1.0 + double(c.k) * c.k, sigma) * acc;
    }
    return std::sqrt(tot);
}

struct inhom_member_setup {
    grid_pair gp;
    scalar_member m;
    double omega = 0, h = 0;
    int frames = 0;
};

inline inhom_member_setup inhom_setup(const inhom_study_config& cfg, int i, int level, double t_end, double shift = 0) {
    inhom_member_setup s;
    double fac = level == 0 ? 1.0 : cfg.refine_factor;
    double r_max = cfg.data_radius + t_end + shift + 2.0;
    double rho_max = cfg.ens.rho_hi + 0.5;
    s.gp = study_grids(r_max, rho_max, r_max + t_end + shift, rho_max, fac);
    s.m = make_scalar_member(cfg.ens, i, *s.gp.kg, cfg.n);
    auto g = member_rng(cfg.ens.seed ^ 0xD1B54A32D192ED03ULL, i);
    s.omega = uniform(g, 0.0, 1.0);
    s.h = 0.25 * pi / cfg.ens.rho_hi / (level + 1);
    s.frames = static_cast<int>(std::ceil(t_end / s.h)) + 1;
    return s;
}

// Endpoint norm of the Duhamel term and its time-shifted copy; the shift is
// a whole number of frames, so the two should agree to rounding.
inline double duhamel_shift_residual(const inhom_study_config& cfg, int i, int shift_frames = 8) {
    const double t_end = 2 * cfg.T;
    auto s = inhom_setup(cfg, i, 0, t_end, shift_frames * 0.25 * pi / cfg.ens.rho_hi);
    double shift = shift_frames * s.h;
    auto a = duhamel_trajectory(s.m.fcheck, cfg.n, uniform_times(s.h, s.frames), 0.0, cfg.pulse, s.omega, s.gp.kg, s.gp.rg);
    auto b = duhamel_trajectory(s.m.fcheck, cfg.n, uniform_times(s.h, s.frames + shift_frames), shift, cfg.pulse,
                                s.omega, s.gp.kg, s.gp.rg);
    double la = mixed_endpoint_norm(a).value, lb = mixed_endpoint_norm(b).value;
    return std::abs(la - lb) / la;
}

// Inhomogeneous endpoint estimate
//   || int_0^t e^{i(t-s)|D|} F ds ||_{L^2 L^inf L^2_w} <~ || <x>^{1/2+eps} |D|^{(n-1)/2} Lambda^sigma F ||_{L^2 L^2}.
inline ratio_study strichartz_inhom_study(const inhom_study_config& cfg) {
    const int n = cfg.n;
    if (n < 3) throw domain_error("strichartz_inhom_study: need n >= 3");
    const double T = cfg.T;
    member_eval eval = [&](int i, int level) {
        double t_end = level == 0 ? 2 * T : T;
        auto s = inhom_setup(cfg, i, level, t_end);
        auto tr = duhamel_trajectory(s.m.fcheck, n, uniform_times(s.h, s.frames), 0.0, cfg.pulse, s.omega, s.gp.kg,
                                     s.gp.rg);
        level_result out;
        out.descriptor = s.m.descriptor;
        out.lhs_T = mixed_endpoint_norm(tr, 0, T).value;
        out.lhs_2T = level == 0 ? mixed_endpoint_norm(tr, 0, 2 * T).value : 0.0;
        // int |pulse|^2 ds = 3 tau / 8
        out.rhs = std::sqrt(0.375 * cfg.pulse) * weighted_forcing_norm(s.m.fcheck, n, sigma_of(n), cfg.eps, s.gp.kg, s.gp.rg);
        return out;
    };
    auto st = run_ratio_study("strichartz2", cfg.ens.count, eval, {T, true, true});
    double res = 0;
    for (int i = 0; i < std::min(cfg.ens.count, 2); ++i) res = std::max(res, duhamel_shift_residual(cfg, i));
    st.extras.emplace_back("shift_residual", res);
    st.pass = st.pass && res <= 1e-6;
    return st;
}

// ------------------------------------------------------ weighted transfer

struct transfer_study_config {
    int n = 3;
    ensemble_spec ens;
    double sigma = 0.0;
    double r_max = 40;
    double refine_factor = 1.5;
};

// s = 1 branch as a ratio study (lhs / rhs, one-sided); the s = 0 equality
// residual is reported as an extra and gates the pass flag at 1e-6.
inline ratio_study transfer_study(const transfer_study_config& cfg) {
    const int n = cfg.n;
    std::vector<double> s0(static_cast<std::size_t>(cfg.ens.count), 0.0);
    member_eval eval = [&](int i, int level) {
        double fac = level == 0 ? 1.0 : cfg.refine_factor;
        double rho_max = cfg.ens.rho_hi + 0.5;
        auto gp = study_grids(cfg.r_max, rho_max, 1.25 * cfg.r_max, rho_max, fac);
        auto m = make_scalar_member(cfg.ens, i, *gp.kg, n);
        level_result out;
        out.descriptor = m.descriptor;
        auto a = weighted_transfer_check(m.fcheck, 1, cfg.sigma, n, gp.kg, gp.rg);
        out.lhs_T = a.lhs;
        out.rhs = a.rhs;
        if (level == 0) {
            auto b = weighted_transfer_check(m.fcheck, 0, cfg.sigma, n, gp.kg, gp.rg);
            s0[static_cast<std::size_t>(i)] = std::abs(b.lhs - b.rhs) / b.rhs;
        }
        return out;
    };
    auto st = run_ratio_study("genineq2", cfg.ens.count, eval, {0.0, false, true});
    double res = 0;
    for (double v : s0) res = std::max(res, v);
    st.extras.emplace_back("s0_residual", res);
    st.pass = st.pass && res <= 1e-6;
    return st;
}

// ------------------------------------------------------------ Dirac studies

struct dirac_study_config {
    ensemble_spec ens;
    double T = 10;
    double s = 1.5;        // angular regularity
    double sigma_w = 3.0;  // exponent of the smoothing weight w_sigma
    double data_radius = 12;
    double refine_factor = 1.5;
    int substeps = 4;  // splitting steps per frame
};

inline dirac_study_config default_dirac_config() {
    dirac_study_config c;
    c.ens.jj_max = 3;
    c.ens.rho_hi = 3.0;
    c.ens.width_lo = 0.2;
    c.ens.width_hi = 0.24;
    return c;
}

// Frames of e^{-it(D+V)} f at spacing h: exact spectral flow for V = 0,
// Strang splitting (radial phase, exact free step, radial phase) with
// `substeps` steps per frame otherwise.
inline trajectory dirac_member_trajectory(const dirac_spectral& sp, const potential_spec& V, double h, int frames,
                                          int substeps) {
    trajectory tr = make_dirac_trajectory(sp.rg, sp.labels);
    tr.times = uniform_times(h, frames);
    if (!V.active()) {
        tr.frames.resize(tr.times.size());
        for (std::size_t m = 0; m < tr.times.size(); ++m) {
            dirac_spectral cur = sp;
            dirac_free_evolve_spectral(cur, -tr.times[m]);
            tr.frames[m] = dirac_frame(dirac_to_pos(cur));
        }
        return tr;
    }
    validate_potential(V, *sp.rg);
    if (V.kind != potential_kind::radial_scalar) throw spec_error("dirac studies need a radial scalar potential");
    const double dt = h / substeps;
    const auto& g = *sp.rg;
    cvec half(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) half[i] = std::exp(-I * (0.5 * dt * V.scalar(g.r[i])));
    auto phase = [&](dirac_state& u) {
        for (auto& c : u.ch)
            for (std::size_t i = 0; i < g.size(); ++i) {
                c.plus[i] *= half[i];
                c.minus[i] *= half[i];
            }
    };
    dirac_state u = dirac_to_pos(sp);
    tr.frames.push_back(dirac_frame(u));
    for (int m = 1; m < frames; ++m) {
        for (int k = 0; k < substeps; ++k) {
            phase(u);
            auto f = dirac_to_freq(u, sp.kg);
            dirac_free_evolve_spectral(f, -dt);
            u = dirac_to_pos(f);
            phase(u);
        }
        tr.frames.push_back(dirac_frame(u));
    }
    return tr;
}

inline std::vector<std::string> dirac_study_ids(bool free) {
    std::vector<std::string> ids{"smoothdir", "smoonablau", "enddiracV", "enddiracVang", "energyang"};
    if (free) ids.insert(ids.begin(), "freedirac");
    return ids;
}

// One ratio study per estimate, all from the same member trajectories.
// freedirac is included only for V = 0.
inline std::vector<ratio_study> dirac_studies(const potential_spec& V, const dirac_study_config& cfg) {
    const double T = cfg.T, s = cfg.s;
    const bool free = !V.active();
    auto ids = dirac_study_ids(free);
    if (V.active()) {
        // surfaces hypothesis violations before any member runs
        validate_potential(V, *grid_with_spacing(1e-3, cfg.data_radius + 2 * T + 2.0, 400));
    }
    multi_member_eval eval = [&](int i, int level) {
        double fac = level == 0 ? 1.0 : cfg.refine_factor;
        double t_end = level == 0 ? 2 * T : T;
        double r_max = cfg.data_radius + t_end + 2.0;
        double rho_max = cfg.ens.rho_hi + 0.5;
        auto gp = study_grids(r_max, rho_max, r_max, 2.5 * rho_max, fac);
        auto m = make_dirac_member(cfg.ens, i, gp.rg, gp.kg);
        double h = 0.25 * pi / cfg.ens.rho_hi / (level + 1);
        int frames = static_cast<int>(std::ceil(t_end / h)) + 1;
        auto tr = dirac_member_trajectory(m.sp, V, h, frames, cfg.substeps);
        const auto& f = tr.frames[0];
        auto w = [sw = cfg.sigma_w](double r) { return weight_eval(weight_kind::w_sigma, sw, r); };
        double l2 = frame_l2(tr, f), h1 = frame_h1(tr, f), h1s = frame_h1(tr, f, s);
        auto energy = [&](double te) {
            double mx = 0;
            for (std::size_t k = 0; k < tr.times.size() && tr.times[k] <= te + 1e-12; ++k)
                mx = std::max(mx, frame_h1(tr, tr.frames[k], s));
            return mx;
        };
        auto pair = [&](auto fn, double rhs) {
            level_result r;
            r.descriptor = m.descriptor;
            r.lhs_T = fn(T);
            r.lhs_2T = level == 0 ? fn(2 * T) : 0.0;
            r.rhs = rhs;
            return r;
        };
        std::vector<level_result> out;
        if (free) out.push_back(pair([&](double te) { return mixed_endpoint_norm(tr, s, te).value; }, frame_hdot1(tr, f, s)));
        out.push_back(pair([&](double te) { return smoothing_norm(tr, w, 0, false, te).value; }, l2));
        out.push_back(pair([&](double te) { return smoothing_norm(tr, w, 0, true, te).value; }, h1));
        out.push_back(pair([&](double te) { return mixed_endpoint_norm(tr, 0, te).value; }, h1));
        out.push_back(pair([&](double te) { return mixed_endpoint_norm(tr, s, te).value; }, h1s));
        out.push_back(pair(energy, h1s));
        return out;
    };
    auto st = run_ratio_studies(ids, cfg.ens.count, eval, {T, true, true});
    for (auto& x : st) x.note += (x.note.empty() ? "" : "; ") + std::string("V = ") + V.name;
    return st;
}

// ------------------------------------------------------ wave with potential

struct wave_potential_spec {
    std::string name = "none";
    double delta = 0, eps = 0.1;
    std::function<double(double)> V;
    bool active() const { return static_cast<bool>(V); }
};

inline double wave_potential_bound(double r, double eps) { return 1.0 / (std::pow(r, 0.5 - eps) + r * r); }

// delta <1+r^2>^{-1} type profile, scaled so that max_r |V| / bound = 0.99 delta.
inline wave_potential_spec wave_potential_profile(const std::string& name, double delta, double eps = 0.1,
                                                  double scale = 1.0) {
    wave_potential_spec W;
    W.name = name;
    W.delta = delta;
    W.eps = eps;
    if (name == "none") return W;
    std::function<double(double)> shape;
    if (name == "bracket") {
        shape = [](double r) { return 1.0 / (1.0 + r * r); };
    } else if (name == "gaussian") {
        shape = [](double r) { return std::exp(-0.5 * r * r); };
    } else {
        throw spec_error("unknown wave potential '" + name + "' (expected none, bracket or gaussian)");
    }
    double peak = 0;
    for (int i = 0; i <= 4000; ++i) {
        double r = std::pow(10.0, -6.0 + 10.0 * i / 4000.0);
        peak = std::max(peak, shape(r) / wave_potential_bound(r, eps));
    }
    const double a = 0.99 * scale * delta / peak;
    W.V = [a, shape](double r) { return a * shape(r); };
    return W;
}

// Negative part must satisfy V_- <= delta / (r^{1/2-eps} + r^2); the
// positive part may carry any constant.
inline void validate_wave_potential(const wave_potential_spec& W, const radial_grid& rg) {
    if (!W.active()) return;
    for (std::size_t i = 0; i < rg.size(); ++i) {
        double r = rg.r[i], v = W.V(r), b = W.delta * wave_potential_bound(r, W.eps);
        if (!std::isfinite(v)) throw spec_error("wave potential " + W.name + " is not finite at r = " + std::to_string(r));
        if (v < 0 && -v > b * (1.0 + 1e-12))
            throw hypothesis_error("wave potential " + W.name + " violates V_- <= delta/(r^(1/2-eps)+r^2) at node " +
                                   std::to_string(i) + " (r = " + std::to_string(r) + ", V = " + std::to_string(v) +
                                   ", bound = " + std::to_string(b) + ")");
    }
}

struct wave_potential_config {
    ensemble_spec ens;
    double T = 10;
    double eps = 0.1;
    double data_radius = 12;
    double refine_factor = 1.5;
    int substeps = 4;
};

// endWEV: ||u||_{L^2 L^inf L^2_w} vs ||f||_{H^1 dot} + ||g||_{L^2} (F = 0);
// smooWE: ||(|x|^{1/2-eps} + |x|)^{-1} u||_{L^2 L^2} vs ||f||_{L^2} + || |D|^{-1} g ||_{L^2},
// both for u_tt - Delta u + V u = 0 with u(0) = f, u_t(0) = g, n = 3.
inline std::vector<ratio_study> wave_potential_study(const wave_potential_spec& W, const wave_potential_config& cfg) {
    const int n = 3;
    const double T = cfg.T;
    validate_wave_potential(W, *grid_with_spacing(1e-3, cfg.data_radius + 2 * T + 2.0, 400));
    multi_member_eval eval = [&](int i, int level) {
        double fac = level == 0 ? 1.0 : cfg.refine_factor;
        double t_end = level == 0 ? 2 * T : T;
        double r_max = cfg.data_radius + t_end + 2.0;
        double rho_max = cfg.ens.rho_hi + 0.5;
        auto gp = study_grids(r_max, rho_max, r_max, rho_max, fac);
        validate_wave_potential(W, *gp.rg);
        auto m = make_scalar_member(cfg.ens, i, *gp.kg, n);
        auto g = member_rng(cfg.ens.seed ^ 0x9FB21C651E98DF25ULL, i);
        cplx c = std::polar(0.7, uniform(g, 0.0, 2.0 * pi));
        channel_set gcheck = m.fcheck;
        for (auto& ch : gcheck)
            for (std::size_t j = 0; j < gp.kg->size(); ++j) ch.v[j] *= c * gp.kg->r[j];
        double h = 0.25 * pi / cfg.ens.rho_hi / (level + 1);
        int frames = static_cast<int>(std::ceil(t_end / h)) + 1;
        trajectory tr;
        tr.dim = n;
        tr.grid = gp.rg;
        tr.kind = profile_kind::scalar;
        tr.frames.assign(static_cast<std::size_t>(frames), std::vector<cvec>(m.fcheck.size()));
        for (std::size_t ch = 0; ch < m.fcheck.size(); ++ch) {
            int k = m.fcheck[ch].k;
            tr.degree.push_back(k);
            cvec f = hankel_synthesize(m.fcheck[ch].v, k, n, gp.kg, gp.rg);
            cvec gd = hankel_synthesize(gcheck[ch].v, k, n, gp.kg, gp.rg);
            auto wt = wave_potential_split_evolve(f, gd, k, n, gp.rg, gp.kg, h / cfg.substeps,
                                                  (frames - 1) * cfg.substeps, W.V, cfg.substeps);
            if (ch == 0) tr.times = wt.times;
            for (int fr = 0; fr < frames; ++fr) tr.frames[fr][ch] = std::move(wt.u[fr]);
        }
        const double P = plancherel(n);
        auto wfn = [e = cfg.eps](double r) { return sq(weight_eval(weight_kind::tau_eps, e, r)); };
        level_result a, b;
        a.descriptor = b.descriptor = m.descriptor;
        a.lhs_T = mixed_endpoint_norm(tr, 0, T).value;
        a.lhs_2T = level == 0 ? mixed_endpoint_norm(tr, 0, 2 * T).value : 0.0;
        a.rhs = P * (channel_sobolev_norm(m.fcheck, 1, 0, n, *gp.kg) + channel_sobolev_norm(gcheck, 0, 0, n, *gp.kg));
        b.lhs_T = smoothing_norm(tr, wfn, 0, false, T).value;
        b.lhs_2T = level == 0 ? smoothing_norm(tr, wfn, 0, false, 2 * T).value : 0.0;
        b.rhs = P * (channel_sobolev_norm(m.fcheck, 0, 0, n, *gp.kg) + channel_sobolev_norm(gcheck, -1, 0, n, *gp.kg));
        return std::vector<level_result>{a, b};
    };
    auto st = run_ratio_studies({"endWEV", "smooWE"}, cfg.ens.count, eval, {T, true, true});
    for (auto& x : st) x.note += (x.note.empty() ? "" : "; ") + std::string("V = ") + W.name;
    return st;
}

// ------------------------------------------------------- nonlinear Dirac

struct nld_grid_params {
    double r_min = 0.002, r_max = 70;
    int n_log = 60, n_lin = 260;
    double rho_min = 0.01, rho_max = 5;
    int k_log = 50, k_lin = 190;
    int L = 16;
    int jj_max = 15;
};

struct nld_study_config {
    ensemble_spec ens;
    nld_grid_params grid;
    double eps = 1e-3;
    double s = 1.5;
    double T = 50;
    double dt = 0.5;
    std::string cubic = "mass_cubic";
    potential_spec V;
    rvec radii{1e-3, 3e-3, 1e-2};
    double refine_factor = 1.5;
};

inline nld_study_config default_nld_config() {
    nld_study_config c;
    c.ens.rho_lo = 0.5;
    c.ens.rho_hi = 3.0;
    c.ens.width_lo = 0.2;
    c.ens.width_hi = 0.24;
    c.ens.bumps = 1;
    return c;
}

inline nld_setup make_nld_setup(const nld_study_config& cfg, int level) {
    const auto& g = cfg.grid;
    double fac = level == 0 ? 1.0 : cfg.refine_factor;
    auto sc = [fac](int n) { return static_cast<int>(std::lround(n * fac)); };
    nld_setup su;
    su.rg = build_radial_grid(g.r_min, g.r_max, sc(g.n_log), sc(g.n_lin));
    su.kg = build_radial_grid(g.rho_min, g.rho_max, sc(g.k_log), sc(g.k_lin));
    su.sg = make_sphere_grid(g.L);
    su.jj_max = g.jj_max;
    su.V = cfg.V;
    su.P = cubic_by_name(cfg.cubic);
    su.dt = level == 0 ? cfg.dt : 0.5 * cfg.dt;
    return su;
}

// Positive-energy data in the j = 1/2 channels: a^- = sign(kappa) a^+, so
// the free flow is a pure phase e^{-it rho} and conserves every channel
// norm.  Scaled so that ||Lambda^s f||_{H^1} = eps.
inline dirac_state make_nld_data(const ensemble_spec& e, int member, const grid_ptr& rg, const grid_ptr& kg,
                                 double eps, double s) {
    auto g = member_rng(e.seed, member);
    dirac_spectral sp{rg, kg, {}, {}, {}};
    for (auto& l : spinor_labels(1)) {
        auto bs = random_bumps(g, e);
        cvec a = sample_bumps(bs, *kg, e);
        cvec b = a;
        if (l.kappa < 0)
            for (auto& z : b) z = -z;
        sp.labels.push_back(l);
        sp.ap.push_back(a);
        sp.am.push_back(b);
    }
    dirac_state st = dirac_to_pos(sp);
    trajectory tr = make_dirac_trajectory(rg, sp.labels);
    double nrm = frame_h1(tr, dirac_frame(st), s);
    for (auto& c : st.ch)
        for (std::size_t i = 0; i < rg->size(); ++i) {
            c.plus[i] *= eps / nrm;
            c.minus[i] *= eps / nrm;
        }
    return st;
}

inline trajectory scale_trajectory(const trajectory& a, double c) { return trajectory_combine(a, c, a, 0.0); }

// ||Lambda^s P(v)||_{L^1_t L^2_x} over the frames of v.
inline double cubic_l1l2(const nld_solver& S, const trajectory& v, double s) {
    rvec vals(v.times.size());
    for (std::size_t m = 0; m < v.times.size(); ++m) {
        dirac_state p = S.nonlinearity(state_from_frame(v.grid, S.labels(), v.frames[m]));
        vals[m] = frame_l2(v, dirac_frame(p), s);
    }
    return time_integral(v.times, vals, 1e300);
}

// Least-squares slope and intercept of y against x.
inline std::pair<double, double> linear_fit(const rvec& x, const rvec& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

struct contraction_report {
    rvec radii, lipschitz;  // ||Phi(v) - Phi(w)||_X / ||v - w||_X per radius
    rvec phi_minus_phi0;    // ||Phi(v) - Phi(0)||_X per radius
    double slope = 0, intercept = 0;
    double cubic_exponent = 0;  // slope of log ||Phi(v) - Phi(0)|| against log ||v||
    double A = 0, B = 0;        // ||Phi(v)||_X <= A ||Lambda^s f||_{H^1} + B ||v||_X^3 on these samples
};

// v = R vhat, w = R what with ||vhat||_X = ||what||_X = 1, for each radius R.
inline contraction_report contraction_study(const nld_solver& S, const dirac_state& f, const trajectory& vhat,
                                            const trajectory& what, const rvec& radii, double s) {
    contraction_report rep;
    rep.radii = radii;
    const double fn = frame_h1(vhat, dirac_frame(embed_state(f, S.labels())), s);
    const trajectory p0 = picard_iterate(S, scale_trajectory(vhat, 0.0), f);
    const double n0 = x_norm(p0, s).value;
    rep.A = n0 / fn;
    rvec lx, ly, cx, cy;
    for (double R : radii) {
        trajectory v = scale_trajectory(vhat, R), w = scale_trajectory(what, R);
        trajectory pv = picard_iterate(S, v, f), pw = picard_iterate(S, w, f);
        double lip = x_norm(trajectory_combine(pv, 1.0, pw, -1.0), s).value /
                     x_norm(trajectory_combine(v, 1.0, w, -1.0), s).value;
        double d0 = x_norm(trajectory_combine(pv, 1.0, p0, -1.0), s).value;
        double nv = x_norm(v, s).value, npv = x_norm(pv, s).value;
        rep.lipschitz.push_back(lip);
        rep.phi_minus_phi0.push_back(d0);
        rep.B = std::max(rep.B, std::max(0.0, npv - n0) / std::pow(nv, 3));
        lx.push_back(std::log(R));
        ly.push_back(std::log(lip));
        cx.push_back(std::log(nv));
        cy.push_back(std::log(d0));
    }
    std::tie(rep.slope, rep.intercept) = linear_fit(lx, ly);
    rep.cubic_exponent = linear_fit(cx, cy).first;
    return rep;
}

struct nld_level_report {
    double dt = 0;
    std::size_t r_nodes = 0;
    double data_norm = 0;       // ||Lambda^s f||_{H^1}
    double sup_lambda_h1 = 0;   // sup_t ||Lambda^s u(t)||_{H^1}
    double x_half = 0, x_T = 0; // running X-norm at T/2 and T
    double l2_drift = 0;        // max_t | ||u(t)|| - ||f|| | / ||f||
    double product_C = 0;       // ||Lambda^s P(u)||_{L^1L^2} / (||Lambda^s u||_{L^inf L^2} ||Lambda^s u||^2_{L^2L^inf L^2})
};

struct nld_report {
    nld_level_report base, refined;
    double picard_residual = 0;
    double homogeneity_error = 0;  // max over lambda in {1/2, 2} of |corr(lambda f) / (lambda^3 corr(f)) - 1|
    contraction_report contraction;
    std::vector<nld_diag_row> diag;  // base-level diagnostics
    bool bound_ok = false, x_stable = false, picard_ok = false, contraction_ok = false, cubic_ok = false,
         product_ok = false, homogeneity_ok = false, pass = false;
};

inline nld_level_report nld_level_run(const nld_study_config& cfg, int level, nld_run* keep = nullptr) {
    nld_solver S(make_nld_setup(cfg, level));
    auto f = make_nld_data(cfg.ens, 0, S.setup().rg, S.setup().kg, cfg.eps, cfg.s);
    nld_run_options opt;
    opt.T = cfg.T;
    opt.s = cfg.s;
    auto run = nld_simulate(S, f, opt);
    nld_level_report r;
    r.dt = S.dt();
    r.r_nodes = S.setup().rg->size();
    r.data_norm = run.data_norm;
    double l20 = run.diag.front().l2;
    for (auto& d : run.diag) {
        r.sup_lambda_h1 = std::max(r.sup_lambda_h1, d.lambda_h1);
        r.l2_drift = std::max(r.l2_drift, std::abs(d.l2 - l20) / l20);
        if (d.t <= 0.5 * cfg.T + 1e-9) r.x_half = d.x_running;
    }
    r.x_T = run.diag.back().x_running;
    double linf = 0;
    for (auto& fr : run.traj.frames) linf = std::max(linf, frame_l2(run.traj, fr, cfg.s));
    double end = mixed_endpoint_norm(run.traj, cfg.s).value;
    r.product_C = cubic_l1l2(S, run.traj, cfg.s) / (linf * end * end);
    if (keep) *keep = std::move(run);
    return r;
}

// Small-data run of the cubic Dirac equation with the finite-T substitutes
// for global existence: bound on ||Lambda^s u||_{H^1}, T-stability of the
// running X-norm, Picard self-consistency, contraction exponent, product
// chain constant and cubic homogeneity of the first Picard correction.
inline nld_report nld_small_data_study(const nld_study_config& cfg) {
    nld_report rep;
    nld_run run;
    rep.base = nld_level_run(cfg, 0, &run);
    rep.refined = nld_level_run(cfg, 1);
    rep.diag = run.diag;

    nld_solver S(make_nld_setup(cfg, 0));
    auto f = make_nld_data(cfg.ens, 0, S.setup().rg, S.setup().kg, cfg.eps, cfg.s);
    {
        trajectory phi = picard_iterate(S, run.traj, f);
        rep.picard_residual = x_norm(trajectory_combine(phi, 1.0, run.traj, -1.0), cfg.s).value / x_norm(run.traj, cfg.s).value;
    }

    // first Picard correction Phi(Phi(0)) - Phi(0) under f -> lambda f
    {
        trajectory zero = scale_trajectory(run.traj, 0.0);
        auto corr = [&](double lam) {
            dirac_state g = f;
            for (auto& c : g.ch)
                for (std::size_t i = 0; i < g.grid->size(); ++i) {
                    c.plus[i] *= lam;
                    c.minus[i] *= lam;
                }
            trajectory p0 = picard_iterate(S, zero, g);
            trajectory p1 = picard_iterate(S, p0, g);
            return x_norm(trajectory_combine(p1, 1.0, p0, -1.0), cfg.s).value;
        };
        double c1 = corr(1.0);
        for (double lam : {0.5, 2.0})
            rep.homogeneity_error = std::max(rep.homogeneity_error, std::abs(corr(lam) / (lam * lam * lam * c1) - 1.0));
    }

    // contraction: vhat, what are normalized linear flows of two data sets
    {
        nld_study_config lc = cfg;
        lc.cubic = "none";
        nld_solver L(make_nld_setup(lc, 0));
        nld_run_options opt;
        opt.T = cfg.T;
        opt.s = cfg.s;
        auto linear = [&](int member) {
            auto g = make_nld_data(cfg.ens, member, S.setup().rg, S.setup().kg, 1.0, cfg.s);
            auto r = nld_simulate(L, g, opt);
            return scale_trajectory(r.traj, 1.0 / x_norm(r.traj, cfg.s).value);
        };
        trajectory vh = linear(1), wh = linear(2);
        run = nld_run{};  // release the base frames before the contraction runs
        rep.contraction = contraction_study(S, f, vh, wh, cfg.radii, cfg.s);
    }

    rep.bound_ok = rep.base.sup_lambda_h1 <= 2 * cfg.eps && rep.refined.sup_lambda_h1 <= 2 * cfg.eps;
    rep.x_stable = rep.base.x_T <= 1.05 * rep.base.x_half && rep.refined.x_T <= 1.05 * rep.refined.x_half;
    rep.picard_ok = rep.picard_residual <= 1e-3;
    rep.contraction_ok = std::abs(rep.contraction.slope - 2.0) <= 0.3;
    rep.cubic_ok = std::abs(rep.contraction.cubic_exponent - 3.0) <= 0.3;
    rep.product_ok = std::isfinite(rep.base.product_C) && std::isfinite(rep.refined.product_C) &&
                     std::abs(rep.refined.product_C - rep.base.product_C) <= 0.1 * rep.base.product_C;
    rep.homogeneity_ok = rep.homogeneity_error <= 0.01;
    rep.pass = rep.bound_ok && rep.x_stable && rep.picard_ok && rep.contraction_ok && rep.cubic_ok && rep.product_ok &&
               rep.homogeneity_ok;
    return rep;
}

// ------------------------------------------------------- exact identities

struct check_entry {
    std::string group;  // algebra, transform, propagator, dirac, norms, spinor, transfer
    std::string name;
    double value = 0;  // measured residual (or order / ratio where stated)
    double lo = 0, hi = 0;  // pass when lo <= value <= hi
    bool pass = false;
};

inline check_entry make_check(std::string group, std::string name, double value, double lo, double hi) {
    return {std::move(group), std::move(name), value, lo, hi, std::isfinite(value) && value >= lo && value <= hi};
}

// Every ordered pair (k, l): alpha_k alpha_l + alpha_l alpha_k = 2 delta_kl I.
inline std::vector<check_entry> algebra_checks() {
    std::vector<check_entry> out;
    const char* nm = "123";
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
            mat4 a = dirac_alpha(k) * dirac_alpha(l) + dirac_alpha(l) * dirac_alpha(k);
            mat4 want = (k == l ? 2.0 : 0.0) * mat4::Identity();
            out.push_back(make_check("algebra", std::string("alpha") + nm[k] + " alpha" + nm[l] + " anticommutator",
                                     (a - want).cwiseAbs().maxCoeff(), 0, 0));
        }
    double b = 0;
    for (int k = 0; k < 3; ++k) b = std::max(b, (dirac_alpha(k) * dirac_beta() + dirac_beta() * dirac_alpha(k)).cwiseAbs().maxCoeff());
    out.push_back(make_check("algebra", "alpha beta anticommutators", b, 0, 0));
    return out;
}

// Channel form of D^2 = -Delta with second-order differences: for psi^- = 0
// the + component of D(D psi) must equal -psi'' + kappa(kappa+1)/r^2 psi.
// Returns the observed order from two grids with spacing ratio 2.
inline double dirac_square_order(int kappa = 2) {
    const spinor_label lab{2 * std::abs(kappa) - 1, 1, kappa};
    const int lp = lab.ell_plus();
    auto psi = [lp](double r) { return std::pow(r, lp + 1) * std::exp(-0.25 * r * r); };
    auto exact = [lp, kappa](double r) {
        // psi = r^a e^{-r^2/4}, a = lp + 1
        double a = lp + 1.0;
        double e = std::exp(-0.25 * r * r);
        double d2 = (a * (a - 1) * std::pow(r, a - 2) - (a + 0.5) * std::pow(r, a) + 0.25 * std::pow(r, a + 2)) * e;
        return -d2 + kappa * (kappa + 1.0) / (r * r) * std::pow(r, a) * e;
    };
    auto err = [&](int n_lin) {
        auto g = grid_with_spacing(0.01, 12, n_lin);
        cvec p(g->size()), z(g->size(), 0.0);
        for (std::size_t i = 0; i < g->size(); ++i) p[i] = psi(g->r[i]);
        auto d1 = dirac_radial_apply(p, z, kappa, *g, 2);
        auto d2 = dirac_radial_apply(d1.plus, d1.minus, kappa, *g, 2);
        double e = 0;
        for (std::size_t i = 0; i < g->size(); ++i)
            if (g->r[i] >= 0.5 && g->r[i] <= 8) e = std::max(e, std::abs(d2.plus[i] - exact(g->r[i])));
        return e;
    };
    return std::log2(err(200) / err(400));
}

inline std::vector<check_entry> transform_checks(int members = 20, int kmax = 8, std::uint64_t seed = 7) {
    std::vector<check_entry> out;
    for (int n : {3, 4}) {
        ensemble_spec e;
        e.seed = seed;
        e.k_max = kmax;
        e.channels = 1;
        // band-window tails decay slowly in position, hence the wide box
        auto gp = study_grids(60, 4.5, 60, 4.5, 1.0);
        double rt = 0, pl = 0;
        for (int i = 0; i < members; ++i) {
            auto m = make_scalar_member(e, i, *gp.kg, n);
            auto& c = m.fcheck[0];
            cvec g = hankel_synthesize(c.v, c.k, n, gp.kg, gp.rg);
            cvec back = hankel_analyze(g, c.k, n, gp.rg, gp.kg);
            double num = 0, den = 0;
            for (std::size_t j = 0; j < gp.kg->size(); ++j) {
                double w = gp.kg->w[j] * std::pow(gp.kg->r[j], n - 1);
                num += w * std::norm(back[j] - c.v[j]);
                den += w * std::norm(c.v[j]);
            }
            rt = std::max(rt, std::sqrt(num / den));
            double pos = channel_position_norms({{c.k, c.l, g}}, 0, n, *gp.rg).l2;
            double frq = plancherel(n) * channel_sobolev_norm(m.fcheck, 0, 0, n, *gp.kg);
            pl = std::max(pl, std::abs(pos - frq) / frq);
        }
        out.push_back(make_check("transform", "hankel round trip n=" + std::to_string(n), rt, 0, 1e-6));
        out.push_back(make_check("transform", "plancherel n=" + std::to_string(n), pl, 0, 1e-6));
        // r^k e^{-r^2/2} Y_k is mapped to (2 pi)^{n/2} i^{-k} r^k e^{-r^2/2} by the synthesis
        auto rg = grid_with_spacing(1e-3, 12, 200), kg = grid_with_spacing(1e-3, 12, 200);
        double gs = 0;
        for (int k = 0; k <= kmax; ++k) {
            cvec c(kg->size());
            for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::pow(kg->r[j], k) * std::exp(-0.5 * sq(kg->r[j]));
            cvec g = hankel_synthesize(c, k, n, kg, rg);
            double num = 0, den = 0;
            for (std::size_t i = 0; i < rg->size(); ++i) {
                double r = rg->r[i], w = rg->w[i] * std::pow(r, n - 1);
                cplx want = plancherel(n) * ipow(-k) * std::pow(r, k) * std::exp(-0.5 * r * r);
                num += w * std::norm(g[i] - want);
                den += w * std::norm(want);
            }
            gs = std::max(gs, std::sqrt(num / den));
        }
        out.push_back(make_check("transform", "gaussian closed form n=" + std::to_string(n), gs, 0, 1e-6));
    }
    return out;
}

// Multiplier route against the kernel (Q_k) route of e^{it|D|}.
inline std::vector<check_entry> two_route_checks(int kmax = 8, std::uint64_t seed = 11) {
    std::vector<check_entry> out;
    for (int n : {3, 4}) {
        for (double t : {0.5, 2.0, 8.0}) {
            ensemble_spec e;
            e.seed = seed;
            e.rho_hi = 3.0;
            e.width_lo = 0.2;
            e.width_hi = 0.24;
            auto gp = study_grids(16, 3.5, 16 + t, 3.5, 1.0);
            rvec res(static_cast<std::size_t>(kmax + 1));
            parallel_for(res.size(), [&](std::size_t k) {
                auto g = member_rng(seed, static_cast<int>(k));
                cvec f = sample_bumps(random_bumps(g, e), *gp.kg, e);
                cvec a = wave_channel_evolve_multiplier(f, static_cast<int>(k), n, t, gp.kg, gp.rg);
                cvec b = wave_channel_evolve_qrep(f, static_cast<int>(k), n, t, gp.kg, gp.rg);
                double num = 0, den = 0;
                for (std::size_t i = 0; i < gp.rg->size(); ++i) {
                    double w = gp.rg->w[i] * std::pow(gp.rg->r[i], n - 1);
                    num += w * std::norm(a[i] - b[i]);
                    den += w * std::norm(a[i]);
                }
                res[k] = std::sqrt(num / den);
            });
            char buf[64];
            std::snprintf(buf, sizeof buf, "two-route n=%d t=%g k<=%d", n, t, kmax);
            out.push_back(make_check("propagator", buf, *std::max_element(res.begin(), res.end()), 0, 1e-4));
        }
    }
    return out;
}

inline dirac_state smooth_dirac_state(const grid_ptr& g, const std::vector<spinor_label>& labels, std::uint64_t seed) {
    auto rng = member_rng(seed, 0);
    dirac_state st = zero_dirac_state(g, labels);
    for (auto& c : st.ch) {
        cplx a = std::polar(uniform(rng, 0.5, 1.0), uniform(rng, 0.0, 2 * pi));
        cplx b = std::polar(uniform(rng, 0.5, 1.0), uniform(rng, 0.0, 2 * pi));
        double r0 = uniform(rng, 2.0, 4.0);
        for (std::size_t i = 0; i < g->size(); ++i) {
            double r = g->r[i];
            c.plus[i] = a * std::pow(r, c.label.ell_plus() + 1) * std::exp(-0.5 * sq(r - r0));
            c.minus[i] = b * std::pow(r, c.label.ell_minus() + 1) * std::exp(-0.5 * sq(r - r0));
        }
    }
    return st;
}

inline double dirac_state_distance(const dirac_state& a, const dirac_state& b) {
    double num = 0, den = 0;
    for (std::size_t c = 0; c < a.ch.size(); ++c)
        for (std::size_t i = 0; i < a.grid->size(); ++i) {
            double w = a.grid->w[i];
            num += w * (std::norm(a.ch[c].plus[i] - b.ch[c].plus[i]) + std::norm(a.ch[c].minus[i] - b.ch[c].minus[i]));
            den += w * (std::norm(a.ch[c].plus[i]) + std::norm(a.ch[c].minus[i]));
        }
    return std::sqrt(num / den);
}

// Conservation laws of the unitary flows and Crank-Nicolson convergence.
inline std::vector<check_entry> dirac_flow_checks(std::uint64_t seed = 5) {
    std::vector<check_entry> out;
    {
        ensemble_spec e;
        e.seed = seed;
        e.jj_max = 5;
        e.channels = 3;
        e.rho_hi = 3.0;
        e.width_lo = 0.2;
        e.width_hi = 0.24;
        auto gp = study_grids(40, 3.5, 40, 3.5, 1.0);
        auto m = make_dirac_member(e, 0, gp.rg, gp.kg);
        dirac_state f = dirac_to_pos(m.sp);
        double l0 = dirac_l2(f), worst = 0;
        for (double t : {1.0, 5.0, 20.0}) {
            auto sp = m.sp;
            dirac_free_evolve_spectral(sp, t);
            worst = std::max(worst, std::abs(dirac_l2(dirac_to_pos(sp)) - l0) / l0);
        }
        out.push_back(make_check("dirac", "free flow L2 conservation", worst, 0, 1e-8));
    }
    auto g = build_radial_grid(0.002, 30, 60, 300);
    auto labels = std::vector<spinor_label>{{3, 1, 2}, {3, -1, -2}, {5, 1, 3}};
    dirac_state f = smooth_dirac_state(g, labels, seed);
    auto V = to_channel_potential(radial_potential_profile("bracket", 0.05));
    {
        dirac_cn_stepper S(g, 0.1, V);
        dirac_state u = f;
        double n0 = dirac_operator_norm(u);
        for (int k = 0; k < 200; ++k) S.step(u);
        out.push_back(make_check("dirac", "Crank-Nicolson unitarity (200 steps)", std::abs(dirac_operator_norm(u) - n0) / n0, 0, 1e-8));
    }
    {
        auto run = [&](double dt) {
            dirac_cn_stepper S(g, dt, V);
            dirac_state u = f;
            int steps = static_cast<int>(std::lround(2.0 / dt));
            for (int k = 0; k < steps; ++k) S.step(u);
            return u;
        };
        auto a = run(0.2), b = run(0.1), c = run(0.05);
        double ratio = dirac_state_distance(a, b) / dirac_state_distance(b, c);
        out.push_back(make_check("dirac", "Crank-Nicolson Richardson ratio", ratio, 3.6, 4.4));
    }
    return out;
}

// Three computations of || grad Lambda^m f ||^2 (frequency side, gradient
// form, quadratic form with the second-order radial operator) and of
// || Lambda^m f ||^2 (position and frequency side).
struct norm_equivalence_row {
    int n = 3, m = 0;
    double freq = 0, gradient_form = 0, quadratic_form = 0;
    double l2_pos = 0, l2_freq = 0;
    double bracket_form = 0;  // gradient form with <k>^{2m} in place of the exact eigenvalue
};

inline std::vector<norm_equivalence_row> norm_equivalences(std::uint64_t seed = 3) {
    std::vector<norm_equivalence_row> rows;
    for (int n : {3, 4}) {
        ensemble_spec e;
        e.seed = seed;
        e.k_max = 4;
        e.channels = 3;
        auto gp = study_grids(30, 4.5, 30, 2.0 * 4.5, 2.0);
        auto mem = make_scalar_member(e, 0, *gp.kg, n);
        const auto& R = *gp.rg;
        for (int m : {0, 1, 2}) {
            norm_equivalence_row row;
            row.n = n;
            row.m = m;
            for (auto& c : mem.fcheck) {
                double lam = double(c.k) * (c.k + n - 2);
                double w = std::pow(1.0 + lam, m), wb = std::pow(1.0 + double(c.k) * c.k, m);
                double fr = 0, fl = 0;
                for (std::size_t j = 0; j < gp.kg->size(); ++j) {
                    double q = gp.kg->w[j] * std::norm(c.v[j]) * std::pow(gp.kg->r[j], n - 1);
                    fr += q * sq(gp.kg->r[j]);
                    fl += q;
                }
                row.freq += w * std::pow(2.0 * pi, n) * fr;
                row.l2_freq += w * std::pow(2.0 * pi, n) * fl;
                cvec u = hankel_synthesize(c.v, c.k, n, gp.kg, gp.rg);
                cvec d = radial_derivative(R, u, 6);
                cvec rd(R.size());
                for (std::size_t i = 0; i < R.size(); ++i) rd[i] = std::pow(R.r[i], n - 1) * d[i];
                cvec dd = radial_derivative(R, rd, 6);
                double gf = 0, gq = 0, l2 = 0, ang = 0;
                for (std::size_t i = 0; i < R.size(); ++i) {
                    double r = R.r[i], rn = std::pow(r, n - 1);
                    gf += R.w[i] * std::norm(d[i]) * rn;
                    ang += R.w[i] * std::norm(u[i]) * std::pow(r, n - 3);
                    l2 += R.w[i] * std::norm(u[i]) * rn;
                    cplx Lu = -dd[i] / rn + lam / (r * r) * u[i];
                    gq += R.w[i] * std::real(std::conj(u[i]) * Lu) * rn;
                }
                row.gradient_form += w * (gf + lam * ang);
                row.quadratic_form += w * gq;
                row.l2_pos += w * l2;
                row.bracket_form += wb * (gf + double(c.k) * c.k * ang);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::vector<check_entry> norm_checks() {
    std::vector<check_entry> out;
    for (auto& r : norm_equivalences()) {
        std::string tag = " n=" + std::to_string(r.n) + " m=" + std::to_string(r.m);
        double a = std::abs(r.gradient_form - r.freq) / r.freq;
        double b = std::abs(r.quadratic_form - r.freq) / r.freq;
        double c = std::abs(r.l2_pos - r.l2_freq) / r.l2_freq;
        out.push_back(make_check("norms", "gradient form vs frequency side" + tag, a, 0, 0.02));
        out.push_back(make_check("norms", "quadratic form vs frequency side" + tag, b, 0, 0.02));
        out.push_back(make_check("norms", "Lambda^m L2 position vs frequency" + tag, c, 0, 0.02));
    }
    return out;
}

// Collocation round trip and the spectral round trip of Dirac states.
inline std::vector<check_entry> spinor_checks(std::uint64_t seed = 9) {
    std::vector<check_entry> out;
    auto g = build_radial_grid(0.01, 12, 30, 60);
    auto labels = spinor_labels(7);
    dirac_state st = smooth_dirac_state(g, labels, seed);
    auto sg = make_sphere_grid(8);
    dirac_state back = spinor_decompose(spinor_reconstruct(st, sg), 7);
    out.push_back(make_check("spinor", "collocation round trip j <= 7/2", dirac_state_distance(st, back), 0, 1e-10));
    double ratio = dirac_l2(st) / spinor_field_l2(spinor_reconstruct(st, sg));
    out.push_back(make_check("spinor", "collocation L2 identity", std::abs(ratio - 1.0), 0, 1e-10));
    ensemble_spec e;
    e.seed = seed;
    e.jj_max = 5;
    e.channels = 3;
    auto gp = study_grids(30, 4.5, 30, 4.5, 1.0);
    auto m = make_dirac_member(e, 0, gp.rg, gp.kg);
    dirac_state pos = dirac_to_pos(m.sp);
    dirac_state again = dirac_to_pos(dirac_to_freq(pos, gp.kg));
    out.push_back(make_check("spinor", "spectral round trip", dirac_state_distance(pos, again), 0, 1e-6));
    return out;
}

inline std::vector<check_entry> transfer_checks(int members = 5, std::uint64_t seed = 13) {
    std::vector<check_entry> out;
    for (int n : {3, 4}) {
        ensemble_spec e;
        e.seed = seed;
        auto gp = study_grids(40, 4.5, 50, 4.5, 1.0);
        double res = 0;
        for (int i = 0; i < members; ++i) {
            auto m = make_scalar_member(e, i, *gp.kg, n);
            auto t = weighted_transfer_check(m.fcheck, 0, sigma_of(n), n, gp.kg, gp.rg);
            res = std::max(res, std::abs(t.lhs - t.rhs) / t.rhs);
        }
        out.push_back(make_check("transfer", "weighted transfer s=0 equality n=" + std::to_string(n), res, 0, 1e-6));
    }
    return out;
}

inline std::vector<check_entry> equivalence_suite() {
    std::vector<check_entry> out;
    auto add = [&](std::vector<check_entry> v) { out.insert(out.end(), v.begin(), v.end()); };
    add(algebra_checks());
    out.push_back(make_check("algebra", "D^2 = -Delta channel order", dirac_square_order(), 1.9, 1e9));
    add(transform_checks());
    add(two_route_checks());
    add(spinor_checks());
    add(norm_checks());
    add(transfer_checks());
    add(dirac_flow_checks());
    return out;
}

}  // namespace pwave
