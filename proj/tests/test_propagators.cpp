#include <catch_amalgamated.hpp>

#include <random>

#include "pwave/propagators.hpp"

using namespace pwave;
using Catch::Approx;

namespace {

double rel_err(const cvec& a, const cvec& b, const radial_grid& g, int n) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double w = g.w[i] * std::pow(g.r[i], n - 1);
        num += w * std::norm(a[i] - b[i]);
        den += w * std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

cvec gaussian_freq(const radial_grid& kg, int k, int n) {
    cvec c(kg.size());
    for (std::size_t j = 0; j < c.size(); ++j)
        c[j] = std::pow(2 * pi, -0.5 * n) * std::pow(kg.r[j], k) * std::exp(-0.5 * sq(kg.r[j]));
    return c;
}

dirac_state gaussian_dirac(const grid_ptr& g, const std::vector<spinor_label>& labels) {
    dirac_state st{g, {}};
    double r0 = 3.0;
    for (auto& l : labels) {
        dirac_channel c{l, cvec(g->size()), cvec(g->size())};
        for (std::size_t i = 0; i < g->size(); ++i) {
            double r = g->r[i], e = std::exp(-0.5 * sq(r - r0));
            c.plus[i] = cplx(1.0, 0.3) * std::pow(r, l.ell_plus() + 1) * e;
            c.minus[i] = cplx(-0.4, 0.8) * std::pow(r, l.ell_minus() + 1) * e;
        }
        r0 += 0.5;
        st.ch.push_back(std::move(c));
    }
    return st;
}

double distance(const dirac_state& a, const dirac_state& b) {
    double num = 0, den = 0;
    for (std::size_t c = 0; c < a.ch.size(); ++c)
        for (std::size_t i = 0; i < a.grid->size(); ++i) {
            double w = a.grid->w[i];
            num += w * (std::norm(a.ch[c].plus[i] - b.ch[c].plus[i]) + std::norm(a.ch[c].minus[i] - b.ch[c].minus[i]));
            den += w * (std::norm(b.ch[c].plus[i]) + std::norm(b.ch[c].minus[i]));
        }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("free wave matches the spherical mean formula", "[propagators]") {
    // radial f in 3D: cos(t|D|) f = ((r+t) f(r+t) + (r-t) f(r-t)) / (2r)
    auto kg = build_radial_grid(1e-3, 10, 40, 200), rg = build_radial_grid(1e-3, 14, 60, 300);
    auto c = gaussian_freq(*kg, 0, 3);
    rvec times{0.0, 1.0, 2.5, 5.0};
    auto U = wave_frames(c, 0, 3, times, kg, rg, false);
    for (std::size_t m = 0; m < times.size(); ++m) {
        double t = times[m];
        cvec u(rg->size()), want(rg->size());
        for (std::size_t i = 0; i < rg->size(); ++i) {
            double r = rg->r[i];
            u[i] = U(i, m);
            want[i] = ((r + t) * std::exp(-0.5 * sq(r + t)) + (r - t) * std::exp(-0.5 * sq(r - t))) / (2 * r);
        }
        CHECK(rel_err(u, want, *rg, 3) < 1e-6);
    }
    CHECK_THROWS_AS(wave_frames(c, 0, 3, {100.0}, kg, rg), resolution_error);
}

TEST_CASE("kernel representation agrees with the multiplier", "[propagators]") {
    auto kg = build_radial_grid(1e-3, 10, 40, 200), rg = build_radial_grid(1e-3, 14, 60, 300);
    for (int n : {3, 4, 5})
        for (int k : {0, 1, 3}) {
            auto c = gaussian_freq(*kg, k, n);
            for (double t : {0.0, 2.0, 6.0}) {
                auto a = wave_channel_evolve_multiplier(c, k, n, t, kg, rg);
                auto b = wave_channel_evolve_qrep(c, k, n, t, kg, rg);
                CHECK(rel_err(b, a, *rg, n) < 1e-6);
            }
        }
    CHECK_THROWS_AS(wave_channel_evolve_qrep(gaussian_freq(*kg, 0, 2), 0, 2, 1.0, kg, rg), domain_error);
}

TEST_CASE("Duhamel integral", "[propagators]") {
    // constant forcing: int_0^t e^{i(t-s)rho} ds = (e^{it rho} - 1) / (i rho)
    auto kg = build_radial_grid(1e-3, 10, 40, 200), rg = build_radial_grid(1e-3, 14, 60, 300);
    const int n = 3, k = 1;
    auto F = gaussian_freq(*kg, k, n);
    const double T = 2.0;
    cvec exact_c(kg->size());
    for (std::size_t j = 0; j < kg->size(); ++j) {
        double rho = kg->r[j];
        exact_c[j] = (std::exp(I * (T * rho)) - 1.0) / (I * rho) * F[j];
    }
    auto exact = hankel_synthesize(exact_c, k, n, kg, rg);
    auto run = [&](int M) {
        rvec s(M + 1);
        for (int m = 0; m <= M; ++m) s[m] = T * m / M;
        std::vector<cvec> Fs(M + 1, F);
        auto U = wave_duhamel_channel(Fs, s, k, n, kg, rg);
        cvec u(U.col(M).data(), U.col(M).data() + U.rows());
        return rel_err(u, exact, *rg, n);
    };
    double e1 = run(200), e2 = run(400);
    CHECK(e2 < 1e-3);
    CHECK(std::log2(e1 / e2) == Approx(2.0).margin(0.1));
    CHECK_THROWS_AS(run(10), resolution_error);
    CHECK_THROWS_AS(wave_duhamel_channel({F}, {0.0, 1.0}, k, n, kg, rg), domain_error);
}

TEST_CASE("Dirac matrices", "[propagators]") {
    mat4 id = mat4::Identity(), b = dirac_beta();
    for (int i = 0; i < 3; ++i) {
        mat4 a = dirac_alpha(i);
        CHECK((a - a.adjoint()).norm() == 0.0);
        CHECK((a * b + b * a).norm() == 0.0);
        for (int j = 0; j < 3; ++j) {
            mat4 ac = dirac_alpha(i) * dirac_alpha(j) + dirac_alpha(j) * dirac_alpha(i);
            CHECK((ac - (i == j ? 2.0 : 0.0) * id).norm() == 0.0);
        }
    }
    CHECK_THROWS_AS(dirac_alpha(3), domain_error);
    CHECK(sin_over(2.0, 0.0) == 2.0);
    CHECK(sin_over(2.0, 1e-6) == Approx(std::sin(2e-6) / 1e-6).epsilon(1e-15));
    CHECK(sin_over(2.0, 0.7) == Approx(std::sin(1.4) / 0.7).epsilon(1e-15));
}

TEST_CASE("free Dirac flow", "[propagators]") {
    auto rg = build_radial_grid(1e-3, 20, 60, 300), kg = build_radial_grid(1e-3, 10, 40, 200);
    std::vector<spinor_label> labels{{1, 1, 1}, {1, -1, -1}, {3, 1, 2}, {5, 3, -3}};
    auto f = gaussian_dirac(rg, labels);
    double l0 = dirac_l2(f);
    auto sp = dirac_to_freq(f, kg);
    auto back = dirac_to_pos(sp);
    CHECK(distance(back, f) < 1e-6);
    // group law in frequency is exact up to rounding
    auto a = sp, b = sp;
    dirac_free_evolve_spectral(a, 1.3);
    dirac_free_evolve_spectral(a, 2.1);
    dirac_free_evolve_spectral(b, 3.4);
    double worst = 0;
    for (std::size_t c = 0; c < a.ap.size(); ++c)
        for (std::size_t j = 0; j < kg->size(); ++j)
            worst = std::max({worst, std::abs(a.ap[c][j] - b.ap[c][j]), std::abs(a.am[c][j] - b.am[c][j])});
    CHECK(worst < 1e-12);
    // unitarity and time reversal through position space
    for (double t : {1.0, 4.0}) {
        auto u = dirac_free_evolve(f, t, kg);
        CHECK(dirac_l2(u) == Approx(l0).epsilon(1e-7));
        CHECK(distance(dirac_free_evolve(u, -t, kg), f) < 1e-6);
    }
}

TEST_CASE("banded LU", "[propagators]") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd;
    const int N = 40, p = 4;
    banded_lu B(N, p);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = std::max(0, i - p); j <= std::min(N - 1, i + p); ++j) {
            cplx v{nd(gen), nd(gen)};
            if (i == j) v += 20.0;
            B.at(i, j) = v;
            A(i, j) = v;
        }
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Random(N);
    Eigen::VectorXcd want = A.partialPivLu().solve(rhs);
    B.factor();
    cvec x(rhs.data(), rhs.data() + N);
    B.solve(x);
    for (int i = 0; i < N; ++i) CHECK(std::abs(x[i] - want[i]) < 1e-12);
}

TEST_CASE("Crank-Nicolson Dirac step", "[propagators]") {
    auto rg = build_radial_grid(2e-3, 20, 60, 300), kg = build_radial_grid(1e-3, 10, 40, 200);
    std::vector<spinor_label> labels{{3, 1, 2}, {3, -1, -2}, {5, 1, 3}};
    auto f = gaussian_dirac(rg, labels);
    dirac_radial_potential V{[](double r) { return 0.5 / (1 + r * r); }, [](double r) { return 0.2 * std::exp(-r); }};
    dirac_cn_stepper S(rg, 0.05, V);
    auto u = f;
    double n0 = dirac_operator_norm(u);
    for (int s = 0; s < 100; ++s) S.step(u);
    CHECK(dirac_operator_norm(u) == Approx(n0).epsilon(1e-12));
    // without a potential, CN approaches the exact flow e^{-itD}
    dirac_cn_stepper S0(rg, 0.01);
    auto w = f;
    for (int s = 0; s < 100; ++s) S0.step(w);
    CHECK(distance(w, dirac_free_evolve(f, -1.0, kg)) < 1e-3);
    auto w1 = f;
    dirac_cn_step(w1, 0.01);
    dirac_cn_step(w1, 0.01);
    auto w2 = f;
    S0.step(w2);
    S0.step(w2);
    CHECK(distance(w1, w2) < 1e-14);
}

TEST_CASE("wave with a potential", "[propagators]") {
    auto rg = build_radial_grid(1e-3, 20, 60, 300), kg = build_radial_grid(1e-3, 10, 40, 200);
    const int n = 3;
    cvec z(rg->size(), 0.0);
    for (int k : {1, 2}) {
        cvec f(rg->size()), g(rg->size());
        for (std::size_t i = 0; i < rg->size(); ++i) {
            double r = rg->r[i];
            f[i] = std::pow(r, k) * std::exp(-0.5 * sq(r - 2));
            g[i] = std::pow(r, k) * std::exp(-sq(r - 3)) * 0.3;
        }
        CHECK(rel_err(from_reduced(to_reduced(f, n, *rg), n, *rg), f, *rg, n) < 1e-15);
        auto V = [](double r) { return 0.8 / (1 + r * r); };
        auto tr = wave_potential_evolve(f, g, k, n, rg, 0.02, 200, V, 50);
        REQUIRE(tr.u.size() == 5);
        CHECK(tr.times.back() == Approx(4.0));
        for (double e : tr.energy) CHECK(e == Approx(tr.energy.front()).epsilon(1e-11));
        // without a potential the split flow is the exact free flow
        auto sp = wave_potential_split_evolve(f, z, k, n, rg, kg, 0.1, 20);
        auto want = wave_channel_evolve_multiplier(hankel_analyze(f, k, n, rg, kg), k, n, 2.0, kg, rg, false);
        CHECK(rel_err(sp.u.back(), want, *rg, n) < 1e-5);
        // with a potential, the split flow and Crank-Nicolson agree
        auto s1 = wave_potential_split_evolve(f, g, k, n, rg, kg, 0.02, 100, V, 100);
        auto c1 = wave_potential_evolve(f, g, k, n, rg, 0.01, 200, V, 200);
        CHECK(rel_err(s1.u.back(), c1.u.back(), *rg, n) < 1e-3);
        CHECK(std::abs(s1.energy.back() / s1.energy.front() - 1) < 1e-3);
    }
}
