#include <catch_amalgamated.hpp>

#include "pwave/radial.hpp"

using namespace pwave;
using Catch::Approx;

namespace {

double rel_l2(const cvec& a, const cvec& b, const radial_grid& g, int n) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double w = g.w[i] * std::pow(g.r[i], n - 1);
        num += w * std::norm(a[i] - b[i]);
        den += w * std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("radial grid layout and quadrature", "[radial]") {
    auto g = build_radial_grid(1e-4, 50, 200, 400);
    REQUIRE(g->size() == 600);
    for (std::size_t i = 1; i < g->size(); ++i) CHECK(g->r[i] > g->r[i - 1]);
    for (double w : g->w) CHECK(w > 0);
    CHECK(g->r[199] == Approx(1.0).epsilon(1e-9));
    rvec f(g->size()), h(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
        f[i] = std::exp(-g->r[i]);
        h[i] = g->r[i] * std::exp(-0.5 * sq(g->r[i]));
    }
    CHECK(integrate(*g, f) == Approx(1.0).margin(1e-6));
    CHECK(integrate(*g, h) == Approx(1.0).margin(1e-6));
    CHECK_THROWS_AS(build_radial_grid(2.0, 50, 10, 10), domain_error);
    CHECK_THROWS_AS(build_radial_grid(1e-3, 0.5, 10, 10), domain_error);
    auto fine = refine_grid(*g, 1.5);
    CHECK(fine->size() == 900);
}

TEST_CASE("weights", "[radial]") {
    for (double s : {0.5, 1.5, 3.0}) CHECK(weight_eval(weight_kind::w_sigma, s, 1.0) == Approx(1.0).epsilon(1e-15));
    CHECK(weight_eval(weight_kind::w_sigma, 2.0, std::exp(1.0)) == Approx(4 * std::exp(1.0)).epsilon(1e-14));
    CHECK(weight_eval(weight_kind::tau_eps, 0.1, 1.0) == Approx(2.0).epsilon(1e-15));
    CHECK(weight_eval(weight_kind::jap_bracket_pow, 2.0, 3.0) == Approx(10.0).epsilon(1e-14));
    CHECK(weight_eval(weight_kind::power, -1.5, 4.0) == Approx(0.125).epsilon(1e-14));
    // v_sigma at r = e: sqrt(e) + (1 + e^2)^{(1+sigma)/2}
    double e = std::exp(1.0);
    CHECK(weight_eval(weight_kind::v_sigma, 1.5, e) == Approx(std::sqrt(e) + std::pow(1 + e * e, 1.25)).epsilon(1e-14));
    // w_sigma tails: -> 0 at the origin, -> infinity at infinity
    CHECK(weight_eval(weight_kind::w_sigma, 3.0, 1e-12) < 1e-7);
    CHECK(weight_eval(weight_kind::w_sigma, 3.0, 1e12) > 1e12);
    for (double r = 1.0; r < 1e8; r *= 3) CHECK(weight_eval(weight_kind::w_sigma, 3.0, 3 * r) > weight_eval(weight_kind::w_sigma, 3.0, r));
    CHECK_THROWS_AS(weight_eval(weight_kind::w_sigma, 1.0, 0.0), domain_error);
}

TEST_CASE("radial derivative", "[radial]") {
    auto g = build_radial_grid(1e-3, 12, 60, 200);
    cvec one(g->size(), 1.0);
    for (auto& z : radial_derivative(*g, one, 2)) CHECK(std::abs(z) < 1e-12);
    for (auto& z : radial_derivative(*g, one, 6)) CHECK(std::abs(z) < 1e-12);
    auto err = [](const grid_ptr& gg, int order) {
        cvec f(gg->size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-0.5 * sq(gg->r[i]));
        auto d = radial_derivative(*gg, f, order);
        double e = 0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (gg->r[i] > 0.2 && gg->r[i] < 8) e = std::max(e, std::abs(d[i] + gg->r[i] * f[i]));
        return e;
    };
    auto g1 = build_radial_grid(1e-3, 12, 60, 200), g2 = build_radial_grid(1e-3, 12, 120, 400);
    double order2 = std::log2(err(g1, 2) / err(g2, 2));
    CHECK(order2 > 1.8);
    CHECK(order2 < 2.3);
    CHECK(err(g2, 6) < 1e-7);
    // linearity
    cvec a(g->size()), b(g->size()), c(g->size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::sin(g->r[i]);
        b[i] = std::exp(-g->r[i]);
        c[i] = 2.0 * a[i] - 3.0 * b[i];
    }
    auto da = radial_derivative(*g, a, 6), db = radial_derivative(*g, b, 6), dc = radial_derivative(*g, c, 6);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(dc[i] - (2.0 * da[i] - 3.0 * db[i])) < 1e-12 * (1 + std::abs(dc[i])));
}

TEST_CASE("skew difference operator", "[radial]") {
    auto g = build_radial_grid(1e-2, 10, 20, 40);
    skew_difference op(6);
    cvec u(g->size()), v(g->size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = {std::cos(g->r[i]), std::sin(2 * g->r[i])};
        v[i] = {std::exp(-g->r[i]), g->r[i]};
    }
    auto du = op.apply(*g, u), dv = op.apply(*g, v);
    cplx a = 0, b = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        a += g->dr[i] * std::conj(v[i]) * du[i];
        b += g->dr[i] * std::conj(dv[i]) * u[i];
    }
    CHECK(std::abs(a + b) < 1e-12 * std::abs(a));
}

TEST_CASE("Hankel transform", "[radial]") {
    auto rg = build_radial_grid(1e-3, 12, 60, 200), kg = build_radial_grid(1e-3, 12, 60, 200);
    for (int n : {3, 4, 5})
        for (int k : {0, 1, 4}) {
            cvec c(kg->size()), want(rg->size());
            for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::pow(kg->r[j], k) * std::exp(-0.5 * sq(kg->r[j]));
            for (std::size_t i = 0; i < want.size(); ++i)
                want[i] = std::pow(2 * pi, 0.5 * n) * ipow(-k) * std::pow(rg->r[i], k) * std::exp(-0.5 * sq(rg->r[i]));
            auto g = hankel_synthesize(c, k, n, kg, rg);
            CHECK(rel_l2(g, want, *rg, n) < 1e-6);
            auto back = hankel_analyze(g, k, n, rg, kg);
            CHECK(rel_l2(back, c, *kg, n) < 1e-6);
            // Plancherel with the (2 pi)^{n/2} normalization
            channel_set cs{{k, 1, c}}, gs{{k, 1, g}};
            double lhs = channel_position_norms(gs, 0, n, *rg).l2;
            double rhs = std::pow(2 * pi, 0.5 * n) * channel_sobolev_norm(cs, 0, 0, n, *kg);
            CHECK(lhs == Approx(rhs).epsilon(1e-6));
        }
    cvec zero(kg->size(), 0.0);
    for (auto& z : hankel_synthesize(zero, 2, 3, kg, rg)) CHECK(z == cplx(0.0));
    // too few frequency nodes per oscillation of exp(i r rho) for r up to 400
    auto far = build_radial_grid(1e-3, 400, 20, 40);
    cvec c(kg->size());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::exp(-0.5 * sq(kg->r[j] - 4));
    CHECK_THROWS_AS(hankel_synthesize(c, 0, 3, kg, far), resolution_error);
}

TEST_CASE("Hankel plans are shared between equal grids", "[radial]") {
    auto a = build_radial_grid(1e-3, 10, 40, 100), b = build_radial_grid(1e-3, 10, 40, 100);
    auto k = build_radial_grid(1e-3, 5, 30, 60);
    auto p = hankel_plan_for(a, k, 0.5);
    CHECK(hankel_plan_for(b, k, 0.5) == p);
    CHECK(hankel_plan_for(a, k, 1.5) != p);
    CHECK(hankel_plan_for(build_radial_grid(1e-3, 10, 40, 101), k, 0.5) != p);
    clear_hankel_cache();
    auto q = hankel_plan_for(b, k, 0.5);
    CHECK(q != p);
    CHECK(q->K == p->K);
}

TEST_CASE("channel Sobolev norms", "[radial]") {
    auto kg = build_radial_grid(1e-3, 12, 60, 200), rg = build_radial_grid(1e-3, 20, 60, 300);
    cvec c(kg->size());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::exp(-0.5 * sq(kg->r[j]));
    // k = 0, s = 0: || c rho^{(n-1)/2} ||; in 3D that is int rho^2 e^{-rho^2} = sqrt(pi)/4
    CHECK(channel_sobolev_norm({{0, 1, c}}, 0, 0, 3, *kg) == Approx(std::sqrt(std::sqrt(pi) / 4)).epsilon(1e-9));
    double a = channel_sobolev_norm({{1, 1, c}}, 0, 0.5, 3, *kg), b = channel_sobolev_norm({{1, 1, c}}, 0, 1.0, 3, *kg);
    CHECK(b / a == Approx(std::pow(2.0, 0.25)).epsilon(1e-14));
    // gradient form on the position side: Gaussian times Y_1^1
    cvec f(kg->size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = kg->r[j] * std::exp(-0.5 * sq(kg->r[j]));
    auto g = hankel_synthesize(f, 1, 3, kg, rg);
    double grad = channel_position_norms({{1, 1, g}}, 0, 3, *rg).grad;
    double freq = std::pow(2 * pi, 1.5) * channel_sobolev_norm({{1, 1, f}}, 1, 0, 3, *kg);
    CHECK(std::abs(grad / freq - 1) < 0.02);
    // Hardy: ||f/|x||| <= 2 ||grad f||
    for (int k : {0, 1, 3}) {
        auto gk = hankel_synthesize(f, k, 3, kg, rg);
        auto [hl, hr] = hardy_witness({{k, 1, gk}}, 3, *rg);
        CHECK(hl <= 2 * hr * (1 + 1e-6));
    }
}
