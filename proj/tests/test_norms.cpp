#include <catch_amalgamated.hpp>

#include "pwave/norms.hpp"

using namespace pwave;
using Catch::Approx;

namespace {

// One scalar channel of degree l in dimension n, the same frame at each time.
trajectory static_trajectory(const grid_ptr& g, int l, int n, const cvec& p, const rvec& times) {
    trajectory tr;
    tr.dim = n;
    tr.grid = g;
    tr.degree = {l};
    tr.times = times;
    tr.frames.assign(times.size(), {p});
    return tr;
}

cvec profile(const radial_grid& g, int l) {
    cvec p(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) p[i] = std::pow(g.r[i], l) * std::exp(-0.5 * sq(g.r[i]));
    return p;
}

}  // namespace

TEST_CASE("weights and time quadrature", "[norms]") {
    CHECK(lambda_weight(0, 3, 5.0) == 1.0);
    CHECK(lambda_weight(1, 3, 2.0) == Approx(3.0).epsilon(1e-15));
    CHECK(lambda_weight(2, 4, 1.0) == Approx(3.0).epsilon(1e-15));
    rvec t{0, 0.5, 1.0, 2.0}, f{1, 2, 3, 5};
    CHECK(time_integral(t, f, 10) == Approx(0.75 + 1.25 + 4.0).epsilon(1e-15));
    CHECK(time_integral(t, f, 1.0) == Approx(2.0).epsilon(1e-15));
    CHECK(time_integral(t, f, 0.0) == 0.0);
}

TEST_CASE("frame norms against closed forms", "[norms]") {
    auto g = build_radial_grid(1e-3, 12, 60, 300);
    const double sp = std::sqrt(pi);
    // 3D moments: int r^2 e^{-r^2} = sqrt(pi)/4, int r^4 e^{-r^2} = 3 sqrt(pi)/8
    auto t0 = static_trajectory(g, 0, 3, profile(*g, 0), {0.0});
    CHECK(frame_l2(t0, t0.frames[0]) == Approx(std::sqrt(sp / 4)).epsilon(1e-8));
    CHECK(frame_hdot1(t0, t0.frames[0]) == Approx(std::sqrt(3 * sp / 8)).epsilon(1e-6));
    CHECK(frame_h1(t0, t0.frames[0]) == Approx(std::sqrt(sp / 4 + 3 * sp / 8)).epsilon(1e-6));
    // degree 1 with p = r e^{-r^2/2}: int (p'^2 + 2 p^2 / r^2) r^2 = 15 sqrt(pi) / 16
    auto t1 = static_trajectory(g, 1, 3, profile(*g, 1), {0.0});
    double h = frame_hdot1(t1, t1.frames[0]);
    CHECK(h == Approx(std::sqrt(15 * sp / 16)).epsilon(1e-6));
    CHECK(frame_hdot1(t1, t1.frames[0], 2.0) == Approx(3 * h).epsilon(1e-13));
    CHECK(frame_l2(t1, t1.frames[0], 1.0) == Approx(std::sqrt(3.0) * frame_l2(t1, t1.frames[0])).epsilon(1e-13));
}

TEST_CASE("reduced profiles describe the same field", "[norms]") {
    auto g = build_radial_grid(1e-3, 12, 60, 300);
    for (int l : {0, 1, 3}) {
        cvec u = profile(*g, l), psi(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) psi[i] = g->r[i] * u[i];
        auto scalar = static_trajectory(g, l, 3, u, {0.0});
        auto reduced = static_trajectory(g, l, 3, psi, {0.0});
        reduced.kind = profile_kind::reduced;
        CHECK(frame_l2(reduced, reduced.frames[0]) == Approx(frame_l2(scalar, scalar.frames[0])).epsilon(1e-12));
        CHECK(frame_hdot1(reduced, reduced.frames[0]) == Approx(frame_hdot1(scalar, scalar.frames[0])).epsilon(1e-5));
    }
    std::vector<spinor_label> labels{{1, 1, -1}, {3, 1, 2}};
    auto tr = make_dirac_trajectory(g, labels);
    CHECK(tr.kind == profile_kind::reduced);
    CHECK(tr.degree == std::vector<int>{0, 1, 2, 1});
    dirac_state st{g, {}};
    for (auto& l : labels) st.ch.push_back({l, profile(*g, l.ell_plus() + 1), profile(*g, l.ell_minus() + 1)});
    CHECK(frame_l2(tr, dirac_frame(st)) == Approx(dirac_l2(st)).epsilon(1e-12));
}

TEST_CASE("space-time norms of a static field", "[norms]") {
    auto g = build_radial_grid(1e-3, 12, 60, 300);
    rvec times{0.0, 0.5, 1.0, 1.5, 2.0};
    auto tr = static_trajectory(g, 0, 3, profile(*g, 0), times);
    // the radial sup of the angular density sits at r_min
    double sup = std::exp(-sq(g->r_min));
    auto e = mixed_endpoint_norm(tr);
    CHECK(e.value == Approx(std::sqrt(2.0 * sup)).epsilon(1e-14));
    CHECK(e.T == 2.0);
    auto e1 = mixed_endpoint_norm(tr, 0.0, 1.2);
    CHECK(e1.T == 1.0);
    CHECK(e1.value == Approx(std::sqrt(sup)).epsilon(1e-14));
    CHECK(mean_radial_proxy(tr).value <= e.value);
    auto one = [](double) { return 1.0; };
    double l2 = frame_l2(tr, tr.frames[0]), hd = frame_hdot1(tr, tr.frames[0]);
    CHECK(smoothing_norm(tr, one).value == Approx(std::sqrt(2.0) * l2).epsilon(1e-13));
    CHECK(smoothing_norm(tr, one, 0.0, true).value == Approx(std::sqrt(2.0) * hd).epsilon(1e-13));
    auto two = [](double) { return 4.0; };
    CHECK(smoothing_norm(tr, two).value == Approx(std::sqrt(0.5) * l2).epsilon(1e-13));
    CHECK_THROWS_AS(x_norm(tr, 1.0), domain_error);
    auto x = x_norm(tr, 1.5);
    CHECK(x.value == Approx(x.endpoint + x.energy).epsilon(1e-15));
    CHECK(x.energy == Approx(frame_h1(tr, tr.frames[0])).epsilon(1e-15));
}

TEST_CASE("weighted Fourier transfer", "[norms]") {
    auto kg = build_radial_grid(1e-3, 10, 40, 200), rg = build_radial_grid(1e-3, 14, 60, 300);
    for (int n : {3, 4}) {
        channel_set ch;
        for (int k : {0, 1, 2}) {
            cvec v(kg->size());
            for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::pow(kg->r[j], k) * std::exp(-0.5 * sq(kg->r[j] - 1.0));
            ch.push_back({k, 1, v});
        }
        auto a = weighted_transfer_check(ch, 0, 1.0, n, kg, rg);
        CHECK(a.lhs == Approx(a.rhs).epsilon(1e-6));
        auto b = weighted_transfer_check(ch, 1, 1.0, n, kg, rg);
        CHECK(b.lhs <= b.rhs);
    }
    CHECK_THROWS_AS(weighted_transfer_check({}, 2, 0.0, 3, kg, rg), domain_error);
}
