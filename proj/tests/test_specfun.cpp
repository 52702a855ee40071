#include <catch_amalgamated.hpp>

#include "pwave/specfun.hpp"

using namespace pwave;
using Catch::Approx;

TEST_CASE("harmonic dimensions", "[specfun]") {
    CHECK(harmonic_dim(0, 3) == 1);
    CHECK(harmonic_dim(1, 3) == 3);
    CHECK(harmonic_dim(2, 3) == 5);
    CHECK(harmonic_dim(2, 4) == 9);
    // C(k+n-1, n-1) - C(k+n-3, n-1), tabulated in Python
    CHECK(harmonic_dim(3, 3) == 7);
    CHECK(harmonic_dim(5, 5) == 91);
    CHECK(harmonic_dim(7, 6) == 540);
    for (int k = 0; k < 40; ++k) CHECK(harmonic_dim(k, 3) == 2 * k + 1);
    CHECK_THROWS_AS(harmonic_dim(-1, 3), domain_error);
}

TEST_CASE("c_k and angular weights", "[specfun]") {
    // mpmath at 30 digits
    CHECK(ck_constant(0, 3).real() == Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(ck_constant(0, 3).imag() == 0.0);
    CHECK(ck_constant(1, 3).imag() == Approx(0.19947114020071635).epsilon(1e-14));
    CHECK(ck_constant(3, 4).imag() == Approx(-0.0030315227255599112).epsilon(1e-13));
    CHECK(ck_constant(5, 5).imag() == Approx(8.657601571211646e-06).epsilon(1e-13));
    CHECK(std::abs(ck_constant(0, 3) - 1.0 / std::sqrt(2 * pi)) < 1e-15);
    // phase advances by i per unit k; large k underflows to zero, never overflows
    for (int k = 0; k < 100; ++k) {
        cplx a = ck_constant(k, 4), b = ck_constant(k + 1, 4);
        CHECK(std::abs(std::arg(b / a) - pi / 2) < 1e-12);
    }
    for (int k = 100; k < 400; ++k) CHECK(std::isfinite(std::abs(ck_constant(k, 5))));
    CHECK(angular_weight(17, 3) == 1.0);
    CHECK(angular_weight(0, 5) == 1.0);
    CHECK(angular_weight(3, 4) == Approx(1.0 / std::sqrt(10.0)).epsilon(1e-15));
}

TEST_CASE("Jacobi recurrence", "[specfun]") {
    CHECK(jacobi_eval(0, 0.7, -0.3, 0.3) == 1.0);
    for (double x : {-0.9, -0.2, 0.4, 1.0}) CHECK(jacobi_eval(1, 0, 0, x) == Approx(x).margin(1e-15));
    CHECK(jacobi_eval(2, 0, 0, 0.0) == Approx(-0.5).margin(1e-15));
    // mpmath.jacobi
    CHECK(jacobi_eval(3, 0.5, 0.5, 0.3) == Approx(-0.538125).epsilon(1e-12));
    CHECK(jacobi_eval(5, 1.0, 0.0, -0.7) == Approx(0.28852062499999986).epsilon(1e-12));
    CHECK(jacobi_eval(10, 1.5, 1.5, 0.9) == Approx(-2.429915985623437).epsilon(1e-12));
    CHECK(jacobi_eval(4, -0.25, 0.75, 0.2) == Approx(0.39965234374999997).epsilon(1e-12));
    CHECK_THROWS_AS(jacobi_eval(2, -1.0, 0.0, 0.1), domain_error);
    CHECK_THROWS_AS(jacobi_eval(2, 0.0, -1.5, 0.1), domain_error);
}

TEST_CASE("closed form at the origin matches the recurrence in modulus", "[specfun]") {
    CHECK(std::abs(jacobi_at_zero_closed(2, 0).value) == Approx(0.5).epsilon(1e-14));
    CHECK(jacobi_at_zero_closed(0, 0).value == Approx(1.0).epsilon(1e-14));
    for (double a : {0.0, 0.5, 1.0, 2.5})
        for (int k = 0; k <= 60; ++k) {
            auto z = jacobi_at_zero_closed(k, a);
            double ref = z.derivative ? jacobi_deriv(k, a, a, 0.0) : jacobi_eval(k, a, a, 0.0);
            CHECK(std::abs(z.value) == Approx(std::abs(ref)).epsilon(1e-10));
        }
    // Stirling: |P_k(0)| sqrt(k) settles
    for (double a : {0.0, 0.5}) {
        double v100 = jacobi_at_zero_closed(100, a).value * std::sqrt(100.0);
        double v200 = jacobi_at_zero_closed(200, a).value * std::sqrt(200.0);
        CHECK(std::abs(v200 / v100 - 1.0) < 0.05);
    }
}

TEST_CASE("Q_k against symbolic differentiation", "[specfun]") {
    CHECK(q_poly_eval(0, 3, 0.7) == Approx(1.0).epsilon(1e-15));
    for (double x : {-0.8, 0.1, 0.6}) CHECK(q_poly_eval(1, 3, x) == Approx(-x).margin(1e-15));
    CHECK(std::abs(q_poly_eval(5, 3, 0.3)) == Approx(0.34538625).epsilon(1e-12));
    // sympy: d^k/dx^k (1-x^2)^{k+(n-3)/2} / (2^k Gamma(k+(n-1)/2))
    CHECK(q_poly_eval(2, 4, 0.3) == Approx(-0.22963309259831713).epsilon(1e-12));
    CHECK(q_poly_eval(3, 4, -0.6) == Approx(-0.15165416005763688).epsilon(1e-12));
    CHECK(q_poly_eval(4, 5, 0.5) == Approx(-0.111328125).epsilon(1e-12));
    CHECK(q_poly_eval(5, 6, 0.1) == Approx(-0.0296652953423579).epsilon(1e-12));
    CHECK(q_poly_eval(6, 4, 0.95) == Approx(0.12811858254379432).epsilon(1e-12));
    CHECK(q_poly_eval(3, 3, 0.4) == Approx(0.44).epsilon(1e-12));
}

TEST_CASE("Q_k bound in three dimensions", "[specfun]") {
    for (int k = 0; k <= 200; k += 7) {
        double sup = 0;
        for (int i = 0; i < 4096; ++i) sup = std::max(sup, std::abs(q_poly_eval(k, 3, -1.0 + 2.0 * i / 4095)));
        CHECK(sup <= 1.0 + 1e-12);
    }
}

TEST_CASE("Sonine function", "[specfun]") {
    // T = (1-x^2)^{1/2} P_1^{(1/2,1/2)} = 1.5 x (1-x^2)^{1/2}: S(0) = 1.5^2 / 4
    CHECK(sonine_eval(1, 0.5, 0.0) == Approx(0.5625).epsilon(1e-14));
    // derivative formula against central differences
    for (double x : {-0.6, 0.5, 0.8}) {
        double h = 1e-5;
        double fd = (sonine_eval(2, 0.0, x + h) - sonine_eval(2, 0.0, x - h)) / (2 * h);
        CHECK(sonine_derivative(2, 0.0, x) == Approx(fd).margin(1e-6));
    }
    // maximum at the origin and monotone on each side for a >= 1/2
    for (double a : {0.5, 1.0, 1.5})
        for (int k : {1, 2, 7, 20, 50}) {
            double s0 = sonine_eval(k, a, 0.0), prev = s0;
            bool mono = true;
            for (int i = 1; i < 1000; ++i) {
                double s = sonine_eval(k, a, i / 1000.0);
                mono = mono && s <= prev * (1 + 1e-12) + 1e-300;
                prev = s;
                CHECK(sonine_eval(k, a, -i / 1000.0) <= s0 * (1 + 1e-12));
            }
            CHECK(mono);
        }
    // sqrt(k S(0)) stays bounded
    for (double a : {0.5, 1.0}) {
        double lo = 1e300, hi = 0;
        for (int k = 2; k <= 200; ++k) {
            double v = std::sqrt(k * sonine_eval(k, a, 0.0));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi / lo < 3.0);
    }
}

TEST_CASE("Gauss quadrature exactness", "[specfun]") {
    for (int m : {1, 4, 9, 32}) {
        auto q = gauss_legendre(m);
        double tot = 0;
        for (double w : q.w) tot += w;
        CHECK(tot == Approx(2.0).epsilon(1e-14));
        for (int p = 0; p <= 2 * m - 1; ++p) {
            double s = 0;
            for (int j = 0; j < m; ++j) s += q.w[j] * std::pow(q.x[j], p);
            double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
            CHECK(s == Approx(exact).margin(1e-13));
        }
    }
    // symmetric Jacobi weight: int (1-x^2)^a x^2 dx = mass / (2a + 3)
    for (double a : {-0.25, 0.5, 2.0}) {
        auto& q = gauss_jacobi_sym(12, a);
        double m0 = 0, m2 = 0;
        for (std::size_t j = 0; j < q.x.size(); ++j) {
            m0 += q.w[j];
            m2 += q.w[j] * q.x[j] * q.x[j];
        }
        CHECK(m0 == Approx(std::exp(log_jacobi_mass(a, a))).epsilon(1e-13));
        CHECK(m2 == Approx(m0 / (2 * a + 3)).epsilon(1e-12));
    }
}

TEST_CASE("Bessel functions", "[specfun]") {
    CHECK(bessel_j(0, 0) == 1.0);
    // mpmath.besselj
    CHECK(bessel_j(0, 1.0) == Approx(0.7651976865579666).epsilon(1e-13));
    CHECK(bessel_j(0.5, 3.2) == Approx(-0.0260366792622266).epsilon(1e-11));
    CHECK(bessel_j(2.5, 10.0) == Approx(0.19665848358181842).epsilon(1e-12));
    CHECK(bessel_j(7, 4.0) == Approx(0.015176069422058451).epsilon(1e-12));
    CHECK(bessel_j(1.5, 0.01) == Approx(0.0002659588606619177).epsilon(1e-12));
    CHECK(bessel_j(12.5, 30.0) == Approx(0.14354962331059692).epsilon(1e-12));
    for (double y : {0.3, 2.0, 17.5, 400.0})
        CHECK(bessel_j(0.5, y) == Approx(std::sqrt(2 / (pi * y)) * std::sin(y)).margin(1e-14));
    CHECK(bessel_j(1.5, 2.0) == Approx(bessel_j_lommel(1.5, 2.0, 64)).epsilon(1e-8));
    CHECK(std::abs(bessel_j_lommel(0.5, pi, 64)) < 1e-10);
    CHECK(bessel_j_lommel(2.5, 0.0, 8) == 0.0);
    CHECK(bessel_j_lommel(3.5, 5.0, 128) == Approx(0.4100285072560581).epsilon(1e-8));
    CHECK_THROWS_AS(bessel_j_lommel(-0.5, 1.0, 16), domain_error);
}

TEST_CASE("Bessel routes agree where the integral form is well conditioned", "[specfun]") {
    // The integral form cancels: its terms are (y/2)^nu / Gamma(nu+1) times
    // larger than J_nu, so agreement is only checked where that factor keeps
    // rounding well below 1e-8.
    double worst = 0;
    int checked = 0;
    for (int h = 1; h <= 41; h += 2)
        for (double y = 0.5; y <= 100.0; y += 3.7) {
            double nu = 0.5 * h;
            double amp = std::exp(nu * std::log(0.5 * y) - std::lgamma(nu + 1.0));
            if (amp > 1e5) continue;
            ++checked;
            worst = std::max(worst, std::abs(bessel_j(nu, y) - bessel_j_lommel(nu, y, 300)));
        }
    CHECK(checked > 150);
    CHECK(worst < 1e-8);
}
