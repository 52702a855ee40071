#pragma once

#include <boost/math/special_functions/bessel.hpp>
#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "pwave/common.hpp"

namespace pwave {

// Dimension of the space of degree-k spherical harmonics on S^{n-1}.
inline double harmonic_dim(int k, int n) {
    if (k < 0 || n < 2) throw domain_error("harmonic_dim: need k >= 0, n >= 2");
    auto binom = [](int a, int b) -> double {
        if (b < 0 || a < b) return 0.0;
        double c = 1.0;
        for (int i = 1; i <= b; ++i) c = c * (a - b + i) / i;
        return std::round(c);
    };
    if (k == 0) return 1.0;
    if (k == 1) return n;
    return binom(n + k - 1, k) - binom(n + k - 3, k - 2);
}

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

inline cplx ipow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

// i^k 2^{1-n/2-k} / (sqrt(pi) Gamma((n-1)/2 + k)), evaluated in log space.
inline cplx ck_constant(int k, int n) {
    if (k < 0 || n < 2) throw domain_error("ck_constant: need k >= 0, n >= 2");
    double lg = (1.0 - 0.5 * n - k) * std::log(2.0) - 0.5 * std::log(pi) -
                std::lgamma(0.5 * (n - 1) + k);
    return ipow(k) * std::exp(lg);
}

// Channel weight: 1 in three dimensions, <k>^{1-n/2} otherwise.
inline double angular_weight(int k, int n) {
    if (n == 3) return 1.0;
    return std::pow(japanese(k), 1.0 - 0.5 * n);
}

// ---------------------------------------------------------------- Jacobi

inline double jacobi_eval(int k, double a, double b, double x) {
    if (a <= -1.0 || b <= -1.0) throw domain_error("jacobi_eval: need a, b > -1");
    if (k < 0) throw domain_error("jacobi_eval: need k >= 0");
    if (k == 0) return 1.0;
    double p0 = 1.0;
    double p1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for (int m = 2; m <= k; ++m) {
        double s = 2.0 * m + a + b;
        double c1 = 2.0 * m * (m + a + b) * (s - 2.0);
        double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        double c3 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * s;
        double p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

inline double jacobi_deriv(int k, double a, double b, double x) {
    if (k == 0) return 0.0;
    return 0.5 * (k + a + b + 1.0) * jacobi_eval(k - 1, a + 1.0, b + 1.0, x);
}

struct jacobi_zero_value {
    double value;     // P(0) for even k, P'(0) for odd k
    bool derivative;  // true when value is P'(0)
};

// Closed-form value at the origin used for the large-k asymptotics.  Only the
// modulus is meaningful: the closed form is always positive, while the
// recurrence alternates in sign.
inline jacobi_zero_value jacobi_at_zero_closed(int k, double a) {
    if (a <= -1.0 || k < 0) throw domain_error("jacobi_at_zero_closed: need a > -1, k >= 0");
    if (k % 2 == 0) {
        double lg = std::lgamma(k + a + 1.0) - std::lgamma(0.5 * k + 1.0) -
                    std::lgamma(0.5 * k + a + 1.0) - k * std::log(2.0);
        return {std::exp(lg), false};
    }
    double lg = std::lgamma(k + a + 1.0) - std::lgamma(0.5 * k + 0.5) -
                std::lgamma(0.5 * k + a + 0.5) - (k - 1) * std::log(2.0);
    return {std::exp(lg), true};
}

// ------------------------------------------------------------------- Q_k

inline double q_alpha(int n) { return 0.5 * (n - 3); }

// Q_k(x) = d^k/dx^k (1-x^2)^{k+(n-3)/2} / (2^k Gamma(k+(n-1)/2)), via
// Rodrigues: (-1)^k k! (1-x^2)^a P_k^{(a,a)}(x) / Gamma(k+a+1).
inline double q_poly_eval(int k, int n, double x) {
    if (n < 3) throw domain_error("q_poly_eval: need n >= 3");
    if (k < 0) throw domain_error("q_poly_eval: need k >= 0");
    if (std::abs(x) > 1.0) throw domain_error("q_poly_eval: need |x| <= 1");
    double a = q_alpha(n);
    double pref = std::exp(std::lgamma(k + 1.0) - std::lgamma(k + a + 1.0));
    double w = a == 0.0 ? 1.0 : std::pow(1.0 - x * x, a);
    double s = (k % 2 == 0) ? 1.0 : -1.0;
    return s * pref * w * jacobi_eval(k, a, a, x);
}

// ---------------------------------------------------------------- Sonine

// S_a = T^2 + (1-x^2) T'^2 / ((k+1)(2a+k)) with T = (1-x^2)^a P_k^{(a,a)}.
inline double sonine_eval(int k, double a, double x) {
    if (k < 1) throw domain_error("sonine_eval: need k >= 1");
    if (a <= -1.0) throw domain_error("sonine_eval: need a > -1");
    double ax = std::abs(x);
    if (ax > 1.0 || (ax == 1.0 && a < 0.0)) throw domain_error("sonine_eval: x outside domain");
    double K = (k + 1.0) * (2.0 * a + k);
    double p = jacobi_eval(k, a, a, x);
    double dp = jacobi_deriv(k, a, a, x);
    double om = 1.0 - x * x;
    if (ax == 1.0) {
        if (a == 0.0) return p * p;
        if (a < 0.5) return std::numeric_limits<double>::infinity();
        // (1-x^2) T'^2 = (1-x^2)^{2a-1} (-2 a x P + (1-x^2) P')^2, T = 0
        double g = -2.0 * a * x * p;
        return (a == 0.5 ? 1.0 : 0.0) * g * g / K;
    }
    double T = std::pow(om, a) * p;
    double dT = std::pow(om, a) * dp - 2.0 * a * x * std::pow(om, a - 1.0) * p;
    return T * T + om * dT * dT / K;
}

// Closed-form derivative -2(2a-1) x T'^2 / ((k+1)(2a+k)).
inline double sonine_derivative(int k, double a, double x) {
    double K = (k + 1.0) * (2.0 * a + k);
    double om = 1.0 - x * x;
    double p = jacobi_eval(k, a, a, x);
    double dp = jacobi_deriv(k, a, a, x);
    double dT = std::pow(om, a) * dp - 2.0 * a * x * std::pow(om, a - 1.0) * p;
    return -2.0 * (2.0 * a - 1.0) * x * dT * dT / K;
}

// ------------------------------------------------------------ quadrature

struct quadrature {
    rvec x, w;
};

inline quadrature gauss_legendre(int m) {
    if (m < 1) throw domain_error("gauss_legendre: need m >= 1");
    quadrature q;
    q.x.resize(m);
    q.w.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (m + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= m; ++j) {
                double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = z;
        for (int j = 2; j <= m; ++j) {
            double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = m * (z * p1 - p0) / (z * z - 1.0);
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        q.x[i] = -z;
        q.x[m - 1 - i] = z;
        q.w[i] = q.w[m - 1 - i] = w;
    }
    if (m % 2 == 1) q.x[m / 2] = 0.0;
    return q;
}

// Golub-Welsch for the weight (1-x)^a (1+x)^b.  Weights are normalised to
// sum to one; multiply by jacobi_mass(a, b) for the true weights.
inline quadrature gauss_jacobi_normalised(int m, double a, double b) {
    if (a <= -1.0 || b <= -1.0) throw domain_error("gauss_jacobi: need a, b > -1");
    if (m < 1) throw domain_error("gauss_jacobi: need m >= 1");
    Eigen::VectorXd d(m), e(std::max(m - 1, 1));
    for (int j = 0; j < m; ++j) {
        double s = 2.0 * j + a + b;
        d(j) = (j == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        if (a == b) d(j) = 0.0;
    }
    for (int j = 1; j < m; ++j) {
        double s = 2.0 * j + a + b;
        double beta = (j == 1) ? 4.0 * (1 + a) * (1 + b) / ((2 + a + b) * (2 + a + b) * (3 + a + b))
                               : 4.0 * j * (j + a) * (j + b) * (j + a + b) / (s * s * (s + 1.0) * (s - 1.0));
        e(j - 1) = std::sqrt(beta);
    }
    quadrature q;
    q.x.resize(m);
    q.w.resize(m);
    if (m == 1) {
        q.x[0] = d(0);
        q.w[0] = 1.0;
        return q;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    Eigen::VectorXd ee = e.head(m - 1);
    es.computeFromTridiagonal(d, ee, Eigen::ComputeEigenvectors);
    for (int j = 0; j < m; ++j) {
        q.x[j] = es.eigenvalues()(j);
        q.w[j] = sq(es.eigenvectors()(0, j));
    }
    return q;
}

inline double log_jacobi_mass(double a, double b) {
    return (a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
           std::lgamma(a + b + 2.0);
}

// Cached symmetric Gauss-Jacobi rules, true (unnormalised) weights.
inline const quadrature& gauss_jacobi_sym(int m, double a) {
    static std::mutex mu;
    static std::map<std::pair<int, double>, quadrature> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_pair(m, a);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    quadrature q = (a == 0.0) ? gauss_legendre(m) : gauss_jacobi_normalised(m, a, a);
    if (a != 0.0) {
        double mass = std::exp(log_jacobi_mass(a, a));
        for (auto& w : q.w) w *= mass;
    }
    return cache.emplace(key, std::move(q)).first->second;
}

// ---------------------------------------------------------------- Bessel

inline double bessel_j(double nu, double y) {
    if (nu <= -1.0) throw domain_error("bessel_j: need nu > -1");
    if (y < 0.0) throw domain_error("bessel_j: need y >= 0");
    if (y == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    return boost::math::cyl_bessel_j(nu, y);
}

// J_nu(y) from the integral (y/2)^nu / (sqrt(pi) Gamma(nu+1/2)) *
// int_{-1}^{1} cos(y l) (1-l^2)^{nu-1/2} dl with an m-point Gauss-Jacobi rule.
inline double bessel_j_lommel(double nu, double y, int m) {
    if (nu <= -0.5) throw domain_error("bessel_j_lommel: need nu > -1/2");
    if (y < 0.0) throw domain_error("bessel_j_lommel: need y >= 0");
    if (y == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    double a = nu - 0.5;
    quadrature q = gauss_jacobi_normalised(m, a, a);
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += q.w[j] * std::cos(y * q.x[j]);
    double lg = nu * std::log(0.5 * y) - 0.5 * std::log(pi) - std::lgamma(nu + 0.5) +
                log_jacobi_mass(a, a);
    return s * std::exp(lg);
}

}  // namespace pwave
