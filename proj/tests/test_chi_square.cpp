#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "kscal/chi_square.hpp"

using namespace kscal;
using Catch::Approx;

namespace {

// Simpson integral of f over [a, b] with n panels (n even).
template <typename F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double chi2_pdf(double x, double p) {
    return std::exp((0.5 * p - 1.0) * std::log(x) - 0.5 * x -
                    std::lgamma(0.5 * p) - 0.5 * p * std::numbers::ln2);
}

// CDF by quadrature, independent of the incomplete-gamma implementation.
// For p = 1 substitute x = t^2 to remove the integrable singularity at 0.
double chi2_cdf_quadrature(double q, std::size_t p) {
    if (p == 1) {
        auto g = [](double t) { return 2.0 * std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
        return simpson(g, 0.0, std::sqrt(q), 4000);
    }
    auto f = [&](double x) { return x == 0.0 ? (p == 2 ? 0.5 : 0.0) : chi2_pdf(x, static_cast<double>(p)); };
    return simpson(f, 0.0, q, 4000);
}

}  // namespace

TEST_CASE("regularized incomplete gamma hits closed forms") {
    // P(1/2, x) = erf(sqrt(x)); P(1, x) = 1 - exp(-x).
    REQUIRE(gamma_p(0.5, 1.0) == Approx(std::erf(1.0)).epsilon(1e-12));
    REQUIRE(gamma_p(0.5, 4.0) == Approx(std::erf(2.0)).epsilon(1e-12));
    REQUIRE(gamma_p(1.0, 2.0) == Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
    REQUIRE(gamma_p(1.0, 0.25) == Approx(1.0 - std::exp(-0.25)).epsilon(1e-12));
    REQUIRE(gamma_p(2.5, 0.0) == 0.0);
    REQUIRE_THROWS_AS(gamma_p(0.0, 1.0), DomainError);
    REQUIRE_THROWS_AS(gamma_p(1.0, -0.1), DomainError);
}

TEST_CASE("chi-square CDF agrees with direct quadrature of the density") {
    for (std::size_t p : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{5}}) {
        for (double q : {0.2, 1.0, 2.7, 6.0, 11.0}) {
            REQUIRE(chi2_cdf(q, p) == Approx(chi2_cdf_quadrature(q, p)).margin(1e-9));
        }
    }
    REQUIRE(chi2_cdf(0.0, 1) == 0.0);
    REQUIRE(chi2_cdf(-1.0, 2) == 0.0);
    REQUIRE_THROWS_AS(chi2_cdf(1.0, 0), DomainError);
}

TEST_CASE("chi-square quantiles match reference constants") {
    // 95% quantiles for 1 and 2 dof and the 2-dof median; the p = 2 family
    // is exactly -2 log(alpha).
    REQUIRE(chi2_quantile(0.05, 1) == Approx(3.841458820694124).margin(1e-8));
    REQUIRE(chi2_quantile(0.05, 2) == Approx(-2.0 * std::log(0.05)).margin(1e-8));
    REQUIRE(chi2_quantile(0.5, 2) == Approx(2.0 * std::numbers::ln2).margin(1e-8));
    REQUIRE(chi2_quantile(0.05, 3) == Approx(7.814727903251179).margin(1e-8));
    REQUIRE(chi2_quantile(0.5, 1) == Approx(0.4549364231195728).margin(1e-8));
    REQUIRE(chi2_quantile(0.01, 2) == Approx(-2.0 * std::log(0.01)).margin(1e-8));
}

TEST_CASE("quantile inverts the CDF across the table") {
    for (std::size_t p : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
        for (double alpha : {0.9, 0.5, 0.2, 0.1, 0.05, 0.01, 0.001}) {
            const double q = chi2_quantile(alpha, p);
            REQUIRE(chi2_cdf(q, p) == Approx(1.0 - alpha).margin(1e-10));
        }
    }
}

TEST_CASE("quantile argument checking") {
    REQUIRE_THROWS_AS(chi2_quantile(0.0, 1), DomainError);
    REQUIRE_THROWS_AS(chi2_quantile(1.0, 1), DomainError);
    REQUIRE_THROWS_AS(chi2_quantile(-0.05, 2), DomainError);
    REQUIRE_THROWS_AS(chi2_quantile(0.05, 0), DomainError);
}

TEST_CASE("quantile is monotone in alpha and dof") {
    REQUIRE(chi2_quantile(0.5, 1) < chi2_quantile(0.05, 1));
    REQUIRE(chi2_quantile(0.05, 1) < chi2_quantile(0.01, 1));
    REQUIRE(chi2_quantile(0.05, 1) < chi2_quantile(0.05, 2));
    REQUIRE(chi2_quantile(0.05, 2) < chi2_quantile(0.05, 3));
}
