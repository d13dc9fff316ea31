#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kscal/chi_square.hpp"
#include "kscal/rng.hpp"

using namespace kscal;
using Catch::Approx;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

template <typename F>
Moments sample_moments(int n, F draw) {
    std::vector<double> x(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = draw();
        s += x[i];
    }
    const double mean = s / n;
    double v = 0.0;
    for (double xi : x) v += (xi - mean) * (xi - mean);
    return {mean, v / (n - 1)};
}

// One-sample Kolmogorov-Smirnov statistic against a CDF.
template <typename C>
double ks_statistic(std::vector<double> x, C cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

}  // namespace

TEST_CASE("streams with equal keys replay exactly") {
    RngStream a(12345);
    RngStream b(12345);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RngStream c(12346);
    RngStream d(12345);
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
    REQUIRE_FALSE(all_equal);
}

TEST_CASE("counter streams are insensitive to interleaving") {
    // Values depend only on (key, position), never on draws from other
    // streams, so two streams can be advanced in any order.
    RngStream a(7);
    RngStream b(8);
    std::vector<std::uint64_t> a_then_b;
    for (int i = 0; i < 8; ++i) a_then_b.push_back(a.next_u64());
    for (int i = 0; i < 8; ++i) a_then_b.push_back(b.next_u64());

    RngStream a2(7);
    RngStream b2(8);
    std::vector<std::uint64_t> interleaved_a;
    std::vector<std::uint64_t> interleaved_b;
    for (int i = 0; i < 8; ++i) {
        interleaved_b.push_back(b2.next_u64());
        interleaved_a.push_back(a2.next_u64());
    }
    for (int i = 0; i < 8; ++i) {
        REQUIRE(interleaved_a[i] == a_then_b[i]);
        REQUIRE(interleaved_b[i] == a_then_b[8 + i]);
    }
}

TEST_CASE("derived keys are order sensitive and collision resistant") {
    REQUIRE(derive_key(1, 2) != derive_key(2, 1));
    REQUIRE(derive_key(1, stream_tag::target_data) != derive_key(1, stream_tag::run));
    REQUIRE(derive_key(5, 3, 0) != derive_key(5, 3, 1));
    // Two-level derivation composes the one-level form.
    REQUIRE(derive_key(5, 3, 7) == derive_key(derive_key(5, 3), 8));

    // A small birthday scan: no collisions among a few thousand children.
    std::vector<std::uint64_t> keys;
    for (std::uint64_t t = 0; t < 64; ++t)
        for (std::uint64_t i = 0; i < 64; ++i) keys.push_back(derive_key(99, t, i));
    std::sort(keys.begin(), keys.end());
    REQUIRE(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
}

TEST_CASE("uniforms live strictly inside the unit interval") {
    RngStream r(2024);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    REQUIRE(lo < 0.001);
    REQUIRE(hi > 0.999);
}

TEST_CASE("uniform moments sit inside wide CLT bands") {
    RngStream r(11);
    const auto m = sample_moments(100000, [&] { return r.next_uniform(); });
    // sd of the mean is 1/sqrt(12 n) ~ 0.0009; allow 5 sigma.
    REQUIRE(m.mean == Approx(0.5).margin(0.005));
    REQUIRE(m.var == Approx(1.0 / 12.0).margin(0.002));
}

TEST_CASE("exponential and normal moments") {
    RngStream r(12);
    const auto e = sample_moments(100000, [&] { return r.next_exp1(); });
    REQUIRE(e.mean == Approx(1.0).margin(0.016));
    REQUIRE(e.var == Approx(1.0).margin(0.05));

    RngStream rn(13);
    const auto n = sample_moments(100000, [&] { return rn.next_normal(); });
    REQUIRE(n.mean == Approx(0.0).margin(0.016));
    REQUIRE(n.var == Approx(1.0).margin(0.03));
}

TEST_CASE("gamma generator matches its analytic CDF and moments") {
    // Gamma(shape, 1) has mean = var = shape. The CDF is the regularized
    // incomplete gamma, so a KS test covers the full distribution. The 1%
    // critical value for n = 10000 is 1.6277 / sqrt(n).
    const double crit = 1.6277 / 100.0;
    for (double shape : {0.5, 0.8, 1.0, 2.3}) {
        RngStream r(77 + static_cast<std::uint64_t>(shape * 10));
        std::vector<double> x(10000);
        for (auto& v : x) v = r.next_gamma(shape);
        for (double v : x) REQUIRE(v > 0.0);
        const double d = ks_statistic(x, [&](double t) { return gamma_p(shape, t); });
        INFO("shape " << shape << " ks " << d);
        REQUIRE(d < crit);
    }
    RngStream r(5);
    REQUIRE_THROWS_AS(r.next_gamma(0.0), DomainError);
    REQUIRE_THROWS_AS(r.next_gamma(-1.0), DomainError);
}

TEST_CASE("gamma at shape one half uses the squared normal identity") {
    RngStream a(314);
    RngStream b(314);
    for (int i = 0; i < 100; ++i) {
        const double g = a.next_gamma(0.5);
        const double z = b.next_normal();
        REQUIRE(g == 0.5 * z * z);
    }
}

TEST_CASE("exp1 distribution passes a KS test") {
    RngStream r(99);
    std::vector<double> x(10000);
    for (auto& v : x) v = r.next_exp1();
    const double d = ks_statistic(x, [](double t) { return 1.0 - std::exp(-t); });
    REQUIRE(d < 1.6277 / 100.0);
}
