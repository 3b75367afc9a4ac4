#include <doctest.h>

#include <cmath>
#include <functional>

#include "steerbench/beta_math.hpp"
#include "steerbench/errors.hpp"
#include "steerbench/rng.hpp"

using namespace steerbench;

namespace {

// Adaptive Simpson quadrature — an integration oracle independent of the
// continued-fraction CDF it checks.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace

TEST_CASE("log_beta agrees with lgamma") {
    const double cases[][2] = {{1, 1}, {2, 3}, {0.5, 0.5}, {7.25, 11.5}, {300, 0.75}};
    for (const auto& c : cases) {
        const double expected = std::lgamma(c[0]) + std::lgamma(c[1]) - std::lgamma(c[0] + c[1]);
        CHECK(beta_cdf(c[0], c[1], 1.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(log_beta(c[0], c[1]) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("beta_pdf integrates to one") {
    const double params[][2] = {{1, 1}, {2, 5}, {0.7, 0.7}, {12, 3}, {45, 45}};
    for (const auto& p : params) {
        const double a = p[0];
        const double b = p[1];
        // Stay off the endpoints when the density is unbounded there.
        const double lo = (a < 1.0) ? 1e-9 : 0.0;
        const double hi = (b < 1.0) ? 1.0 - 1e-9 : 1.0;
        const double mass = integrate([&](double x) { return beta_pdf(a, b, x); }, lo, hi);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("beta_cdf closed forms: uniform and polynomial shapes") {
    for (double x : {0.0, 0.1, 0.25, 0.5, 0.77, 1.0}) {
        CHECK(beta_cdf(1, 1, x) == doctest::Approx(x).epsilon(1e-14));          // uniform
        CHECK(beta_cdf(2, 1, x) == doctest::Approx(x * x).epsilon(1e-13));      // F(x) = x^2
        CHECK(beta_cdf(1, 2, x) ==
              doctest::Approx(1.0 - (1.0 - x) * (1.0 - x)).epsilon(1e-13));     // mirror
        CHECK(beta_cdf(3, 1, x) == doctest::Approx(x * x * x).epsilon(1e-13));  // F(x) = x^3
    }
}

TEST_CASE("beta_cdf symmetry: I_x(a,b) + I_{1-x}(b,a) = 1") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const double a = 0.5 + 50.0 * rng.unit_open();
        const double b = 0.5 + 50.0 * rng.unit_open();
        const double x = rng.unit_open();
        CHECK(beta_cdf(a, b, x) + beta_cdf(b, a, 1.0 - x) == doctest::Approx(1.0).epsilon(1e-11));
    }
}

TEST_CASE("beta_cdf matches quadrature of the density") {
    Rng rng(57);
    for (int i = 0; i < 60; ++i) {
        const double a = 1.0 + 80.0 * rng.unit_open();
        const double b = 1.0 + 80.0 * rng.unit_open();
        const double x = rng.unit_open();
        const double reference = integrate([&](double t) { return beta_pdf(a, b, t); }, 0.0, x);
        CHECK(beta_cdf(a, b, x) == doctest::Approx(reference).epsilon(5e-9));
    }
}

TEST_CASE("beta_cdf spot values") {
    // Independent references (symbolic/scipy); wide parameter spread.
    CHECK(beta_cdf(2.5, 3.5, 0.3) == doctest::Approx(0.29675298929566646).epsilon(1e-11));
    CHECK(beta_cdf(40, 60, 0.42) == doctest::Approx(0.6623056749815637).epsilon(1e-11));
    CHECK(beta_cdf(2, 2, 0.5) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("beta_quantile inverts the CDF to spec tolerance") {
    Rng rng(91);
    for (int i = 0; i < 200; ++i) {
        const double a = 1.0 + 199.0 * rng.unit_open();
        const double b = 1.0 + 199.0 * rng.unit_open();
        const double q = rng.unit_open();
        const double x = beta_quantile(a, b, q);
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        CHECK(std::abs(beta_cdf(a, b, x) - q) <= 1e-10);
    }
    CHECK(beta_quantile(2.5, 3.5, 0.77) == doctest::Approx(0.5635441207572048).epsilon(1e-9));
}

TEST_CASE("beta_quantile rejects boundary probabilities") {
    CHECK_THROWS_AS(beta_quantile(3, 4, 0.0), Error);
    CHECK_THROWS_AS(beta_quantile(3, 4, 1.0), Error);
    CHECK(beta_quantile(1, 1, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
    // Median of a symmetric beta is exactly one half.
    CHECK(beta_quantile(17, 17, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
}
