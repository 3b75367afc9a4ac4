#include "steerbench/beta_math.hpp"

#include <cmath>
#include <limits>

#include "steerbench/errors.hpp"

namespace steerbench {

namespace {

void check_shape(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw Error("beta distribution requires finite positive shape parameters");
    }
}

// Continued fraction for I_x(a, b) via modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 500;
    constexpr double eps = 1e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace

double log_beta(double a, double b) {
    check_shape(a, b);
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_pdf(double a, double b, double x) {
    check_shape(a, b);
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x == 0.0) {
        if (a < 1.0) return std::numeric_limits<double>::infinity();
        return a == 1.0 ? b : 0.0;
    }
    if (x == 1.0) {
        if (b < 1.0) return std::numeric_limits<double>::infinity();
        return b == 1.0 ? a : 0.0;
    }
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

double beta_cdf(double a, double b, double x) {
    check_shape(a, b);
    if (!(x >= 0.0 && x <= 1.0)) throw Error("beta_cdf: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double ln_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    const double front = std::exp(ln_front);
    // The fraction converges fastest below the distribution's bulk; use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_quantile(double a, double b, double q) {
    check_shape(a, b);
    if (!(q > 0.0 && q < 1.0)) throw Error("beta_quantile: q must lie in (0,1)");

    double lo = 0.0;
    double hi = 1.0;
    double x = a / (a + b);

    for (int iter = 0; iter < 200; ++iter) {
        const double f = beta_cdf(a, b, x) - q;
        if (std::fabs(f) <= 1e-13) return x;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double slope = beta_pdf(a, b, x);
        double next = (slope > 0.0 && std::isfinite(slope)) ? x - f / slope
                                                            : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x) break; // at floating-point resolution
        x = next;
    }
    return x;
}

} // namespace steerbench
