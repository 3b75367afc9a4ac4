#pragma once

namespace steerbench {

/// log B(a, b) for a, b > 0.
double log_beta(double a, double b);

/// Density of Beta(a, b) at x in [0, 1].
double beta_pdf(double a, double b, double x);

// Regularized incomplete beta I_x(a, b), evaluated with the symmetric
// continued fraction (modified Lentz). Absolute error <= 1e-12 over the
// parameter ranges the harness produces (a, b >= 1, posterior sums up to
// a few thousand).
double beta_cdf(double a, double b, double x);

// Inverse CDF: returns x with |beta_cdf(a, b, x) - q| <= 1e-10, via a
// bracketing Newton/bisection hybrid.
double beta_quantile(double a, double b, double q);

} // namespace steerbench
