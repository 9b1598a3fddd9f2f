#pragma once

namespace grrt {

// log of the Beta function B(a, b), a > 0, b > 0.
double log_beta(double a, double b);

// Regularized incomplete beta function I_x(a, b), i.e. the CDF of a
// Beta(a, b) variate evaluated at x in [0, 1].
double beta_cdf(double a, double b, double x);

// Inverse of beta_cdf in x for fixed (a, b): returns x with I_x(a, b) = p.
double beta_inv_cdf(double a, double b, double p);

// High-probability upper bound for the Frobenius norm of an n x L matrix
// with i.i.d. N(0, sigma^2) entries:
//     sigma * sqrt(n*L + 2*sqrt(n*L*ln(n*L))).
// A draw stays below this bound with probability at least 1 - 1/(n*L).
double noise_norm_bound(int n, int L, double sigma);

}  // namespace grrt
