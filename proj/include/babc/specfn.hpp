#pragma once

// Scalar special functions used by the closed-form belief and acquisition formulas.
// All functions are pure and thread-safe. Non-finite inputs raise DomainError.

namespace babc::specfn {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal cdf, computed from erfc so that both tails keep relative accuracy.
double norm_cdf(double x);

/// log of the standard normal cdf; stays finite far into the lower tail.
double log_norm_cdf(double x);

/// Inverse of norm_cdf on the open interval (0, 1).
double norm_inv_cdf(double p);

/// Owen's T function
///   T(h, a) = 1/(2 pi) * int_0^a exp(-h^2 (1 + x^2) / 2) / (1 + x^2) dx
/// evaluated with the Patefield-Tandy region selection (methods T1..T6).
double owen_t(double h, double a);

/// P(X <= h, Y <= 0) for a standard bivariate normal with correlation rho,
/// via T(h, rho / sqrt(1 - rho^2)) + Phi(h) / 2.
double bvn_quadrant(double h, double rho);

}  // namespace babc::specfn
