#pragma once

namespace stucoco {

/// Standard normal CDF via erfc; accurate to full relative precision in the
/// lower tail down to where erfc underflows.
double normal_cdf(double x);

/// log Phi(x), finite for every finite x (asymptotic series below -37).
double log_normal_cdf(double x);

struct ClosedFormTerms {
    double d_minus = 0.0;
    double d_plus = 0.0;
    double reflection_factor = 1.0;  ///< exp{-2 mu (u - c) / sigma^2}
};

/// d_+- = (c - u +- mu dt) / (sigma sqrt(dt)) and the reflection factor.
ClosedFormTerms closed_form_terms(double u, double c, double mu, double sigma, double dt);

/// Probability that a Brownian motion with drift mu and volatility sigma,
/// started at u, stays strictly above the flat barrier c over [0, dt]:
///     Phi(-d_-) - exp{-2 mu (u - c)/sigma^2} Phi(d_+).
/// Returns 0 when u <= c (already absorbed). Throws DomainError when dt <= 0
/// or sigma <= 0.
double survival_closed_form(double u, double c, double mu, double sigma, double dt);

/// First-passage CDF P(tau <= t) of the same process (inverse Gaussian law).
double first_passage_cdf(double u, double c, double mu, double sigma, double t);

/// Probability that a Brownian bridge with volatility sigma, pinned at x_prev
/// and x_next over an interval dt, never touches c:
///     (1 - exp{-2 (x_prev - c)(x_next - c) / (sigma^2 dt)}) 1{x_prev > c, x_next > c}.
double bridge_no_hit(double x_prev, double x_next, double c, double sigma, double dt);

}  // namespace stucoco
