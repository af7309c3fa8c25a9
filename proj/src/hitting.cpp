#include "stucoco/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "stucoco/errors.hpp"

namespace stucoco {

namespace {

void check_args(double sigma, double dt, const char* who) {
    if (!(sigma > 0.0)) throw DomainError(fmt::format("{}: sigma must be > 0", who));
    if (!(dt > 0.0)) throw DomainError(fmt::format("{}: horizon must be > 0", who));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) {
    if (x > -37.0) return std::log(normal_cdf(x));
    // Mills-ratio expansion: Phi(x) = phi(x)/|x| (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
    const double z = 1.0 / (x * x);
    double series = 1.0;
    double term = 1.0;
    for (int k = 1; k <= 6; ++k) {
        term *= -static_cast<double>(2 * k - 1) * z;
        series += term;
    }
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

ClosedFormTerms closed_form_terms(double u, double c, double mu, double sigma, double dt) {
    check_args(sigma, dt, "closed_form_terms");
    const double sd = sigma * std::sqrt(dt);
    return {(c - u - mu * dt) / sd, (c - u + mu * dt) / sd,
            std::exp(-2.0 * mu * (u - c) / (sigma * sigma))};
}

double survival_closed_form(double u, double c, double mu, double sigma, double dt) {
    check_args(sigma, dt, "survival_closed_form");
    if (u <= c) return 0.0;
    const double sd = sigma * std::sqrt(dt);
    const double d_minus = (c - u - mu * dt) / sd;
    const double d_plus = (c - u + mu * dt) / sd;
    const double exponent = -2.0 * mu * (u - c) / (sigma * sigma);
    const double reflected = exponent > 700.0 ? std::exp(exponent + log_normal_cdf(d_plus))
                                              : std::exp(exponent) * normal_cdf(d_plus);
    return std::clamp(normal_cdf(-d_minus) - reflected, 0.0, 1.0);
}

// Phi(d_-) + exp{-2 mu (u - c)/sigma^2} Phi(d_+), written out so that small
// probabilities keep their relative precision.
double first_passage_cdf(double u, double c, double mu, double sigma, double t) {
    check_args(sigma, t, "first_passage_cdf");
    if (u <= c) return 1.0;
    const double sd = sigma * std::sqrt(t);
    const double d_minus = (c - u - mu * t) / sd;
    const double d_plus = (c - u + mu * t) / sd;
    const double exponent = -2.0 * mu * (u - c) / (sigma * sigma);
    const double reflected = exponent > 700.0 ? std::exp(exponent + log_normal_cdf(d_plus))
                                              : std::exp(exponent) * normal_cdf(d_plus);
    return std::clamp(normal_cdf(d_minus) + reflected, 0.0, 1.0);
}

double bridge_no_hit(double x_prev, double x_next, double c, double sigma, double dt) {
    if (x_prev <= c || x_next <= c) return 0.0;
    check_args(sigma, dt, "bridge_no_hit");
    return -std::expm1(-2.0 * (x_prev - c) * (x_next - c) / (sigma * sigma * dt));
}

}  // namespace stucoco
