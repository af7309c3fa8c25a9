#pragma once

#include <span>
#include <string_view>

#include "stucoco/model.hpp"

namespace stucoco {

/// Pricing measures: risk-neutral P*, T-forward P^T, share measure P^(S).
enum class MeasureTag { P_STAR, P_T, P_S };

std::string_view to_string(MeasureTag tag);

/// P* and P^T coincide under a constant short rate.
constexpr bool same_dynamics(MeasureTag lhs, MeasureTag rhs) {
    auto canon = [](MeasureTag m) { return m == MeasureTag::P_T ? MeasureTag::P_STAR : m; };
    return canon(lhs) == canon(rhs);
}

struct MeasureDrifts {
    MeasureTag measure_tag = MeasureTag::P_STAR;
    double mu_S = 0.0;  ///< drift of log S, per year
    double mu_U = 0.0;  ///< drift of U, per year
};

/// Under P* and P^T: mu_S = r - sigma^2/2, mu_U = (a - 1/2) sigma^2.
/// Under P^(S):      mu_S = r + sigma^2/2, mu_U = (a - 1/2 + rho) sigma^2.
MeasureDrifts drifts_under(MeasureTag tag, const ModelParams& p);

/// dQ/dP* evaluated on a stock path sampled over [0, p.T]. For P^T this is
/// identically 1 (constant rate, zero bond volatility); for P^(S) it is
/// exp(sigma W*_T - sigma^2 T / 2), with W*_T recovered from the endpoints.
double rn_weight(MeasureTag tag, std::span<const double> stock_path, const ModelParams& p);

}  // namespace stucoco
