#pragma once

#include <span>
#include <vector>

#include "stucoco/filter.hpp"
#include "stucoco/measures.hpp"
#include "stucoco/model.hpp"

namespace stucoco {

struct SurvivalReport {
    double t = 0.0;
    double horizon = 0.0;
    double p_survive_star = 1.0;  ///< P*(tau > T | G_t)
    double p_survive_T = 1.0;     ///< P^T(tau > T | G_t)
    double p_convert_S = 0.0;     ///< P^(S)(tau <= T | G_t)
};

struct PriceQuote {
    double t = 0.0;
    double pi = 0.0;
    double bond_leg = 0.0;    ///< N B(t,T) P^T(tau > T | G_t)
    double equity_leg = 0.0;  ///< Cr S_t e^{-kappa (T-t)} P^(S)(tau <= T | G_t)
};

/// E[ survival_closed_form(U_t, c_bar, mu_U(measure), sigma, horizon - t) | G_t ]
/// by trapezoid quadrature against the posterior, t = post.anchor_time.
/// Throws ContractError when the posterior was filtered under another measure.
double conditional_survival(const PosteriorDensity& post, MeasureTag measure, const ModelParams& p,
                            double horizon);

SurvivalReport survival_report(const PosteriorDensity& post_star, const PosteriorDensity& post_S,
                               const ModelParams& p, double horizon);

/// CoCo value on {tau > t} from the two posteriors, each filtered under its
/// own measure from the same observation history; S_t is read from them.
PriceQuote price(const PosteriorDensity& post_T, const PosteriorDensity& post_S, const ModelParams& p,
                 double t);

/// Observed history of one scenario over several update periods.
struct CompensatorScenario {
    std::vector<ObservationRecord> stock;  ///< every observation time of the schedule, ascending
    std::vector<double> update_values;     ///< U at T_0, T_1, ...
    std::vector<bool> converted_by;        ///< 1{tau <= T_j} revealed at T_j
};

struct CompensatorOptions {
    double grid_step = 0.0;  ///< extra evaluation points between observations; 0 = none
    /// Count information jumps at every stock observation (true) or at the
    /// update times only (false).
    bool jumps_at_observations = true;
    GridOptions grid;
};

/// F(t) = P*(tau <= t | F~_t) on a time grid with A = F - M, M the sum of
/// jumps of F. Jump instants appear twice: the left limit, then the value.
struct CompensatorPath {
    std::vector<double> times;
    std::vector<double> F_values;
    std::vector<double> A_values;
    std::vector<double> M_values;

    /// Largest decrease of A between consecutive rows (0 when nondecreasing).
    double max_A_decrease() const;
    /// M_t - M_s using the last row at or before each time.
    double M_increment(double s, double t) const;
};

CompensatorPath compensator_path(const CompensatorScenario& scenario, const UpdateSchedule& schedule,
                                 const ModelParams& p, const CompensatorOptions& opts = {});

}  // namespace stucoco
