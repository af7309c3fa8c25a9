#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "stucoco/measures.hpp"
#include "stucoco/model.hpp"

namespace stucoco {

/// Numerical controls of the grid filter.
struct GridOptions {
    std::size_t points = 2048;  ///< nodes at reset
    double width_sigmas = 8.0;  ///< grid top = anchor + width_sigmas * sigma * sqrt(period length)
    double band_sigmas = 12.0;  ///< kernel truncation; ignored when dense
    bool dense = false;         ///< full M x M kernel application
    double edge_mass = 1e-8;    ///< mass allowed in the top 4 cells before the grid grows
};

/// Discretised law of U_t given survival and the stock observations of the
/// current period. grid[0] is the conversion barrier, where the density is
/// exactly zero; grid[1..] is uniform with spacing `step`.
struct PosteriorDensity {
    std::vector<double> grid;
    std::vector<double> weights;  ///< density values at the nodes
    double step = 0.0;
    double anchor_time = 0.0;
    double survival_mass = 1.0;  ///< P(tau > anchor_time | stock observations since the reset)
    double stock = std::numeric_limits<double>::quiet_NaN();  ///< S at anchor_time
    MeasureTag measure = MeasureTag::P_STAR;

    /// Trapezoid weights of the (possibly short) first cell and the uniform rest.
    std::vector<double> quadrature_weights() const;
    double integral() const;
    double mean() const;
    double variance() const;
    double peak() const;
    /// Linear interpolation, zero outside the grid.
    double density_at(double u) const;
    bool is_spike() const;
};

struct TransitionKernelInputs {
    double d_log_s = 0.0;  ///< log(s_j / s_{j-1})
    double dt = 0.0;       ///< t_{0,j} - t_{0,j-1}
    MeasureDrifts drifts;
};

/// Density of U_j - U_{j-1} - rho log(s_j/s_{j-1}): Gaussian with mean
/// (mu_U - rho mu_S) dt and variance sigma^2 (1 - rho^2) dt. Throws
/// DomainError for |rho| = 1, where the law is a point mass.
double kernel_h(double z, const TransitionKernelInputs& k, const ModelParams& p);

/// Point-mass posterior at a full-information update. The grid spans
/// [c_bar, u + width_sigmas sigma sqrt(period_end - t)] and contains u as a node.
/// Throws ConversionTriggered when u <= c_bar.
PosteriorDensity reset_at_update(double u_observed, double t, const ModelParams& p,
                                 double period_end, MeasureTag measure = MeasureTag::P_STAR,
                                 double stock = std::numeric_limits<double>::quiet_NaN(),
                                 const GridOptions& opts = {});

/// One Bayes step across [prev.time, next.time]:
///   p_new(u) ~ int prior(v) bridge_no_hit(v, u) kernel_h(u - v - rho dlogS) dv.
/// The stock-only likelihood factor does not depend on u and drops out.
/// survival_mass is multiplied by the normalisation constant.
PosteriorDensity posterior_step(const PosteriorDensity& prior, const ObservationRecord& prev,
                                const ObservationRecord& next, const ModelParams& p,
                                const MeasureDrifts& drifts, const GridOptions& opts = {});

/// Single-writer filtering session over one update period.
class FilterSession {
public:
    FilterSession(const ModelParams& p, MeasureTag measure, GridOptions opts = {});

    void reset(double u_observed, const ObservationRecord& at_update, double period_end);
    void observe(const ObservationRecord& next);

    const PosteriorDensity& posterior() const { return post_; }
    const ObservationRecord& last_observation() const { return last_; }

private:
    ModelParams params_;
    MeasureDrifts drifts_;
    GridOptions opts_;
    PosteriorDensity post_;
    ObservationRecord last_;
    bool started_ = false;
};

/// "# anchor_time=...,survival_mass=..." followed by a u,density table.
void write_posterior_csv(std::ostream& out, const PosteriorDensity& post);

}  // namespace stucoco
