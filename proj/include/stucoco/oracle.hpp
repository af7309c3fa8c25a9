#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stucoco/measures.hpp"
#include "stucoco/model.hpp"

namespace stucoco {

/// Monte Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;

    bool within(double reference, double n_sigma) const {
        return std::abs(value - reference) <= n_sigma * std_error;
    }
};

/// Binomial proportion with the Agresti-Coull standard error, which stays
/// positive when every trial succeeds or fails.
Estimate binomial_estimate(std::size_t successes, std::size_t trials);

struct OracleOptions {
    std::size_t n_paths = 100000;
    double dt_fine = 5e-4;
    std::uint64_t seed = 20160215;
    /// Step for continuing accepted paths to the horizon; 0 means dt_fine.
    /// Bridge-corrected stepping of a drifted Brownian motion against a flat
    /// barrier is exact in law for any step.
    double continuation_step = 0.0;
    bool bridge_correction = true;
    /// Keep drawing batches of n_paths until this many paths are accepted.
    std::size_t min_accepted = 0;
};

/// Joint (log S, U) paths on a uniform grid with barrier-crossing flags.
struct PathBundle {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double step = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> log_s;  ///< n_paths x (n_steps + 1), row-major; empty unless stored
    std::vector<double> u;      ///< same layout as log_s
    std::vector<std::uint8_t> crossed;
    std::vector<double> terminal_log_s;
    std::vector<double> terminal_u;

    double log_s_at(std::size_t path, std::size_t k) const { return log_s[path * (n_steps + 1) + k]; }
    double u_at(std::size_t path, std::size_t k) const { return u[path * (n_steps + 1) + k]; }
};

struct BundleOptions {
    bool store_paths = false;
    bool bridge_correction = true;
    RhoMode rho_mode = RhoMode::Strict;
};

/// Exact Gaussian stepping of d log S = mu_S dt + sigma dW* and
/// dU = mu_U dt + sigma (rho dW* + sqrt(1 - rho^2) dZ) from (log S0, U0).
/// A step crosses when its endpoint is at or below c_bar, or with the
/// Brownian-bridge hitting probability 1 - bridge_no_hit.
PathBundle simulate_bundle(const ModelParams& p, const MeasureDrifts& drifts, double horizon,
                           std::size_t n_paths, double dt_fine, std::uint64_t seed,
                           const BundleOptions& opts = {});

/// Probability that a drifted Brownian motion started at u hits c within the
/// horizon, estimated by bridge-corrected stepping.
Estimate first_passage_oracle(double u, double c, double mu, double sigma, double horizon,
                              const OracleOptions& opts);

struct ConditionalHistogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
    std::size_t n_accepted = 0;
    std::size_t n_paths = 0;
    /// One-standard-error binomial half width of each bin, in density units.
    std::vector<double> half_widths;

    double width(std::size_t bin) const { return edges[bin + 1] - edges[bin]; }
    double density(std::size_t bin) const {
        return static_cast<double>(counts[bin]) / (static_cast<double>(n_accepted) * width(bin));
    }
    double center(std::size_t bin) const { return 0.5 * (edges[bin] + edges[bin + 1]); }
};

struct HistogramSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t bins = 0;  ///< 0: 100 bins over the range of the accepted sample
};

/// Accepted values of U_t: paths consistent with the observed stock series
/// (the stock is sampled as a Brownian bridge between observations) that did
/// not cross c_bar by t. obs.front() is the anchor where U = p.U0.
std::vector<double> conditional_sample(const ModelParams& p, const MeasureDrifts& drifts,
                                       std::span<const ObservationRecord> obs, double t,
                                       const OracleOptions& opts, std::size_t* n_simulated = nullptr);

ConditionalHistogram conditional_posterior_oracle(const ModelParams& p, const MeasureDrifts& drifts,
                                                  std::span<const ObservationRecord> obs, double t,
                                                  const OracleOptions& opts, const HistogramSpec& spec = {});

/// P(tau > horizon | survival and observations up to t): accepted paths are
/// continued from U_t without further stock information.
Estimate survival_oracle(const ModelParams& p, const MeasureDrifts& drifts,
                         std::span<const ObservationRecord> obs, double t, double horizon,
                         const OracleOptions& opts);

/// survival_oracle at several observation times in one pass.
std::vector<Estimate> survival_oracle_series(const ModelParams& p, const MeasureDrifts& drifts,
                                             std::span<const ObservationRecord> obs,
                                             std::span<const double> checkpoints, double horizon,
                                             const OracleOptions& opts);

/// CoCo value at t on {tau > t}: accepted conditional paths are continued
/// under P* to maturity and the payoff
///   e^{-r(T-t)} N 1{tau > T} + Cr S_t e^{-kappa(T-t)} (e^{-r(T-t)} S_T / S_t) 1{tau <= T}
/// is averaged; the bracket is the P^(S) density on [t, T].
Estimate price_oracle(const ModelParams& p, std::span<const ObservationRecord> obs, double t,
                      const OracleOptions& opts);

/// Stock paths under P*, observed at the given times (times.front() = 0).
std::vector<std::vector<ObservationRecord>> simulate_stock_scenarios(const ModelParams& p,
                                                                     std::span<const double> times,
                                                                     std::size_t count, std::uint64_t seed);

/// One draw of U along an observed stock path, not conditioned on survival.
struct UTrajectory {
    std::vector<double> u;                ///< U at every observation time
    std::vector<std::uint8_t> crossed_by;  ///< 1{tau <= t_k}
};

UTrajectory simulate_conditional_u(const ModelParams& p, const MeasureDrifts& drifts,
                                   std::span<const ObservationRecord> obs, double dt_fine,
                                   std::uint64_t seed, std::uint64_t stream);

}  // namespace stucoco
