#pragma once

#include <span>
#include <vector>

namespace stucoco {

/// Scalar constants of the base-case model: constant rate, volatility and
/// correlation. Log-barriers live on the scale of the fundamental process U.
struct ModelParams {
    double r = 0.03;        ///< risk-free rate, per year
    double sigma = 0.49;    ///< volatility of log S and of U, per sqrt(year)
    double rho = 0.5;       ///< correlation between the stock and U noises
    double a = 0.5;         ///< barrier-shape parameter
    double kappa = 0.0;     ///< dividend-like rate, per year
    double L = 35.0;        ///< covenant level
    double N = 100.0;       ///< face value
    double Cr = 1.0;        ///< conversion ratio, shares per bond
    double c_bar = 0.0;     ///< conversion log-barrier
    double c_under = 0.0;   ///< default log-barrier (stored only)
    double T = 1.0;         ///< maturity, years
    double S0 = 100.0;      ///< initial share price
    double U0 = 0.0;        ///< initial fundamental value
};

enum class RhoMode {
    Strict,           ///< |rho| < 1
    AllowDegenerate,  ///< rho = +-1 accepted, for limit tests only
};

/// Throws DomainError naming the first violated invariant.
void validate(const ModelParams& p, RhoMode mode = RhoMode::Strict);

/// Parameter set of the numerical illustration: r = 3%, sigma = 0.49,
/// S0 = N = 100, c_bar = log 35, kappa = 0, and a chosen so that the drift
/// of U under P* equals the drift of log S (mu_U* = mu_S* = r - sigma^2/2).
/// U is measured on the log-stock scale, U0 = log S0.
ModelParams base_case_parameters();

/// Benchmark level l_t = L e^{-r(T-t)} e^{(kappa + a sigma^2)(T-t)}.
double barrier_level(double t, const ModelParams& p);

/// Full-information update times T_0 = 0 < T_1 < ... and, per period
/// [T_j, T_{j+1}], the stock observation times t_{j,0} = T_j <= ... <= T_{j+1}.
class UpdateSchedule {
public:
    UpdateSchedule() = default;
    UpdateSchedule(std::vector<double> update_times,
                   std::vector<std::vector<double>> observation_times);

    /// Observation times on a uniform step within every period; the step is
    /// shortened at the period end so that T_{j+1} is always observed.
    static UpdateSchedule uniform(std::vector<double> update_times, double observation_step);

    const std::vector<double>& update_times() const { return updates_; }
    std::size_t periods() const { return observations_.size(); }
    const std::vector<double>& observation_times(std::size_t period) const {
        return observations_.at(period);
    }

    /// Largest T_j <= t.
    double floor_of(double t) const;
    /// Index j of floor_of(t).
    std::size_t period_of(double t) const;

private:
    std::vector<double> updates_{0.0};
    std::vector<std::vector<double>> observations_;
};

double floor_of(double t, const UpdateSchedule& schedule);

struct ObservationRecord {
    double time = 0.0;
    double stock_price = 0.0;
};

/// Positive prices, strictly increasing times.
void validate_series(std::span<const ObservationRecord> series);

}  // namespace stucoco
