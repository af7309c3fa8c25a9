#include "stucoco/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "stucoco/errors.hpp"

namespace stucoco {

namespace {

constexpr double kTimeTolerance = 1e-12;

void require(bool cond, const std::string& what) {
    if (!cond) throw DomainError(what);
}

}  // namespace

void validate(const ModelParams& p, RhoMode mode) {
    require(std::isfinite(p.r) && std::isfinite(p.a) && std::isfinite(p.kappa),
            "model: r, a and kappa must be finite");
    require(p.sigma > 0.0 && std::isfinite(p.sigma), "model: sigma must be > 0");
    require(p.T > 0.0, "model: maturity T must be > 0");
    require(p.S0 > 0.0, "model: S0 must be > 0");
    require(p.N >= 0.0, "model: face value N must be >= 0");
    require(p.Cr >= 0.0, "model: conversion ratio Cr must be >= 0");
    require(p.L >= 0.0, "model: covenant level L must be >= 0");
    require(p.c_under < p.c_bar, "model: default barrier must lie below the conversion barrier");
    if (mode == RhoMode::Strict)
        require(std::abs(p.rho) < 1.0, "model: |rho| must be < 1");
    else
        require(std::abs(p.rho) <= 1.0, "model: |rho| must be <= 1");
    require(p.U0 > p.c_bar, "model: U0 must lie above the conversion barrier");
}

ModelParams base_case_parameters() {
    ModelParams p;
    p.r = 0.03;
    p.sigma = 0.49;
    p.rho = 0.5;
    p.kappa = 0.0;
    p.S0 = 100.0;
    p.N = 100.0;
    p.Cr = 1.0;
    p.L = 35.0;
    p.T = 1.0;
    p.c_bar = std::log(35.0);
    p.c_under = std::log(20.0);
    p.U0 = std::log(p.S0);
    const double s2 = p.sigma * p.sigma;
    p.a = 0.5 + (p.r - 0.5 * s2) / s2;
    return p;
}

double barrier_level(double t, const ModelParams& p) {
    if (t < 0.0 || t > p.T) throw DomainError(fmt::format("barrier_level: t = {} outside [0, T]", t));
    const double tau = p.T - t;
    return p.L * std::exp(-p.r * tau) * std::exp((p.kappa + p.a * p.sigma * p.sigma) * tau);
}

UpdateSchedule::UpdateSchedule(std::vector<double> update_times,
                               std::vector<std::vector<double>> observation_times)
    : updates_(std::move(update_times)), observations_(std::move(observation_times)) {
    require(!updates_.empty(), "schedule: no update times");
    require(updates_.front() == 0.0, "schedule: T_0 must be 0");
    for (std::size_t j = 1; j < updates_.size(); ++j)
        require(updates_[j] > updates_[j - 1] + kTimeTolerance,
                "schedule: update times must be strictly increasing");
    require(observations_.size() + 1 == updates_.size(),
            "schedule: need one observation list per period");
    for (std::size_t j = 0; j < observations_.size(); ++j) {
        const auto& obs = observations_[j];
        require(!obs.empty() && obs.front() == updates_[j],
                fmt::format("schedule: period {} must start with t = T_{}", j, j));
        for (std::size_t i = 1; i < obs.size(); ++i)
            require(obs[i] > obs[i - 1] + kTimeTolerance,
                    fmt::format("schedule: duplicate or decreasing observation time in period {}", j));
        require(obs.back() <= updates_[j + 1] + kTimeTolerance,
                fmt::format("schedule: observation beyond T_{}", j + 1));
    }
}

UpdateSchedule UpdateSchedule::uniform(std::vector<double> update_times, double observation_step) {
    require(observation_step > 0.0, "schedule: observation step must be > 0");
    require(update_times.size() >= 2, "schedule: need at least T_0 and T_1");
    std::vector<std::vector<double>> obs(update_times.size() - 1);
    for (std::size_t j = 0; j + 1 < update_times.size(); ++j) {
        const double lo = update_times[j];
        const double hi = update_times[j + 1];
        const auto n = static_cast<long>(std::ceil((hi - lo) / observation_step - 1e-9));
        for (long i = 0; i < n; ++i) obs[j].push_back(lo + static_cast<double>(i) * observation_step);
        obs[j].push_back(hi);
    }
    return UpdateSchedule(std::move(update_times), std::move(obs));
}

std::size_t UpdateSchedule::period_of(double t) const {
    if (t < 0.0) throw DomainError(fmt::format("floor_of: t = {} < 0", t));
    const auto it = std::upper_bound(updates_.begin(), updates_.end(), t);
    return static_cast<std::size_t>(std::distance(updates_.begin(), it)) - 1;
}

double UpdateSchedule::floor_of(double t) const { return updates_[period_of(t)]; }

double floor_of(double t, const UpdateSchedule& schedule) { return schedule.floor_of(t); }

void validate_series(std::span<const ObservationRecord> series) {
    for (std::size_t i = 0; i < series.size(); ++i) {
        require(series[i].stock_price > 0.0 && std::isfinite(series[i].stock_price),
                fmt::format("observation {}: stock price must be > 0", i));
        if (i > 0)
            require(series[i].time > series[i - 1].time,
                    fmt::format("observation {}: times must be strictly increasing", i));
    }
}

}  // namespace stucoco
