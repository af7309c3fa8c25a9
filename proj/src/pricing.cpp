#include "stucoco/pricing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "stucoco/errors.hpp"
#include "stucoco/hitting.hpp"

namespace stucoco {

double conditional_survival(const PosteriorDensity& post, MeasureTag measure, const ModelParams& p,
                            double horizon) {
    if (!same_dynamics(post.measure, measure))
        throw ContractError(fmt::format("conditional_survival: posterior filtered under {} used for {}",
                                        to_string(post.measure), to_string(measure)));
    const double remaining = horizon - post.anchor_time;
    if (remaining < -1e-12) throw DomainError("conditional_survival: horizon before the anchor time");
    if (remaining <= 0.0) return 1.0;
    const double mu = drifts_under(measure, p).mu_U;
    const auto w = post.quadrature_weights();
    double s = 0.0;
    for (std::size_t i = 1; i < post.grid.size(); ++i) {
        if (post.weights[i] == 0.0) continue;
        s += w[i] * post.weights[i] * survival_closed_form(post.grid[i], p.c_bar, mu, p.sigma, remaining);
    }
    return std::clamp(s, 0.0, 1.0);
}

SurvivalReport survival_report(const PosteriorDensity& post_star, const PosteriorDensity& post_S,
                               const ModelParams& p, double horizon) {
    SurvivalReport rep;
    rep.t = post_star.anchor_time;
    rep.horizon = horizon;
    rep.p_survive_star = conditional_survival(post_star, MeasureTag::P_STAR, p, horizon);
    rep.p_survive_T = conditional_survival(post_star, MeasureTag::P_T, p, horizon);
    rep.p_convert_S = 1.0 - conditional_survival(post_S, MeasureTag::P_S, p, horizon);
    return rep;
}

PriceQuote price(const PosteriorDensity& post_T, const PosteriorDensity& post_S, const ModelParams& p,
                 double t) {
    if (!same_dynamics(post_T.measure, MeasureTag::P_T))
        throw ContractError("price: bond leg needs a P_T (or P_STAR) posterior");
    if (post_S.measure != MeasureTag::P_S) throw ContractError("price: equity leg needs a P_S posterior");
    if (std::abs(post_T.anchor_time - t) > 1e-12 || std::abs(post_S.anchor_time - t) > 1e-12)
        throw ContractError("price: posteriors are not anchored at the valuation time");
    if (!(post_T.stock > 0.0) || post_T.stock != post_S.stock)
        throw ContractError("price: posteriors disagree on the observed stock price");
    if (t > p.T) throw DomainError("price: valuation after maturity");

    const double tau = p.T - t;
    PriceQuote q;
    q.t = t;
    q.bond_leg = p.N * std::exp(-p.r * tau) * conditional_survival(post_T, MeasureTag::P_T, p, p.T);
    q.equity_leg = p.Cr * post_T.stock * std::exp(-p.kappa * tau) *
                   (1.0 - conditional_survival(post_S, MeasureTag::P_S, p, p.T));
    q.pi = q.bond_leg + q.equity_leg;
    return q;
}

double CompensatorPath::max_A_decrease() const {
    double worst = 0.0;
    for (std::size_t i = 1; i < A_values.size(); ++i) worst = std::max(worst, A_values[i - 1] - A_values[i]);
    return worst;
}

double CompensatorPath::M_increment(double s, double t) const {
    auto value_at = [&](double x) {
        const auto it = std::upper_bound(times.begin(), times.end(), x + 1e-12);
        if (it == times.begin()) throw DomainError("M_increment: time before the path start");
        return M_values[static_cast<std::size_t>(std::distance(times.begin(), it)) - 1];
    };
    return value_at(t) - value_at(s);
}

CompensatorPath compensator_path(const CompensatorScenario& scenario, const UpdateSchedule& schedule,
                                 const ModelParams& p, const CompensatorOptions& opts) {
    validate_series(scenario.stock);
    const std::size_t periods = schedule.periods();
    const auto& updates = schedule.update_times();
    if (scenario.update_values.size() < periods + 1 || scenario.converted_by.size() < periods + 1)
        throw DomainError("compensator_path: need U and the conversion flag at every update time");

    auto stock_at = [&](double t) {
        const auto it = std::lower_bound(scenario.stock.begin(), scenario.stock.end(), t - 1e-9,
                                         [](const ObservationRecord& r, double x) { return r.time < x; });
        if (it == scenario.stock.end() || std::abs(it->time - t) > 1e-9)
            throw DomainError(fmt::format("compensator_path: no stock observation at t = {}", t));
        return *it;
    };

    CompensatorPath path;
    double M = 0.0;
    auto push = [&](double t, double F) {
        path.times.push_back(t);
        path.F_values.push_back(F);
        path.M_values.push_back(M);
        path.A_values.push_back(F - M);
    };
    auto push_jump = [&](double t, double left, double value) {
        push(t, left);
        M += value - left;
        push(t, value);
    };
    auto interior = [&](double from, double to, auto&& F_of) {
        if (opts.grid_step <= 0.0) return;
        for (double t = from + opts.grid_step; t < to - 1e-9; t += opts.grid_step) push(t, F_of(t));
    };

    bool alive = !scenario.converted_by[0];
    push(0.0, alive ? 0.0 : 1.0);
    FilterSession session(p, MeasureTag::P_STAR, opts.grid);

    for (std::size_t j = 0; j < periods; ++j) {
        std::vector<double> events(schedule.observation_times(j).begin() + 1, schedule.observation_times(j).end());
        if (events.empty() || events.back() < updates[j + 1] - 1e-12) events.push_back(updates[j + 1]);

        if (!alive) {
            double prev = updates[j];
            for (double t : events) {
                interior(prev, t, [](double) { return 1.0; });
                push(t, 1.0);
                prev = t;
            }
            continue;
        }

        session.reset(scenario.update_values[j], stock_at(updates[j]), updates[j + 1]);
        for (std::size_t e = 0; e < events.size(); ++e) {
            const PosteriorDensity& post = session.posterior();
            const double mass = post.survival_mass;
            auto F_of = [&](double t) {
                return 1.0 - mass * conditional_survival(post, MeasureTag::P_STAR, p, t);
            };
            const double t = events[e];
            interior(post.anchor_time, t, F_of);
            const double left = F_of(t);
            if (e + 1 == events.size()) {
                const bool converted = scenario.converted_by[j + 1];
                push_jump(t, left, converted ? 1.0 : 0.0);
                alive = !converted;
            } else {
                session.observe(stock_at(t));
                const double value = 1.0 - session.posterior().survival_mass;
                if (opts.jumps_at_observations)
                    push_jump(t, left, value);
                else
                    push(t, value);
            }
        }
    }
    return path;
}

}  // namespace stucoco
