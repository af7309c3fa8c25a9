#include "stucoco/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "stucoco/csv.hpp"
#include "stucoco/errors.hpp"
#include "stucoco/filter.hpp"
#include "stucoco/hitting.hpp"
#include "stucoco/measures.hpp"
#include "stucoco/oracle.hpp"
#include "stucoco/parallel.hpp"
#include "stucoco/pricing.hpp"

namespace stucoco::app {

namespace fs = std::filesystem;

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kBandSigmas = 3.0;
constexpr double kValidateSigmas = 4.0;

const char* const kPlotScript = R"PY(#!/usr/bin/env python3
"""Figures from the CSV files in this directory. Requires matplotlib."""
import csv
import glob
import os
import re

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}


def scenario_id(path):
    return int(re.search(r"scenario_(\d+)", path).group(1))


def stock_figure():
    files = sorted(glob.glob(os.path.join(HERE, "scenario_*.csv")), key=scenario_id)
    if not files:
        return
    fig, ax = plt.subplots()
    for f in files:
        d = load(f)
        ax.plot(d["t"], d["S"], label=f"scenario {scenario_id(f)}")
    ax.plot(d["t"], d["barrier_S"], "k--", label="conversion level")
    ax.set_xlabel("t")
    ax.set_ylabel("S")
    ax.legend()
    fig.savefig(os.path.join(HERE, "stock_paths.png"), dpi=150)


def u_figures():
    for f in sorted(glob.glob(os.path.join(HERE, "u_paths_scenario_*.csv")), key=scenario_id):
        d = load(f)
        fig, ax = plt.subplots()
        for k in d:
            if k.startswith("U_rho_"):
                ax.plot(d["t"], d[k], label="rho = " + k[len("U_rho_"):])
        ax.plot(d["t"], d["log_S"], color="grey", lw=0.8, label="log S")
        ax.plot(d["t"], d["c_bar"], "k--", label="c_bar")
        ax.set_xlabel("t")
        ax.set_ylabel("U")
        ax.legend()
        fig.savefig(os.path.join(HERE, f"u_paths_scenario_{scenario_id(f)}.png"), dpi=150)


def survival_figures():
    files = glob.glob(os.path.join(HERE, "survival_scenario_*_rho_*.csv"))
    by_scenario = {}
    for f in files:
        m = re.search(r"survival_scenario_(\d+)_rho_([-0-9.e]+)\.csv$", f)
        if m:
            by_scenario.setdefault(int(m.group(1)), []).append((float(m.group(2)), f))
    for i, items in sorted(by_scenario.items()):
        fig, ax = plt.subplots()
        for rho, f in sorted(items):
            d = load(f)
            ax.plot(d["t"], d["p_survive_star"], label=f"rho = {rho:g}")
        ax.set_xlabel("t")
        ax.set_ylabel("P*(tau > T_1 | G_t)")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        fig.savefig(os.path.join(HERE, f"survival_scenario_{i}.png"), dpi=150)


if __name__ == "__main__":
    stock_figure()
    u_figures()
    survival_figures()
)PY";

void ensure_dir(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out))
        throw std::runtime_error(fmt::format("cannot create output directory {}: {}", out.string(), ec.message()));
}

void emit(CommandResult& res, const fs::path& path, const std::string& content) {
    csv::write_atomic(path, content);
    res.files.push_back(path);
}

void write_manifest(CommandResult& res, RunConfig cfg, const std::string& command, const fs::path& out) {
    cfg.command = command;
    cfg.output_dir = out.string();
    emit(res, out / "manifest.json", to_json(cfg).dump(2) + "\n");
}

GridOptions grid_options(const RunConfig& cfg) {
    GridOptions g;
    g.points = cfg.grid_points;
    return g;
}

OracleOptions oracle_options(const RunConfig& cfg) {
    OracleOptions o;
    o.n_paths = cfg.oracle.n_paths;
    o.dt_fine = cfg.oracle.dt_fine;
    o.seed = cfg.oracle.seed;
    o.continuation_step = cfg.oracle.continuation_step;
    return o;
}

ModelParams with_rho(const RunConfig& cfg, double rho) {
    ModelParams p = cfg.model;
    p.rho = rho;
    return p;
}

std::size_t index_of(std::span<const ObservationRecord> obs, double t) {
    for (std::size_t k = 0; k < obs.size(); ++k)
        if (std::abs(obs[k].time - t) <= kTimeTol) return k;
    throw ConfigError(fmt::format("time {} is not an observation time", t));
}

/// Observations of the first update period.
std::span<const ObservationRecord> first_period(const RunConfig& cfg, const std::vector<ObservationRecord>& s) {
    const std::size_t n = cfg.make_schedule().observation_times(0).size();
    return std::span<const ObservationRecord>(s).first(n);
}

/// U implied by the stock alone: U0 + rho (log S_t - log S_0) + (mu_U - rho mu_S) t.
double stock_implied_u(const ModelParams& p, const ObservationRecord& o) {
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    return p.U0 + p.rho * (std::log(o.stock_price) - std::log(p.S0)) + (d.mu_U - p.rho * d.mu_S) * o.time;
}

double full_information_survival(const ModelParams& p, const ObservationRecord& o, double horizon) {
    const double u = stock_implied_u(p, o);
    if (u <= p.c_bar) return 0.0;
    if (horizon - o.time <= 0.0) return 1.0;
    return survival_closed_form(u, p.c_bar, drifts_under(MeasureTag::P_STAR, p).mu_U, p.sigma, horizon - o.time);
}

struct Cell {
    std::size_t scenario;
    std::size_t rho_index;
};

std::vector<Cell> cells(std::size_t scenarios, std::size_t rhos) {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < scenarios; ++i)
        for (std::size_t k = 0; k < rhos; ++k) out.push_back({i, k});
    return out;
}

template <class Fn>
void for_each_cell(const std::vector<Cell>& all, Fn&& fn) {
    for_each_chunk(all.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) fn(all[c]);
    }, 1);
}

std::string within_flag(const std::string& value, const std::string& reference, const std::string& se,
                        double n_sigma) {
    return std::abs(csv::parse(value) - csv::parse(reference)) <= n_sigma * csv::parse(se) ? "1" : "0";
}

}  // namespace

std::string rho_label(double rho) { return fmt::format("{}", rho); }

std::vector<std::vector<ObservationRecord>> load_scenarios(const RunConfig& cfg) {
    const auto times = cfg.observation_times();
    if (cfg.scenario_file.empty())
        return simulate_stock_scenarios(cfg.model, times, cfg.scenario_count, cfg.oracle.seed);

    csv::Table t = [&] {
        try {
            return csv::read(cfg.scenario_file);
        } catch (const std::exception& e) {
            throw ConfigError(fmt::format("scenarios: {}", e.what()));
        }
    }();
    std::size_t ci, ti, si;
    try {
        ci = t.column("scenario");
        ti = t.column("t");
        si = t.column("S");
    } catch (const std::out_of_range&) {
        throw ConfigError(fmt::format("scenarios: {} needs columns scenario,t,S", cfg.scenario_file));
    }
    std::map<long, std::vector<ObservationRecord>> by_id;
    try {
        for (const auto& row : t.rows())
            by_id[std::stol(row[ci])].push_back({csv::parse(row[ti]), csv::parse(row[si])});
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("scenarios: {}: {}", cfg.scenario_file, e.what()));
    }
    std::vector<std::vector<ObservationRecord>> out;
    for (auto& [id, series] : by_id) {
        try {
            validate_series(series);
        } catch (const DomainError& e) {
            throw ConfigError(fmt::format("scenarios: scenario {}: {}", id, e.what()));
        }
        if (series.size() != times.size())
            throw ConfigError(fmt::format("scenarios: scenario {} has {} rows, the schedule has {} observation times", id,
                                          series.size(), times.size()));
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (std::abs(series[k].time - times[k]) > kTimeTol)
                throw ConfigError(fmt::format("scenarios: scenario {} row {} at t = {}, expected {}", id, k,
                                              series[k].time, times[k]));
            series[k].time = times[k];
        }
        if (std::abs(series.front().stock_price - cfg.model.S0) > 1e-9 * cfg.model.S0)
            throw ConfigError(fmt::format("scenarios: scenario {} does not start at S0", id));
        out.push_back(std::move(series));
    }
    if (out.empty()) throw ConfigError("scenarios: file holds no rows");
    return out;
}

CommandResult cmd_simulate(RunConfig cfg, const fs::path& out) {
    check(cfg);
    ensure_dir(out);
    CommandResult res;
    const auto scenarios = load_scenarios(cfg);
    const double barrier_s = std::exp(cfg.model.c_bar);
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& s = scenarios[i];
        csv::Table stock({"t", "S", "barrier_S"});
        for (const auto& o : s) stock.add({csv::time(o.time), csv::real(o.stock_price), csv::real(barrier_s)});
        emit(res, out / fmt::format("scenario_{}.csv", i + 1), stock.str());

        std::vector<std::string> header{"t", "log_S"};
        std::vector<UTrajectory> traj;
        for (std::size_t k = 0; k < cfg.rho_sweep.size(); ++k) {
            const ModelParams p = with_rho(cfg, cfg.rho_sweep[k]);
            header.push_back("U_rho_" + rho_label(cfg.rho_sweep[k]));
            traj.push_back(simulate_conditional_u(p, drifts_under(MeasureTag::P_STAR, p), s, cfg.oracle.dt_fine,
                                                  cfg.oracle.seed, i * 64 + k));
        }
        header.push_back("c_bar");
        csv::Table u(header);
        for (std::size_t n = 0; n < s.size(); ++n) {
            std::vector<std::string> row{csv::time(s[n].time), csv::real(std::log(s[n].stock_price))};
            for (const auto& tr : traj) row.push_back(csv::real(tr.u[n]));
            row.push_back(csv::real(cfg.model.c_bar));
            u.add(std::move(row));
        }
        emit(res, out / fmt::format("u_paths_scenario_{}.csv", i + 1), u.str());
    }
    emit(res, out / "plot_figures.py", kPlotScript);
    write_manifest(res, cfg, "simulate", out);
    return res;
}

CommandResult cmd_survive(RunConfig cfg, const fs::path& out) {
    check(cfg);
    ensure_dir(out);
    CommandResult res;
    const auto scenarios = load_scenarios(cfg);
    const double T1 = cfg.schedule.update_times[1];
    const auto checkpoints = cfg.checkpoints();
    const auto all = cells(scenarios.size(), cfg.rho_sweep.size());
    std::vector<std::string> series(all.size()), checks(all.size());
    std::vector<std::size_t> misses(all.size(), 0);

    for_each_cell(all, [&](const Cell& c) {
        const std::size_t slot = c.scenario * cfg.rho_sweep.size() + c.rho_index;
        const ModelParams p = with_rho(cfg, cfg.rho_sweep[c.rho_index]);
        const auto obs = first_period(cfg, scenarios[c.scenario]);
        FilterSession star(p, MeasureTag::P_STAR, grid_options(cfg));
        FilterSession share(p, MeasureTag::P_S, grid_options(cfg));
        star.reset(p.U0, obs[0], T1);
        share.reset(p.U0, obs[0], T1);
        csv::Table tab({"t", "p_survive_star", "p_convert_S", "p_survive_full_info"});
        std::vector<std::string> analytic;
        for (std::size_t k = 0; k < obs.size(); ++k) {
            if (k > 0) {
                star.observe(obs[k]);
                share.observe(obs[k]);
            }
            const auto r = survival_report(star.posterior(), share.posterior(), p, T1);
            tab.add({csv::time(obs[k].time), csv::prob(r.p_survive_star), csv::prob(r.p_convert_S),
                     csv::prob(full_information_survival(p, obs[k], T1))});
            analytic.push_back(csv::prob(r.p_survive_star));
        }
        series[slot] = tab.str();

        if (cfg.validate) {
            OracleOptions o = oracle_options(cfg);
            o.seed = cfg.oracle.seed + slot;
            const auto est = survival_oracle_series(p, drifts_under(MeasureTag::P_STAR, p), obs, checkpoints, T1, o);
            csv::Table v({"t", "p_survive_star", "oracle_p_survive_star", "oracle_std_error", "within_3se"});
            for (std::size_t n = 0; n < checkpoints.size(); ++n) {
                const std::string a = analytic[index_of(obs, checkpoints[n])];
                const std::string e = csv::prob(est[n].value), se = csv::prob(est[n].std_error);
                const std::string flag = within_flag(a, e, se, kBandSigmas);
                if (flag == "0") ++misses[slot];
                v.add({csv::time(checkpoints[n]), a, e, se, flag});
            }
            checks[slot] = v.str();
        }
    });

    std::size_t total_misses = 0, total = 0;
    for (const Cell& c : all) {
        const std::size_t slot = c.scenario * cfg.rho_sweep.size() + c.rho_index;
        const std::string stem =
            fmt::format("scenario_{}_rho_{}.csv", c.scenario + 1, rho_label(cfg.rho_sweep[c.rho_index]));
        emit(res, out / ("survival_" + stem), series[slot]);
        if (cfg.validate) {
            emit(res, out / ("survival_oracle_" + stem), checks[slot]);
            total_misses += misses[slot];
            total += checkpoints.size();
        }
    }
    if (cfg.validate)
        res.messages.push_back(
            fmt::format("{} of {} checkpoints outside the 3-stderr oracle band", total_misses, total));
    emit(res, out / "plot_figures.py", kPlotScript);
    write_manifest(res, cfg, "survive", out);
    return res;
}

CommandResult cmd_price(RunConfig cfg, const fs::path& out) {
    check(cfg);
    ensure_dir(out);
    CommandResult res;
    const auto scenarios = load_scenarios(cfg);
    const double T1 = cfg.schedule.update_times[1];
    const auto checkpoints = cfg.checkpoints();
    const auto all = cells(scenarios.size(), cfg.rho_sweep.size());
    std::vector<std::vector<std::vector<std::string>>> rows(all.size());

    for_each_cell(all, [&](const Cell& c) {
        const std::size_t slot = c.scenario * cfg.rho_sweep.size() + c.rho_index;
        const ModelParams p = with_rho(cfg, cfg.rho_sweep[c.rho_index]);
        const auto obs = first_period(cfg, scenarios[c.scenario]);
        FilterSession fwd(p, MeasureTag::P_T, grid_options(cfg));
        FilterSession share(p, MeasureTag::P_S, grid_options(cfg));
        fwd.reset(p.U0, obs[0], T1);
        share.reset(p.U0, obs[0], T1);
        std::size_t next = 0;
        for (std::size_t k = 0; k < obs.size() && next < checkpoints.size(); ++k) {
            if (k > 0) {
                fwd.observe(obs[k]);
                share.observe(obs[k]);
            }
            if (std::abs(obs[k].time - checkpoints[next]) > kTimeTol) continue;
            ++next;
            const PriceQuote q = price(fwd.posterior(), share.posterior(), p, obs[k].time);
            const std::string bond = csv::real(q.bond_leg), equity = csv::real(q.equity_leg);
            std::vector<std::string> row{std::to_string(c.scenario + 1),
                                         rho_label(p.rho),
                                         csv::time(obs[k].time),
                                         csv::real(obs[k].stock_price),
                                         bond,
                                         equity,
                                         csv::real(csv::parse(bond) + csv::parse(equity))};
            if (cfg.validate) {
                OracleOptions o = oracle_options(cfg);
                o.seed = cfg.oracle.seed + slot * 1009 + k;
                const Estimate e = price_oracle(p, obs, obs[k].time, o);
                const std::string ev = csv::real(e.value), se = csv::real(e.std_error);
                row.push_back(ev);
                row.push_back(se);
                row.push_back(within_flag(row[6], ev, se, kBandSigmas));
            }
            rows[slot].push_back(std::move(row));
        }
    });

    std::vector<std::string> header{"scenario", "rho", "t", "S", "bond_leg", "equity_leg", "pi"};
    if (cfg.validate) {
        header.push_back("oracle_pi");
        header.push_back("oracle_std_error");
        header.push_back("within_3se");
    }
    csv::Table tab(header);
    for (auto& r : rows)
        for (auto& row : r) tab.add(std::move(row));
    emit(res, out / "prices.csv", tab.str());
    write_manifest(res, cfg, "price", out);
    return res;
}

CommandResult cmd_compensator(RunConfig cfg, const fs::path& out) {
    check(cfg);
    if (cfg.schedule.update_times.size() < 3)
        throw ConfigError("compensator: schedule.update_times must span at least two update periods");
    ensure_dir(out);
    CommandResult res;
    const auto scenarios = load_scenarios(cfg);
    const UpdateSchedule sched = cfg.make_schedule();
    const auto all = cells(scenarios.size(), cfg.rho_sweep.size());
    std::vector<std::string> tables(all.size());
    std::vector<double> worst(all.size(), 0.0);

    for_each_cell(all, [&](const Cell& c) {
        const std::size_t slot = c.scenario * cfg.rho_sweep.size() + c.rho_index;
        ModelParams p = with_rho(cfg, cfg.rho_sweep[c.rho_index]);
        const auto& obs = scenarios[c.scenario];
        const UTrajectory tr = simulate_conditional_u(p, drifts_under(MeasureTag::P_STAR, p), obs, cfg.oracle.dt_fine,
                                                      cfg.oracle.seed, 500000 + slot);
        CompensatorScenario sc;
        sc.stock = obs;
        for (double Tj : sched.update_times()) {
            const std::size_t k = index_of(obs, Tj);
            sc.update_values.push_back(tr.u[k]);
            sc.converted_by.push_back(tr.crossed_by[k] != 0);
        }
        CompensatorOptions opts;
        opts.grid = grid_options(cfg);
        const CompensatorPath path = compensator_path(sc, sched, p, opts);
        worst[slot] = path.max_A_decrease();
        csv::Table tab({"t", "F", "A", "M"});
        for (std::size_t n = 0; n < path.times.size(); ++n) {
            const std::string F = csv::prob(path.F_values[n]), A = csv::prob(path.A_values[n]);
            tab.add({csv::time(path.times[n]), F, A, csv::prob(csv::parse(F) - csv::parse(A))});
        }
        tables[slot] = tab.str();
    });

    double max_decrease = 0.0;
    for (const Cell& c : all) {
        const std::size_t slot = c.scenario * cfg.rho_sweep.size() + c.rho_index;
        emit(res, out / fmt::format("compensator_scenario_{}_rho_{}.csv", c.scenario + 1,
                                    rho_label(cfg.rho_sweep[c.rho_index])),
             tables[slot]);
        max_decrease = std::max(max_decrease, worst[slot]);
    }
    write_manifest(res, cfg, "compensator", out);
    if (max_decrease > 1e-10) {
        res.exit_code = kInvariantViolation;
        res.messages.push_back(fmt::format("compensator decreases by {:.3e} on some path", max_decrease));
    }
    return res;
}

CommandResult cmd_validate(RunConfig cfg, const fs::path& out) {
    check(cfg);
    ensure_dir(out);
    CommandResult res;
    const auto scenarios = load_scenarios(cfg);
    const double T1 = cfg.schedule.update_times[1];
    const OracleOptions base = oracle_options(cfg);
    csv::Table tab({"check", "case", "value", "reference", "std_error", "pass"});
    std::size_t failures = 0;
    auto add = [&](const std::string& check, const std::string& label, double value, const Estimate& e) {
        const std::string v = csv::prob(value), r = csv::prob(e.value), se = csv::prob(e.std_error);
        const std::string flag = within_flag(v, r, se, kValidateSigmas);
        if (flag == "0") ++failures;
        tab.add({check, label, v, r, se, flag});
    };

    // Hitting probabilities on a fixed set of cases around the base scale.
    const ModelParams& m = cfg.model;
    const double gap = m.U0 - m.c_bar;
    const double mu = drifts_under(MeasureTag::P_STAR, m).mu_U;
    const struct {
        double gap, mu, dt;
    } hits[] = {{0.25 * gap, mu, 0.25}, {0.5 * gap, mu, 1.0}, {gap, mu, 1.0}, {0.5 * gap, -mu, 0.5}, {0.1 * gap, 0.0, 0.05}};
    for (std::size_t n = 0; n < std::size(hits); ++n) {
        OracleOptions o = base;
        o.seed = base.seed + n;
        const Estimate e = first_passage_oracle(m.c_bar + hits[n].gap, m.c_bar, hits[n].mu, m.sigma, hits[n].dt, o);
        add("hitting", fmt::format("gap={:.4f};mu={:.5f};dt={}", hits[n].gap, hits[n].mu, hits[n].dt),
            first_passage_cdf(m.c_bar + hits[n].gap, m.c_bar, hits[n].mu, m.sigma, hits[n].dt), e);
    }

    // Conditional survival along the first scenario.
    const auto obs = first_period(cfg, scenarios.front());
    const std::vector<double> cps{0.25 * T1, 0.5 * T1, 0.75 * T1};
    std::vector<double> at;
    for (double t : cps) at.push_back(obs[index_of(obs, std::round(t / cfg.schedule.observation_step) *
                                                         cfg.schedule.observation_step)]
                                          .time);
    for (std::size_t k = 0; k < cfg.rho_sweep.size(); ++k) {
        const ModelParams p = with_rho(cfg, cfg.rho_sweep[k]);
        FilterSession star(p, MeasureTag::P_STAR, grid_options(cfg));
        star.reset(p.U0, obs[0], T1);
        std::vector<double> analytic;
        std::size_t next = 0;
        for (std::size_t n = 0; n < obs.size() && next < at.size(); ++n) {
            if (n > 0) star.observe(obs[n]);
            if (std::abs(obs[n].time - at[next]) > kTimeTol) continue;
            analytic.push_back(conditional_survival(star.posterior(), MeasureTag::P_STAR, p, T1));
            ++next;
        }
        OracleOptions o = base;
        o.seed = base.seed + 100 + k;
        const auto est = survival_oracle_series(p, drifts_under(MeasureTag::P_STAR, p), obs, at, T1, o);
        for (std::size_t n = 0; n < at.size(); ++n)
            add("survival", fmt::format("rho={};t={:.3f}", rho_label(p.rho), at[n]), analytic[n], est[n]);
    }

    // Price at mid-period against the weighted Monte Carlo price.
    {
        const ModelParams p = with_rho(cfg, cfg.rho_sweep.front());
        const double t = at[1];
        FilterSession fwd(p, MeasureTag::P_T, grid_options(cfg)), share(p, MeasureTag::P_S, grid_options(cfg));
        fwd.reset(p.U0, obs[0], T1);
        share.reset(p.U0, obs[0], T1);
        for (std::size_t n = 1; n < obs.size() && obs[n].time <= t + kTimeTol; ++n) {
            fwd.observe(obs[n]);
            share.observe(obs[n]);
        }
        OracleOptions o = base;
        o.seed = base.seed + 200;
        const Estimate e = price_oracle(p, obs, t, o);
        const PriceQuote q = price(fwd.posterior(), share.posterior(), p, t);
        const std::string v = csv::real(q.pi), r = csv::real(e.value), se = csv::real(e.std_error);
        const std::string flag = within_flag(v, r, se, kValidateSigmas);
        if (flag == "0") ++failures;
        tab.add({"price", fmt::format("rho={};t={:.3f}", rho_label(p.rho), t), v, r, se, flag});
    }

    // Share-measure weighting of the P* survival indicator.
    {
        ModelParams p = with_rho(cfg, cfg.rho_sweep.front());
        p.T = T1;
        const auto bundle = simulate_bundle(p, drifts_under(MeasureTag::P_STAR, p), T1, base.n_paths, base.dt_fine,
                                            base.seed + 300);
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < bundle.n_paths; ++i) {
            const double path[] = {p.S0, std::exp(bundle.terminal_log_s[i])};
            const double w = bundle.crossed[i] ? 0.0 : rn_weight(MeasureTag::P_S, path, p);
            sum += w;
            sum_sq += w * w;
        }
        const double n = static_cast<double>(bundle.n_paths);
        Estimate e;
        e.value = sum / n;
        e.std_error = std::sqrt(std::max(0.0, sum_sq / n - e.value * e.value) / n);
        e.samples = bundle.n_paths;
        add("share_measure", fmt::format("rho={}", rho_label(p.rho)),
            survival_closed_form(p.U0, p.c_bar, drifts_under(MeasureTag::P_S, p).mu_U, p.sigma, T1), e);
    }

    emit(res, out / "validation.csv", tab.str());
    write_manifest(res, cfg, "validate", out);
    if (failures > 0) {
        res.exit_code = kInvariantViolation;
        res.messages.push_back(fmt::format("{} validation checks outside {} standard errors", failures, kValidateSigmas));
    }
    return res;
}

CommandResult run(const std::string& command, RunConfig cfg, const fs::path& out) {
    CommandResult res;
    try {
        if (command == "simulate") return cmd_simulate(std::move(cfg), out);
        if (command == "survive") return cmd_survive(std::move(cfg), out);
        if (command == "price") return cmd_price(std::move(cfg), out);
        if (command == "compensator") return cmd_compensator(std::move(cfg), out);
        if (command == "validate") return cmd_validate(std::move(cfg), out);
        res.exit_code = kConfigError;
        res.messages.push_back("unknown command " + command);
    } catch (const ConfigError& e) {
        res.exit_code = kConfigError;
        res.messages.push_back(e.what());
    } catch (const DomainError& e) {
        res.exit_code = kConfigError;
        res.messages.push_back(e.what());
    } catch (const PosteriorCollapse& e) {
        res.exit_code = kNumericFailure;
        res.messages.push_back(e.what());
    } catch (const OracleStarvation& e) {
        res.exit_code = kNumericFailure;
        res.messages.push_back(e.what());
    } catch (const ConversionTriggered& e) {
        res.exit_code = kNumericFailure;
        res.messages.push_back(e.what());
    } catch (const std::exception& e) {
        res.exit_code = kIoError;
        res.messages.push_back(e.what());
    }
    return res;
}

}  // namespace stucoco::app
