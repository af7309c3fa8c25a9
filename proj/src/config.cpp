#include "stucoco/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "stucoco/errors.hpp"

namespace stucoco {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(fmt::format("config: '{}' must be an object", where));
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(fmt::format("config: unknown key '{}{}'", where.empty() ? "" : where + ".", key));
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: bad value for '{}{}': {}", where.empty() ? "" : where + ".", key, e.what()));
    }
}

constexpr bool near(double a, double b) { return (a > b ? a - b : b - a) <= 1e-12; }

}  // namespace

UpdateSchedule RunConfig::make_schedule() const {
    return UpdateSchedule::uniform(schedule.update_times, schedule.observation_step);
}

std::vector<double> RunConfig::observation_times() const {
    const auto s = make_schedule();
    std::vector<double> out;
    for (std::size_t j = 0; j < s.periods(); ++j) {
        const auto& obs = s.observation_times(j);
        for (std::size_t i = (j == 0 ? 0 : 1); i < obs.size(); ++i) out.push_back(obs[i]);
    }
    return out;
}

std::vector<double> RunConfig::checkpoints() const {
    std::vector<double> out;
    const double end = schedule.update_times.at(1);
    const auto n = static_cast<long>(std::ceil(end / checkpoint_step - 1e-9));
    for (long i = 0; i < n; ++i) out.push_back(static_cast<double>(i) * checkpoint_step);
    return out;
}

void check(const RunConfig& cfg) {
    try {
        validate(cfg.model);
        cfg.make_schedule();
    } catch (const DomainError& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    if (cfg.schedule.update_times.size() < 2) throw ConfigError("config: need at least two update times");
    if (!near(cfg.model.T, cfg.schedule.update_times[1]))
        throw ConfigError("config: model.T must equal the first update time T_1");
    if (cfg.rho_sweep.empty()) throw ConfigError("config: rho_sweep is empty");
    for (double r : cfg.rho_sweep)
        if (!(std::abs(r) < 1.0)) throw ConfigError(fmt::format("config: rho {} outside (-1, 1)", r));
    if (cfg.scenario_file.empty() && cfg.scenario_count == 0) throw ConfigError("config: no scenarios");
    if (cfg.oracle.n_paths == 0 || !(cfg.oracle.dt_fine > 0.0) || cfg.oracle.continuation_step < 0.0)
        throw ConfigError("config: invalid oracle settings");
    if (cfg.grid_points < 16) throw ConfigError("config: filter.grid_points must be >= 16");
    if (!(cfg.checkpoint_step > 0.0)) throw ConfigError("config: checkpoint_step must be > 0");
    // Checkpoints must coincide with observation times.
    const double ratio = cfg.checkpoint_step / cfg.schedule.observation_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError("config: checkpoint_step must be a multiple of schedule.observation_step");
}

RunConfig parse_config(const json& j) {
    RunConfig cfg;
    reject_unknown(j, {"model", "schedule", "rho_sweep", "scenarios", "oracle", "filter", "checkpoint_step",
                       "validate", "output_dir", "command"},
                   "");
    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, {"r", "sigma", "rho", "a", "kappa", "L", "N", "Cr", "c_bar", "c_under", "T", "S0", "U0"}, "model");
        auto& p = cfg.model;
        read(m, "r", p.r, "model");
        read(m, "sigma", p.sigma, "model");
        read(m, "rho", p.rho, "model");
        read(m, "a", p.a, "model");
        read(m, "kappa", p.kappa, "model");
        read(m, "L", p.L, "model");
        read(m, "N", p.N, "model");
        read(m, "Cr", p.Cr, "model");
        read(m, "c_bar", p.c_bar, "model");
        read(m, "c_under", p.c_under, "model");
        read(m, "T", p.T, "model");
        read(m, "S0", p.S0, "model");
        read(m, "U0", p.U0, "model");
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        reject_unknown(s, {"update_times", "observation_step"}, "schedule");
        read(s, "update_times", cfg.schedule.update_times, "schedule");
        read(s, "observation_step", cfg.schedule.observation_step, "schedule");
    }
    read(j, "rho_sweep", cfg.rho_sweep, "");
    if (j.contains("scenarios")) {
        const auto& s = j.at("scenarios");
        if (s.is_number_unsigned())
            cfg.scenario_count = s.get<std::size_t>();
        else if (s.is_string())
            cfg.scenario_file = s.get<std::string>();
        else
            throw ConfigError("config: 'scenarios' must be a count or a CSV path");
    }
    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        reject_unknown(o, {"n_paths", "dt_fine", "seed", "continuation_step"}, "oracle");
        read(o, "n_paths", cfg.oracle.n_paths, "oracle");
        read(o, "dt_fine", cfg.oracle.dt_fine, "oracle");
        read(o, "seed", cfg.oracle.seed, "oracle");
        read(o, "continuation_step", cfg.oracle.continuation_step, "oracle");
    }
    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        reject_unknown(f, {"grid_points"}, "filter");
        read(f, "grid_points", cfg.grid_points, "filter");
    }
    read(j, "checkpoint_step", cfg.checkpoint_step, "");
    read(j, "validate", cfg.validate, "");
    read(j, "output_dir", cfg.output_dir, "");
    read(j, "command", cfg.command, "");
    check(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config: cannot open {}", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {}: {}", path.string(), e.what()));
    }
    return parse_config(j);
}

json to_json(const RunConfig& cfg) {
    const auto& p = cfg.model;
    json j;
    j["model"] = {{"r", p.r},         {"sigma", p.sigma}, {"rho", p.rho},   {"a", p.a},         {"kappa", p.kappa},
                  {"L", p.L},         {"N", p.N},         {"Cr", p.Cr},     {"c_bar", p.c_bar}, {"c_under", p.c_under},
                  {"T", p.T},         {"S0", p.S0},       {"U0", p.U0}};
    j["schedule"] = {{"update_times", cfg.schedule.update_times}, {"observation_step", cfg.schedule.observation_step}};
    j["rho_sweep"] = cfg.rho_sweep;
    if (cfg.scenario_file.empty())
        j["scenarios"] = cfg.scenario_count;
    else
        j["scenarios"] = cfg.scenario_file;
    j["oracle"] = {{"n_paths", cfg.oracle.n_paths},
                   {"dt_fine", cfg.oracle.dt_fine},
                   {"seed", cfg.oracle.seed},
                   {"continuation_step", cfg.oracle.continuation_step}};
    j["filter"] = {{"grid_points", cfg.grid_points}};
    j["checkpoint_step"] = cfg.checkpoint_step;
    j["validate"] = cfg.validate;
    j["output_dir"] = cfg.output_dir;
    if (!cfg.command.empty()) j["command"] = cfg.command;
    return j;
}

}  // namespace stucoco
