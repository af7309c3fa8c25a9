#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stucoco/model.hpp"

namespace stucoco {

struct ScheduleConfig {
    std::vector<double> update_times{0.0, 1.0};
    double observation_step = 0.005;
};

struct OracleConfig {
    std::size_t n_paths = 20000;
    double dt_fine = 5e-4;
    std::uint64_t seed = 20160215;
    double continuation_step = 0.005;
};

/// Everything a command needs. Serialises to the JSON config format; a
/// written manifest is itself a valid config.
struct RunConfig {
    ModelParams model = base_case_parameters();
    ScheduleConfig schedule;
    std::vector<double> rho_sweep{0.01, 0.25, 0.5, 0.75, 0.99};
    std::size_t scenario_count = 4;
    std::string scenario_file;  ///< CSV with columns scenario,t,S; overrides scenario_count
    OracleConfig oracle;
    std::size_t grid_points = 2048;
    double checkpoint_step = 0.05;
    bool validate = false;
    std::string output_dir = "out";
    std::string command;  ///< recorded in manifests, ignored on load

    UpdateSchedule make_schedule() const;
    /// Observation times of every period, boundaries listed once.
    std::vector<double> observation_times() const;
    /// 0, checkpoint_step, ... strictly before T_1.
    std::vector<double> checkpoints() const;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);
void check(const RunConfig& cfg);

}  // namespace stucoco
