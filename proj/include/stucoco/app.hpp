#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stucoco/config.hpp"
#include "stucoco/model.hpp"

namespace stucoco::app {

enum ExitCode : int {
    kOk = 0,
    kIoError = 1,
    kConfigError = 2,
    kNumericFailure = 3,
    kInvariantViolation = 4,
};

struct CommandResult {
    int exit_code = kOk;
    std::vector<std::filesystem::path> files;
    std::vector<std::string> messages;
};

/// Stock scenarios on cfg.observation_times(), simulated under P* or read from
/// cfg.scenario_file.
std::vector<std::vector<ObservationRecord>> load_scenarios(const RunConfig& cfg);

CommandResult cmd_simulate(RunConfig cfg, const std::filesystem::path& out);
CommandResult cmd_survive(RunConfig cfg, const std::filesystem::path& out);
CommandResult cmd_price(RunConfig cfg, const std::filesystem::path& out);
CommandResult cmd_compensator(RunConfig cfg, const std::filesystem::path& out);
CommandResult cmd_validate(RunConfig cfg, const std::filesystem::path& out);

/// Dispatch by name; the result also covers errors mapped to exit codes.
CommandResult run(const std::string& command, RunConfig cfg, const std::filesystem::path& out);

std::string rho_label(double rho);

}  // namespace stucoco::app
