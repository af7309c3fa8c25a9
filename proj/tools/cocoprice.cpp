#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "stucoco/app.hpp"
#include "stucoco/config.hpp"
#include "stucoco/errors.hpp"

namespace {

std::vector<double> parse_rho_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw stucoco::ConfigError("--rho: cannot parse '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw stucoco::ConfigError("--rho: empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"CoCo pricing under short-term uncertainty"};
    cli.require_subcommand(1);

    std::string config_path, out_dir, rho_text;
    std::optional<std::uint64_t> seed;
    bool validate = false;

    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "stock scenarios and conditional U paths"},
        {"survive", "conditional survival and conversion probabilities"},
        {"price", "CoCo price with bond and equity legs"},
        {"compensator", "F = M + A decomposition over several update periods"},
        {"validate", "analytic results against Monte Carlo"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = cli.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--out", out_dir, "output directory (default: output_dir from the config)");
        sub->add_option("--seed", seed, "oracle and scenario seed");
        sub->add_option("--rho", rho_text, "comma-separated correlations, replaces rho_sweep");
        sub->add_flag("--validate", validate, "add Monte Carlo oracle columns");
    }
    CLI11_PARSE(cli, argc, argv);
    const std::string command = cli.get_subcommands().front()->get_name();

    stucoco::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = stucoco::load_config(config_path);
        if (seed) cfg.oracle.seed = *seed;
        if (!rho_text.empty()) cfg.rho_sweep = parse_rho_list(rho_text);
        if (validate) cfg.validate = true;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        stucoco::check(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return stucoco::app::kConfigError;
    }

    const auto res = stucoco::app::run(command, cfg, cfg.output_dir);
    for (const auto& f : res.files) std::cout << f.string() << "\n";
    for (const auto& m : res.messages) std::cerr << (res.exit_code == 0 ? "" : "error: ") << m << "\n";
    return res.exit_code;
}
