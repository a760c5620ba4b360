#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dems/experiments.hpp"

namespace dems {

/// Run configuration shared by all CLI subcommands. Missing keys take the
/// scenario defaults; list-valued keys left unset fall back to the
/// subcommand's own defaults.
struct RunConfig {
    std::string scenario = "paper_system";
    std::optional<LinearPlant> plant; // inline plant replaces the scenario's
    std::string input = "scenario";   // "scenario", "bump" or "zero"

    std::optional<double> s_real;
    std::optional<double> s_assumed;
    double log_prec_w = 6.0;
    double log_prec_z = 6.0;

    int p = 6;
    int d = 2;
    double k_x = 1.0;
    double s_init = 0.001;
    double s_min = 1e-4;
    double s_max = 1.0;
    double prior_eta = 0.001;
    double prior_precision = 1.0;

    double T = 32.0;
    double dt = 0.1;
    std::uint64_t seed = 1;
    std::optional<int> seeds;
    std::optional<std::vector<double>> s_values;
    std::optional<std::vector<int>> p_values;
    std::optional<std::vector<double>> assumed_s;
    std::optional<std::vector<std::string>> methods;
    int sa_order = 6;

    double s_grid_lo = 0.025;
    double s_grid_hi = 1.0;
    double s_grid_step = 0.025;
    std::vector<double> t_eval{5.0};
    std::size_t samples = 20000;

    bool operator==(const RunConfig&) const = default;

    /// Throws ValidationError naming the offending key.
    void validate() const;
};

/// Defaults for a named scenario (p, d, T, dt and precisions).
RunConfig default_config(const std::string& scenario);

/// Parses JSON text (comments allowed). Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every set field written out.
std::string config_to_json(const RunConfig& cfg);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

/// Returns cfg.s_real or throws a ValidationError naming `s_real`.
double require_s_real(const RunConfig& cfg);

/// Scenario with the inline plant and input choice applied.
Scenario resolve_scenario(const RunConfig& cfg);

StudySettings to_settings(const RunConfig& cfg);

} // namespace dems
