#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "duallink/config.hpp"

namespace duallink {

// Each command writes its products under config.output_dir and returns the
// process exit status. Errors propagate as the exception types in errors.hpp.

/// <out>/ensemble_z<deg>_ra<m>.dat plus stats.csv, histogram_*.csv and steps_*.csv.
int cmd_simulate_channel(const RunConfig& config, unsigned threads, std::ostream& log);

/// Rates for every ensemble x squeezing level: key_rate.csv and key_rate_report.txt.
/// An empty ensemble list selects the files simulate-channel writes for the config.
int cmd_key_rate(const RunConfig& config, const std::vector<std::filesystem::path>& ensembles,
                 std::ostream& log);

/// Shot-level Monte Carlo against the closed forms; returns 3 when any
/// deviation exceeds the configured z threshold.
int cmd_protocol_verify(const RunConfig& config, bool sabotage, unsigned threads, std::ostream& log);

/// Per-realization SNR and BER of the classical layer.
int cmd_link_budget(const RunConfig& config, const std::vector<std::filesystem::path>& ensembles,
                    std::ostream& log);

std::filesystem::path ensemble_path(const RunConfig& config, double zenith_deg, double aperture_radius);

/// 1 config/usage, 2 numerical/physicality/data, 3 verification.
int exit_status_for(const std::exception& e);

}  // namespace duallink
