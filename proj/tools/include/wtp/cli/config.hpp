#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wtp/sim.hpp"

namespace wtp::cli {

enum class EmissionsSourceKind { kSynthetic, kMixCsv, kPhiCsv, kConstant };

struct EmissionsSettings {
  EmissionsSourceKind kind = EmissionsSourceKind::kSynthetic;
  std::uint64_t seed = 2024;
  double ghg_noise_fraction = 0.0;
  std::filesystem::path mix_csv;
  std::filesystem::path phi_csv;
  double constant_kg_per_kwh = 0.4;
};

// Everything a config file can say. The scenario's intensity series is left
// empty until materialize().
struct RunConfig {
  Scenario scenario;
  EmissionsSettings emissions;
  std::filesystem::path demand_csv;
  std::vector<std::string> notices;  // keys filled from defaults
};

RunConfig default_config();

// Grammar: `[section]` headers, `key = value` lines, `#` comments. Lists are
// comma separated. Relative paths resolve against `base_dir`. Throws
// ConfigError naming `origin:line` and the key path.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::string_view origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Complete config text; parsing it back yields an identical scenario.
std::string dump_config(const RunConfig& config);

// Seeds both the demand noise and the synthetic grid mix.
void apply_seed(RunConfig& config, std::uint64_t seed);

Scenario materialize(const RunConfig& config);

// Every accepted `section.key`, in dump order.
std::vector<std::string> config_keys();

}  // namespace wtp::cli
