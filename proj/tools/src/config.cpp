#include "wtp/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "wtp/errors.hpp"
#include "wtp/text.hpp"

namespace wtp::cli {

namespace {

// Thrown by setters; the parser adds location and key path.
struct BadValue {
  std::string message;
};

double to_double(std::string_view v) {
  auto d = text::parse_double(v);
  if (!d || !std::isfinite(*d)) throw BadValue{"expected a number, got '" + std::string(v) + "'"};
  return *d;
}

std::uint64_t to_uint(std::string_view v) {
  v = text::trim(v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
  }
  return out;
}

std::vector<double> to_list(std::string_view v, std::size_t n) {
  std::vector<double> out;
  for (auto field : text::split(v)) out.push_back(to_double(field));
  if (n != 0 && out.size() != n) {
    throw BadValue{"expected " + std::to_string(n) + " comma-separated numbers, got " + std::to_string(out.size())};
  }
  return out;
}

template <std::size_t N>
std::array<double, N> to_array(std::string_view v) {
  const auto list = to_list(v, N);
  std::array<double, N> out{};
  std::copy(list.begin(), list.end(), out.begin());
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view v) {
  if (v.empty()) return {};
  return std::filesystem::absolute(base / std::filesystem::path(v)).lexically_normal();
}

std::string num(double v) { return text::format_double(v); }

template <typename Range>
std::string join(const Range& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ", ";
    out += num(v);
  }
  return out;
}

struct Key {
  std::string_view section;
  std::string_view name;
  std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define WTP_NUMBER(SECTION, NAME, FIELD)                                                    \
  Key {                                                                                     \
    SECTION, NAME, [](RunConfig& c, std::string_view v, const auto&) { c.FIELD = to_double(v); }, \
        [](const RunConfig& c) { return num(c.FIELD); }                                     \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    // plant
    k.push_back(WTP_NUMBER("plant", "source_pressure_psi", scenario.plant.source_pressure));
    k.push_back(WTP_NUMBER("plant", "treatment_resistance_psi_per_gpm", scenario.plant.treatment_resistance));
    k.push_back(WTP_NUMBER("plant", "distribution_resistance_psi_per_gpm", scenario.plant.distribution_resistance));
    k.push_back({"plant", "tank_capacitance_psi_per_gal",
                 [](RunConfig& c, std::string_view v, const auto&) { c.scenario.plant.tank_capacitance = to_array<2>(v); },
                 [](const RunConfig& c) { return join(c.scenario.plant.tank_capacitance); }});
    k.push_back({"plant", "valve_max_gpm_per_psi",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   c.scenario.plant.valve_max_conductance = to_array<2>(v);
                 },
                 [](const RunConfig& c) { return join(c.scenario.plant.valve_max_conductance); }});
    // quality
    k.push_back(WTP_NUMBER("quality", "decay_per_day", scenario.quality.decay_per_day));
    k.push_back(WTP_NUMBER("quality", "dose_mg_per_gal", scenario.quality.dose));
    k.push_back(WTP_NUMBER("quality", "minimum_mg_per_gal", scenario.quality.minimum));
    k.push_back(WTP_NUMBER("quality", "detention_min", scenario.quality.detention_minutes));
    k.push_back({"quality", "mode",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   if (v == "well_mixed") c.scenario.quality.mode = ChlorineMode::kWellMixed;
                   else if (v == "literal") c.scenario.quality.mode = ChlorineMode::kPaperLiteral;
                   else throw BadValue{"expected well_mixed or literal, got '" + std::string(v) + "'"};
                 },
                 [](const RunConfig& c) {
                   return std::string(c.scenario.quality.mode == ChlorineMode::kWellMixed ? "well_mixed" : "literal");
                 }});
    k.push_back({"quality", "tank",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   const auto t = to_uint(v);
                   if (t != 1 && t != 2) throw BadValue{"expected 1 or 2"};
                   c.scenario.quality.tank = static_cast<std::size_t>(t - 1);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.quality.tank + 1); }});
    // demand
    k.push_back(WTP_NUMBER("demand", "mean_gpm", scenario.demand.mean_gpm));
    k.push_back(WTP_NUMBER("demand", "amplitude", scenario.demand.amplitude));
    k.push_back(WTP_NUMBER("demand", "peak_minute", scenario.demand.peak_minute));
    k.push_back(WTP_NUMBER("demand", "noise_fraction", scenario.demand.noise_fraction));
    k.push_back({"demand", "seed", [](RunConfig& c, std::string_view v, const auto&) { c.scenario.demand.seed = to_uint(v); },
                 [](const RunConfig& c) { return std::to_string(c.scenario.demand.seed); }});
    k.push_back({"demand", "table_csv",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
                   c.demand_csv = resolve(base, v);
                 },
                 [](const RunConfig& c) { return c.demand_csv.string(); }});
    // emissions
    k.push_back({"emissions", "source",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   if (v == "synthetic") c.emissions.kind = EmissionsSourceKind::kSynthetic;
                   else if (v == "mix_csv") c.emissions.kind = EmissionsSourceKind::kMixCsv;
                   else if (v == "phi_csv") c.emissions.kind = EmissionsSourceKind::kPhiCsv;
                   else if (v == "constant") c.emissions.kind = EmissionsSourceKind::kConstant;
                   else throw BadValue{"expected synthetic, mix_csv, phi_csv or constant, got '" + std::string(v) + "'"};
                 },
                 [](const RunConfig& c) {
                   switch (c.emissions.kind) {
                     case EmissionsSourceKind::kSynthetic: return std::string("synthetic");
                     case EmissionsSourceKind::kMixCsv: return std::string("mix_csv");
                     case EmissionsSourceKind::kPhiCsv: return std::string("phi_csv");
                     case EmissionsSourceKind::kConstant: break;
                   }
                   return std::string("constant");
                 }});
    k.push_back({"emissions", "seed", [](RunConfig& c, std::string_view v, const auto&) { c.emissions.seed = to_uint(v); },
                 [](const RunConfig& c) { return std::to_string(c.emissions.seed); }});
    k.push_back(WTP_NUMBER("emissions", "ghg_noise_fraction", emissions.ghg_noise_fraction));
    k.push_back({"emissions", "mix_csv",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
                   c.emissions.mix_csv = resolve(base, v);
                 },
                 [](const RunConfig& c) { return c.emissions.mix_csv.string(); }});
    k.push_back({"emissions", "phi_csv",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
                   c.emissions.phi_csv = resolve(base, v);
                 },
                 [](const RunConfig& c) { return c.emissions.phi_csv.string(); }});
    k.push_back(WTP_NUMBER("emissions", "constant_kg_per_kwh", emissions.constant_kg_per_kwh));
    // controller.mpc
    k.push_back(WTP_NUMBER("controller.mpc", "lambda_c", scenario.mpc.weights.chlorine));
    k.push_back(WTP_NUMBER("controller.mpc", "lambda_d", scenario.mpc.weights.pressure));
    k.push_back(WTP_NUMBER("controller.mpc", "lambda_e", scenario.mpc.weights.emissions));
    k.push_back(WTP_NUMBER("controller.mpc", "pressure_setpoint_psi", scenario.mpc.pressure_setpoint));
    k.push_back(WTP_NUMBER("controller.mpc", "chlorine_setpoint_mg_per_gal", scenario.mpc.chlorine_setpoint));
    k.push_back({"controller.mpc", "horizon_steps",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   const auto h = to_uint(v);
                   if (h > 1000) throw BadValue{"horizon too long"};
                   c.scenario.mpc.horizon = static_cast<int>(h);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.mpc.horizon); }});
    k.push_back({"controller.mpc", "mesh_resolution",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   const auto fields = text::split(v);
                   if (fields.size() != 1 && fields.size() != kControlCount) {
                     throw BadValue{"expected one value or " + std::to_string(kControlCount)};
                   }
                   for (std::size_t i = 0; i < kControlCount; ++i) {
                     const auto r = to_uint(fields[fields.size() == 1 ? 0 : i]);
                     if (r > 1000) throw BadValue{"resolution too large"};
                     c.scenario.mpc.resolution[i] = static_cast<int>(r);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (int r : c.scenario.mpc.resolution) out += (out.empty() ? "" : ", ") + std::to_string(r);
                   return out;
                 }});
    k.push_back({"controller.mpc", "lower",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   c.scenario.mpc.bounds.lower.values = to_array<kControlCount>(v);
                 },
                 [](const RunConfig& c) { return join(c.scenario.mpc.bounds.lower.values); }});
    k.push_back({"controller.mpc", "upper",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   c.scenario.mpc.bounds.upper.values = to_array<kControlCount>(v);
                 },
                 [](const RunConfig& c) { return join(c.scenario.mpc.bounds.upper.values); }});
    k.push_back(WTP_NUMBER("controller.mpc", "tank_min_psi", scenario.mpc.tank_min));
    k.push_back(WTP_NUMBER("controller.mpc", "tank_max_psi", scenario.mpc.tank_max));
    k.push_back(WTP_NUMBER("controller.mpc", "pipe_min_psi", scenario.mpc.pipe_min));
    k.push_back(WTP_NUMBER("controller.mpc", "pipe_max_psi", scenario.mpc.pipe_max));
    k.push_back(WTP_NUMBER("controller.mpc", "lowpass_alpha", scenario.mpc.lowpass_alpha));
    k.push_back({"controller.mpc", "threads",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   const auto t = to_uint(v);
                   if (t > 1024) throw BadValue{"too many threads"};
                   c.scenario.mpc.threads = static_cast<unsigned>(t);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.mpc.threads); }});
    // controller.reactive
    k.push_back({"controller.reactive", "low_psi",
                 [](RunConfig& c, std::string_view v, const auto&) { c.scenario.reactive.low_threshold = to_list(v, 0); },
                 [](const RunConfig& c) { return join(c.scenario.reactive.low_threshold); }});
    k.push_back({"controller.reactive", "high_psi",
                 [](RunConfig& c, std::string_view v, const auto&) { c.scenario.reactive.high_threshold = to_list(v, 0); },
                 [](const RunConfig& c) { return join(c.scenario.reactive.high_threshold); }});
    k.push_back({"controller.reactive", "fill_gpm",
                 [](RunConfig& c, std::string_view v, const auto&) { c.scenario.reactive.fill_flow = to_list(v, 0); },
                 [](const RunConfig& c) { return join(c.scenario.reactive.fill_flow); }});
    k.push_back({"controller.reactive", "valve_open_gpm_per_psi",
                 [](RunConfig& c, std::string_view v, const auto&) { c.scenario.reactive.valve_open = to_list(v, 0); },
                 [](const RunConfig& c) { return join(c.scenario.reactive.valve_open); }});
    k.push_back(WTP_NUMBER("controller.reactive", "kp", scenario.reactive.kp));
    k.push_back(WTP_NUMBER("controller.reactive", "ki", scenario.reactive.ki));
    k.push_back(WTP_NUMBER("controller.reactive", "bias_psi", scenario.reactive.bias));
    k.push_back(WTP_NUMBER("controller.reactive", "pressure_setpoint_psi", scenario.reactive.pressure_setpoint));
    k.push_back(WTP_NUMBER("controller.reactive", "booster_min_psi", scenario.reactive.booster_min));
    k.push_back(WTP_NUMBER("controller.reactive", "booster_max_psi", scenario.reactive.booster_max));
    // simulation
    k.push_back({"simulation", "controller",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   auto kind = parse_controller(v);
                   if (!kind) throw BadValue{"expected mpc or reactive, got '" + std::string(v) + "'"};
                   c.scenario.controller = *kind;
                 },
                 [](const RunConfig& c) { return std::string(controller_name(c.scenario.controller)); }});
    k.push_back(WTP_NUMBER("simulation", "dt_min", scenario.dt_minutes));
    k.push_back(WTP_NUMBER("simulation", "duration_h", scenario.duration_hours));
    k.push_back({"simulation", "initial_tank_psi",
                 [](RunConfig& c, std::string_view v, const auto&) { c.scenario.initial_tank_pressures = to_list(v, 2); },
                 [](const RunConfig& c) { return join(c.scenario.initial_tank_pressures); }});
    k.push_back(WTP_NUMBER("simulation", "initial_chlorine_mg_per_gal", scenario.initial_chlorine));
    k.push_back({"simulation", "initial_control",
                 [](RunConfig& c, std::string_view v, const auto&) {
                   c.scenario.initial_control.values = to_array<kControlCount>(v);
                 },
                 [](const RunConfig& c) { return join(c.scenario.initial_control.values); }});
    k.push_back(WTP_NUMBER("simulation", "warmup_h", scenario.warmup_hours));
    return k;
  }();
  return table;
}

#undef WTP_NUMBER

std::string key_path(const Key& k) { return std::string(k.section) + "." + std::string(k.name); }

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.scenario = default_scenario();
  c.scenario.intensity = {};
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(key_path(k));
  return out;
}

RunConfig parse_config(std::string_view text_in, const std::filesystem::path& base_dir, std::string_view origin) {
  RunConfig config = default_config();
  std::map<std::string, const Key*, std::less<>> index;
  std::map<std::string, bool, std::less<>> sections;
  for (const auto& k : keys()) {
    index[key_path(k)] = &k;
    sections[std::string(k.section)] = true;
  }
  std::map<std::string, std::size_t, std::less<>> seen;

  auto fail = [&](std::size_t line, const std::string& msg) {
    throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ": " + msg);
  };

  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text_in)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (!sections.contains(section)) fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    if (section.empty()) fail(line_no, "key outside of any section");
    const std::string path = section + "." + std::string(text::trim(line.substr(0, eq)));
    const auto it = index.find(path);
    if (it == index.end()) fail(line_no, path + ": unknown key");
    if (auto prev = seen.find(path); prev != seen.end()) {
      fail(line_no, path + ": duplicate key (first set on line " + std::to_string(prev->second) + ")");
    }
    seen[path] = line_no;
    try {
      it->second->set(config, text::trim(line.substr(eq + 1)), base_dir);
    } catch (const BadValue& e) {
      fail(line_no, path + ": " + e.message);
    }
  }
  for (const auto& k : keys()) {
    const auto path = key_path(k);
    if (!seen.contains(path)) config.notices.push_back(path + " defaulted to '" + k.get(config) + "'");
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), path.string());
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  std::string_view section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(config) + "\n";
  }
  return out;
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.scenario.demand.seed = seed;
  config.emissions.seed = seed;
}

Scenario materialize(const RunConfig& config) {
  Scenario s = config.scenario;
  if (!config.demand_csv.empty()) s.demand.table = load_demand_csv(config.demand_csv);
  const auto hours = static_cast<std::size_t>(std::ceil(s.duration_hours));
  const auto& e = config.emissions;
  switch (e.kind) {
    case EmissionsSourceKind::kSynthetic: {
      const auto mix =
          synthetic_energy_mix(std::max<std::size_t>(hours, 24), e.seed, kSyntheticCoefficients, e.ghg_noise_fraction);
      s.intensity = intensity_series(fit_emissions_coefficients(mix).coefficients, mix, hours);
      break;
    }
    case EmissionsSourceKind::kMixCsv: {
      if (e.mix_csv.empty()) throw ConfigError("emissions.mix_csv: required when emissions.source = mix_csv");
      const auto mix = load_mix_csv(e.mix_csv);
      s.intensity = intensity_series(fit_emissions_coefficients(mix).coefficients, mix, mix.size());
      break;
    }
    case EmissionsSourceKind::kPhiCsv:
      if (e.phi_csv.empty()) throw ConfigError("emissions.phi_csv: required when emissions.source = phi_csv");
      s.intensity = load_phi_csv(e.phi_csv);
      break;
    case EmissionsSourceKind::kConstant:
      if (!(e.constant_kg_per_kwh >= 0.0)) throw ConfigError("emissions.constant_kg_per_kwh: must be >= 0");
      s.intensity = constant_intensity(e.constant_kg_per_kwh, hours);
      break;
  }
  return s;
}

}  // namespace wtp::cli
