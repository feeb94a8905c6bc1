#include "wtp/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wtp/cli/config.hpp"
#include "wtp/errors.hpp"
#include "wtp/text.hpp"

namespace wtp::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("E_USAGE", what) {}
};

struct CommonOptions {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string dump_config_path;
  bool quiet = false;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("config", o.config, "Scenario config file")->required();
  cmd.add_option("--out", o.out_dir, "Output directory");
  cmd.add_option("--seed", o.seed, "Seed for demand noise and the synthetic grid mix");
  cmd.add_option("--threads", o.threads, "Threads for the MPC mesh search");
  cmd.add_option("--dump-effective-config", o.dump_config_path, "Write the fully resolved config here");
  cmd.add_flag("--quiet", o.quiet, "Suppress notices about defaulted keys");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

RunConfig prepare(const CommonOptions& o, std::ostream& err) {
  RunConfig config = load_config(o.config);
  if (o.seed) apply_seed(config, *o.seed);
  if (o.threads) config.scenario.mpc.threads = *o.threads;
  if (!o.quiet) {
    for (const auto& n : config.notices) err << "notice: " << n << '\n';
  }
  if (!o.dump_config_path.empty()) write_text(o.dump_config_path, dump_config(config));
  return config;
}

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw FormatError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

std::string summary_line(const Metrics& m) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << m.controller << ": emissions " << m.total_emissions_kg
    << " kg, energy " << m.total_energy_kwh << " kWh, y_D rms " << m.pressure_rms_error << " PSI, min chlorine "
    << m.chlorine_min << " mg/gal, violations " << m.violation_steps;
  return s.str();
}

int cmd_run(const CommonOptions& o, const std::string& controller, const std::string& trace_path,
            const std::string& metrics_path, std::ostream& out, std::ostream& err) {
  RunConfig config = prepare(o, err);
  if (!controller.empty()) config.scenario.controller = *parse_controller(controller);
  const auto dir = ensure_dir(o.out_dir);
  const std::string name(controller_name(config.scenario.controller));
  const auto trace = run(materialize(config));
  const auto m = metrics(trace);
  const auto trace_file = trace_path.empty() ? dir / ("trace_" + name + ".csv") : std::filesystem::path(trace_path);
  const auto metrics_file =
      metrics_path.empty() ? dir / ("metrics_" + name + ".json") : std::filesystem::path(metrics_path);
  write_trace_csv(trace_file, trace);
  write_text(metrics_file, metrics_json(m));
  out << summary_line(m) << '\n';
  out << "wrote " << trace_file.string() << " and " << metrics_file.string() << '\n';
  return kExitOk;
}

int cmd_compare(const CommonOptions& o, bool parallel, std::ostream& out, std::ostream& err) {
  const RunConfig config = prepare(o, err);
  const auto dir = ensure_dir(o.out_dir);
  Scenario base = materialize(config);
  Scenario reactive = base;
  reactive.controller = ControllerKind::kReactive;
  Scenario mpc = std::move(base);
  mpc.controller = ControllerKind::kMpc;

  SimulationTrace reactive_trace;
  SimulationTrace mpc_trace;
  if (parallel) {
    auto pending = std::async(std::launch::async, [&] { return run(reactive); });
    mpc_trace = run(mpc);
    reactive_trace = pending.get();
  } else {
    reactive_trace = run(reactive);
    mpc_trace = run(mpc);
  }
  const auto rm = metrics(reactive_trace);
  const auto mm = metrics(mpc_trace);
  const auto cmp = compare(rm, mm);
  write_trace_csv(dir / "trace_reactive.csv", reactive_trace);
  write_trace_csv(dir / "trace_mpc.csv", mpc_trace);
  write_text(dir / "metrics_reactive.json", metrics_json(rm));
  write_text(dir / "metrics_mpc.json", metrics_json(mm));
  write_text(dir / "comparison.json", comparison_json(cmp));
  const std::string report = comparison_text(cmp);
  write_text(dir / "comparison.txt", report);
  out << report;
  return kExitOk;
}

int cmd_fit(const std::string& mix_path, const std::string& phi_path, std::optional<std::size_t> hours,
            std::ostream& out) {
  const auto mix = load_mix_csv(mix_path);
  const auto fit = fit_emissions_coefficients(mix);
  out << "source,kg_per_mwh\n";
  for (std::size_t i = 0; i < kSourceCount; ++i) {
    out << source_name(static_cast<EnergySource>(i)) << ',' << text::format_double(fit.coefficients[i]) << '\n';
  }
  out << "residual_rms_kg," << text::format_double(fit.residual_rms) << '\n';
  if (!phi_path.empty()) {
    const std::size_t n = hours.value_or(mix.size());
    write_phi_csv(phi_path, intensity_series(fit.coefficients, mix, n));
  }
  return kExitOk;
}

int cmd_gen_mix(std::size_t hours, std::uint64_t seed, double noise, const std::string& path, std::ostream& out) {
  if (hours == 0) throw UsageError("--hours must be positive");
  const auto mix = synthetic_energy_mix(hours, seed, kSyntheticCoefficients, noise);
  if (path.empty()) {
    throw UsageError("--out is required");
  }
  write_mix_csv(path, mix);
  out << "wrote " << hours << " hourly records to " << path << '\n';
  return kExitOk;
}

int cmd_plotdata(const std::string& trace_path, const std::string& series, const std::string& out_path,
                 std::ostream& out) {
  const auto names = plot_series_names();
  if (std::find(names.begin(), names.end(), series) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown series '" + series + "' (valid: " + valid + ")");
  }
  const auto trace = read_trace_csv(trace_path);
  if (trace.records.empty()) throw SeriesError("trace '" + trace_path + "' has no records");

  std::string csv;
  auto row = [&](double t, double v, std::string_view label) {
    csv += text::format_double(t);
    csv += ',';
    csv += text::format_double(v);
    if (!label.empty()) {
      csv += ',';
      csv += label;
    }
    csv += '\n';
  };
  if (series == "yD") {
    csv = "time_min,yd_psi\n";
    for (const auto& r : trace.records) row(r.time_minutes, r.distribution_pressure, {});
  } else if (series == "chlorine") {
    csv = "time_min,chlorine_mg_per_gal\n";
    for (const auto& r : trace.records) row(r.time_minutes, r.chlorine, {});
  } else if (series == "emissions") {
    csv = "time_min,emissions_kg_per_h\n";
    for (const auto& r : trace.records) row(r.time_minutes, r.emissions_rate, {});
  } else if (series == "tanks") {
    csv = "time_min,psi,series\n";
    for (const auto& r : trace.records) {
      row(r.time_minutes, r.tank_pressure[0], "x1");
      row(r.time_minutes, r.tank_pressure[1], "x2");
    }
  } else {
    csv = "time_min,gpm,series\n";
    for (const auto& r : trace.records) {
      row(r.time_minutes, r.demand, "demand");
      row(r.time_minutes, r.source_flow, "source");
      row(r.time_minutes, r.treatment_flow, "treatment");
      row(r.time_minutes, r.tank_inflow[0], "tank1_inflow");
      row(r.time_minutes, r.tank_inflow[1], "tank2_inflow");
    }
  }
  if (out_path.empty()) out << csv;
  else write_text(out_path, csv);
  return kExitOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::vector<std::string> plot_series_names() { return {"yD", "tanks", "flows", "emissions", "chlorine"}; }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Water treatment plant simulator: MPC vs reactive pump scheduling", "wtpsim"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_controller;
  std::string run_trace;
  std::string run_metrics;
  auto* run_cmd = app.add_subcommand("run", "Simulate one controller and write its trace and metrics");
  add_common(*run_cmd, run_opts);
  run_cmd->add_option("--controller", run_controller, "mpc or reactive (overrides simulation.controller)")
      ->check(CLI::IsMember({"mpc", "reactive"}));
  run_cmd->add_option("--trace", run_trace, "Trace CSV path (default <out>/trace_<controller>.csv)");
  run_cmd->add_option("--metrics", run_metrics, "Metrics JSON path (default <out>/metrics_<controller>.json)");

  CommonOptions cmp_opts;
  bool parallel = false;
  auto* cmp_cmd = app.add_subcommand("compare", "Run both controllers on the same scenario and report deltas");
  add_common(*cmp_cmd, cmp_opts);
  cmp_cmd->add_flag("--parallel", parallel, "Run the two simulations concurrently");

  std::string mix_path;
  std::string phi_path;
  std::optional<std::size_t> phi_hours;
  auto* fit_cmd = app.add_subcommand("fit", "Fit per-source emissions coefficients to a grid-mix CSV");
  fit_cmd->add_option("mix", mix_path, "Grid-mix CSV")->required();
  fit_cmd->add_option("--emit-phi", phi_path, "Write the fitted hourly intensity series here");
  fit_cmd->add_option("--hours", phi_hours, "Length of the emitted series (default: one per record)");

  std::size_t gen_hours = 120;
  std::uint64_t gen_seed = 2024;
  double gen_noise = 0.0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-mix", "Write a seeded synthetic grid-mix CSV");
  gen_cmd->add_option("--hours", gen_hours, "Number of hourly records");
  gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  gen_cmd->add_option("--ghg-noise", gen_noise, "Relative Gaussian noise on the GHG column");
  gen_cmd->add_option("--out", gen_out, "Output CSV")->required();

  std::string plot_trace;
  std::string plot_series;
  std::string plot_out;
  auto* plot_cmd = app.add_subcommand("plotdata", "Export one series of a trace as narrow CSV");
  plot_cmd->add_option("trace", plot_trace, "Trace CSV written by run/compare")->required();
  plot_cmd->add_option("--series", plot_series, "yD, tanks, flows, emissions or chlorine")->required();
  plot_cmd->add_option("--out", plot_out, "Output CSV (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error[E_USAGE]: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, run_controller, run_trace, run_metrics, out, err);
    if (*cmp_cmd) return cmd_compare(cmp_opts, parallel, out, err);
    if (*fit_cmd) return cmd_fit(mix_path, phi_path, phi_hours, out);
    if (*gen_cmd) return cmd_gen_mix(gen_hours, gen_seed, gen_noise, gen_out, out);
    if (*plot_cmd) return cmd_plotdata(plot_trace, plot_series, plot_out, out);
  } catch (const UsageError& e) {
    err << "error[" << e.code() << "]: " << one_line(e.what()) << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error[" << e.code() << "]: " << one_line(e.what()) << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error[E_INTERNAL]: " << one_line(e.what()) << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace wtp::cli
