#include "wtp/exogenous.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "wtp/errors.hpp"
#include "wtp/text.hpp"
#include "wtp/units.hpp"

namespace wtp {

namespace {

constexpr double kNoiseBucketMinutes = 15.0;
constexpr std::string_view kMixHeader = "hour,wind_mwh,solar_mwh,hydro_mwh,gas_mwh,coal_mwh,nuclear_mwh,ghg_kg";
constexpr std::string_view kPhiHeader = "hour,phi_kg_per_kwh";
constexpr std::string_view kDemandHeader = "minute,gpm";

double bucket_noise(std::uint64_t seed, std::int64_t bucket) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(bucket), static_cast<std::uint32_t>(static_cast<std::uint64_t>(bucket) >> 32)};
  std::mt19937_64 rng(seq);
  return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  return out;
}

// Reads a headed numeric CSV, calling `row(fields, line_no)` for each data row.
template <class RowFn>
void read_numeric_csv(const std::filesystem::path& path, std::string_view header, std::size_t columns,
                      RowFn row) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file", 1);
  ++line_no;
  if (text::trim(line) != header) {
    throw ParseError(path.string() + ":1: expected header '" + std::string(header) + "'", 1);
  }
  std::vector<double> values(columns);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    if (fields.size() != columns) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(columns) + " fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t i = 0; i < columns; ++i) {
      auto v = text::parse_double(fields[i]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                             std::string(fields[i]) + "'",
                         line_no);
      }
      values[i] = *v;
    }
    row(values, line_no);
    ++rows;
  }
  if (rows == 0) throw ParseError(path.string() + ": no data rows", line_no);
}

}  // namespace

double demand_at(const DemandProfile& profile, double minutes) {
  if (!(minutes >= 0.0)) throw std::invalid_argument("demand time must be >= 0");
  if (!profile.table.empty()) {
    const auto& t = profile.table;
    if (minutes < t.front().first || minutes > t.back().first) {
      throw RangeError("demand table does not cover minute " + text::format_double(minutes));
    }
    auto it = std::upper_bound(t.begin(), t.end(), minutes,
                               [](double m, const auto& entry) { return m < entry.first; });
    if (it == t.end()) return std::max(0.0, t.back().second);
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (minutes - lo.first) / (hi.first - lo.first);
    return std::max(0.0, lo.second + w * (hi.second - lo.second));
  }
  const double phase = 2.0 * std::numbers::pi * (minutes - profile.peak_minute) / units::kMinutesPerDay;
  double flow = profile.mean_gpm * (1.0 + profile.amplitude * std::cos(phase));
  if (profile.noise_fraction > 0.0) {
    const auto bucket = static_cast<std::int64_t>(std::floor(minutes / kNoiseBucketMinutes));
    flow += profile.noise_fraction * profile.mean_gpm * bucket_noise(profile.seed, bucket);
  }
  return std::max(0.0, flow);
}

std::vector<std::pair<double, double>> load_demand_csv(const std::filesystem::path& path) {
  std::vector<std::pair<double, double>> table;
  read_numeric_csv(path, kDemandHeader, 2, [&](const std::vector<double>& v, std::size_t line) {
    if (!table.empty() && !(v[0] > table.back().first)) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": minutes must increase");
    }
    if (v[1] < 0.0) throw FormatError(path.string() + ":" + std::to_string(line) + ": negative demand");
    table.emplace_back(v[0], v[1]);
  });
  return table;
}

std::string_view source_name(EnergySource source) {
  switch (source) {
    case EnergySource::kWind: return "wind";
    case EnergySource::kSolar: return "solar";
    case EnergySource::kHydro: return "hydro";
    case EnergySource::kGas: return "gas";
    case EnergySource::kCoal: return "coal";
    case EnergySource::kNuclear: return "nuclear";
  }
  return "unknown";
}

EmissionsFit fit_emissions_coefficients(const std::vector<EnergyMixRecord>& records) {
  if (records.size() < kSourceCount) {
    throw FitError("need at least " + std::to_string(kSourceCount) + " records, got " +
                   std::to_string(records.size()));
  }
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(kSourceCount));
  Eigen::VectorXd ghg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < kSourceCount; ++s) design(i, static_cast<Eigen::Index>(s)) = r.production[s];
    ghg(i) = r.ghg_kg;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(kSourceCount)) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < perm.size(); ++k) {
      if (!names.empty()) names += ", ";
      names += source_name(static_cast<EnergySource>(perm(k)));
    }
    throw FitError("rank-deficient design (rank " + std::to_string(qr.rank()) +
                   "): collinear or indeterminate sources: " + names);
  }
  const Eigen::VectorXd beta = qr.solve(ghg);
  const Eigen::VectorXd residual = ghg - design * beta;

  EmissionsFit fit;
  for (std::size_t s = 0; s < kSourceCount; ++s) fit.coefficients[s] = beta(static_cast<Eigen::Index>(s));
  fit.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return fit;
}

EmissionsIntensitySeries::EmissionsIntensitySeries(std::vector<double> hourly) : hourly_(std::move(hourly)) {
  if (hourly_.empty()) throw SeriesError("emissions intensity series is empty");
  for (double v : hourly_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw SeriesError("emissions intensity must be finite and >= 0");
  }
}

double EmissionsIntensitySeries::at(double minutes) const {
  if (hourly_.empty()) throw SeriesError("emissions intensity series is empty");
  const double h = minutes / units::kMinutesPerHour;
  if (h <= 0.0) return hourly_.front();
  const auto last = static_cast<double>(hourly_.size() - 1);
  if (h >= last) return hourly_.back();
  const auto i = static_cast<std::size_t>(std::floor(h));
  const double w = h - static_cast<double>(i);
  return hourly_[i] + w * (hourly_[i + 1] - hourly_[i]);
}

EmissionsIntensitySeries intensity_series(const SourceArray& coefficients,
                                          const std::vector<EnergyMixRecord>& mix, std::size_t hours) {
  if (mix.size() < hours) {
    throw SeriesError("energy mix covers " + std::to_string(mix.size()) + " hours, need " + std::to_string(hours));
  }
  std::vector<double> phi(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    double total = 0.0;
    double emitted = 0.0;
    for (std::size_t s = 0; s < kSourceCount; ++s) {
      total += mix[h].production[s];
      emitted += coefficients[s] * mix[h].production[s];
    }
    if (!(total > 0.0)) throw SeriesError("zero total production at hour " + std::to_string(h));
    phi[h] = std::max(0.0, emitted / total / units::kKwhPerMwh);
  }
  return EmissionsIntensitySeries(std::move(phi));
}

EmissionsIntensitySeries constant_intensity(double kg_per_kwh, std::size_t hours) {
  return EmissionsIntensitySeries(std::vector<double>(std::max<std::size_t>(hours, 1), kg_per_kwh));
}

std::vector<EnergyMixRecord> load_mix_csv(const std::filesystem::path& path) {
  std::vector<EnergyMixRecord> records;
  read_numeric_csv(path, kMixHeader, 2 + kSourceCount, [&](const std::vector<double>& v, std::size_t line) {
    EnergyMixRecord r;
    r.hour = v[0];
    for (std::size_t s = 0; s < kSourceCount; ++s) {
      r.production[s] = v[1 + s];
      if (r.production[s] < 0.0) {
        throw FormatError(path.string() + ":" + std::to_string(line) + ": negative " +
                          std::string(source_name(static_cast<EnergySource>(s))) + " production");
      }
    }
    r.ghg_kg = v[1 + kSourceCount];
    if (!records.empty() && !(r.hour > records.back().hour)) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": timestamps must be increasing");
    }
    records.push_back(r);
  });
  return records;
}

void write_mix_csv(const std::filesystem::path& path, const std::vector<EnergyMixRecord>& records) {
  auto out = open_for_write(path);
  out << kMixHeader << '\n';
  for (const auto& r : records) {
    out << text::format_double(r.hour);
    for (double p : r.production) out << ',' << text::format_double(p);
    out << ',' << text::format_double(r.ghg_kg) << '\n';
  }
}

EmissionsIntensitySeries load_phi_csv(const std::filesystem::path& path) {
  std::vector<double> phi;
  read_numeric_csv(path, kPhiHeader, 2, [&](const std::vector<double>& v, std::size_t line) {
    if (v[0] != static_cast<double>(phi.size())) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": hours must be 0, 1, 2, ...");
    }
    if (v[1] < 0.0) throw FormatError(path.string() + ":" + std::to_string(line) + ": negative intensity");
    phi.push_back(v[1]);
  });
  return EmissionsIntensitySeries(std::move(phi));
}

void write_phi_csv(const std::filesystem::path& path, const EmissionsIntensitySeries& series) {
  auto out = open_for_write(path);
  out << kPhiHeader << '\n';
  for (std::size_t h = 0; h < series.hours(); ++h) {
    out << h << ',' << text::format_double(series.hourly()[h]) << '\n';
  }
}

std::vector<EnergyMixRecord> synthetic_energy_mix(std::size_t hours, std::uint64_t seed,
                                                  const SourceArray& coefficients,
                                                  double ghg_noise_fraction) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<EnergyMixRecord> out(hours);
  for (std::size_t i = 0; i < hours; ++i) {
    const double t = static_cast<double>(i);
    const double hod = std::fmod(t, 24.0);
    const double load = 1000.0 * (1.0 + 0.25 * std::cos(kTwoPi * (hod - 18.0) / 24.0));
    const double daylight = std::max(0.0, std::cos(kTwoPi * (hod - 12.0) / 24.0));
    const double solar = 300.0 * daylight * daylight * (1.0 + 0.1 * jitter(rng));
    const double wind = (150.0 + 80.0 * std::sin(kTwoPi * t / 37.0)) * (1.0 + 0.05 * jitter(rng));
    const double hydro = (80.0 + 20.0 * std::sin(kTwoPi * t / 53.0)) * (1.0 + 0.05 * jitter(rng));
    const double nuclear = 250.0 * (1.0 + 0.02 * jitter(rng));
    const double rest = std::max(0.0, load - solar - wind - hydro - nuclear);
    const double coal_share = 0.5 + 0.15 * std::sin(kTwoPi * t / 29.0) + 0.05 * jitter(rng);

    EnergyMixRecord& r = out[i];
    r.hour = t;
    r.production = {wind, solar, hydro, rest * (1.0 - coal_share), rest * coal_share, nuclear};
    double ghg = 0.0;
    for (std::size_t s = 0; s < kSourceCount; ++s) ghg += coefficients[s] * r.production[s];
    if (ghg_noise_fraction > 0.0) ghg *= 1.0 + ghg_noise_fraction * gauss(rng);
    r.ghg_kg = ghg;
  }
  return out;
}

}  // namespace wtp
