#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace wtp {

// Distribution demand F_D(t). Either a daily cosine cycle around a mean, with
// optional bounded noise, or a tabulated (minute, GPM) series.
struct DemandProfile {
  double mean_gpm = 5.0e6 / 1440.0;
  double amplitude = 0.3;        // fraction of mean
  double peak_minute = 18.0 * 60.0;
  double noise_fraction = 0.0;   // uniform in [-noise, +noise] * mean, per 15 min bucket
  std::uint64_t seed = 0;
  std::vector<std::pair<double, double>> table;  // (minute, GPM), used when non-empty
};

double demand_at(const DemandProfile& profile, double minutes);

// Reads a `minute,gpm` demand table.
std::vector<std::pair<double, double>> load_demand_csv(const std::filesystem::path& path);

enum class EnergySource : std::size_t { kWind = 0, kSolar, kHydro, kGas, kCoal, kNuclear };
inline constexpr std::size_t kSourceCount = 6;
std::string_view source_name(EnergySource source);

using SourceArray = std::array<double, kSourceCount>;

struct EnergyMixRecord {
  double hour = 0.0;
  SourceArray production{};  // MWh per source
  double ghg_kg = 0.0;
};

struct EmissionsFit {
  SourceArray coefficients{};  // kg CO2 per MWh
  double residual_rms = 0.0;   // kg CO2
};

// Least squares of GHG on the six production columns, no intercept.
EmissionsFit fit_emissions_coefficients(const std::vector<EnergyMixRecord>& records);

// Hourly grid emissions intensity phi, kg CO2 per kWh.
class EmissionsIntensitySeries {
 public:
  EmissionsIntensitySeries() = default;
  explicit EmissionsIntensitySeries(std::vector<double> hourly);

  // Linear interpolation between hourly values; held constant past the ends.
  double at(double minutes) const;

  const std::vector<double>& hourly() const { return hourly_; }
  std::size_t hours() const { return hourly_.size(); }

 private:
  std::vector<double> hourly_;
};

EmissionsIntensitySeries intensity_series(const SourceArray& coefficients,
                                          const std::vector<EnergyMixRecord>& mix,
                                          std::size_t hours);

EmissionsIntensitySeries constant_intensity(double kg_per_kwh, std::size_t hours);

// Header: hour,wind_mwh,solar_mwh,hydro_mwh,gas_mwh,coal_mwh,nuclear_mwh,ghg_kg
std::vector<EnergyMixRecord> load_mix_csv(const std::filesystem::path& path);
void write_mix_csv(const std::filesystem::path& path, const std::vector<EnergyMixRecord>& records);

// Header: hour,phi_kg_per_kwh
EmissionsIntensitySeries load_phi_csv(const std::filesystem::path& path);
void write_phi_csv(const std::filesystem::path& path, const EmissionsIntensitySeries& series);

// Ground-truth coefficients used by the synthetic generator, kg CO2 per MWh.
inline constexpr SourceArray kSyntheticCoefficients{11.0, 41.0, 24.0, 490.0, 820.0, 12.0};

// Seeded synthetic hourly grid mix: solar peaks at midday, wind follows a
// multi-day swing, gas and coal cover the remaining evening-peaking load.
// GHG is the coefficient-weighted sum plus optional relative Gaussian noise.
std::vector<EnergyMixRecord> synthetic_energy_mix(std::size_t hours, std::uint64_t seed,
                                                  const SourceArray& coefficients = kSyntheticCoefficients,
                                                  double ghg_noise_fraction = 0.0);

}  // namespace wtp
