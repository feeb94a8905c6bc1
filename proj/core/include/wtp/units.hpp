#pragma once

// Internal units: PSI, GPM, minutes, gallons, mg/gal, kg CO2/kWh.

namespace wtp::units {

inline constexpr double kPascalPerPsi = 6894.757293168;
inline constexpr double kCubicMetrePerSecondPerGpm = 6.30901964e-5;

// 1 PSI * 1 GPM expressed in kW.
inline constexpr double kKilowattPerPsiGpm =
    kPascalPerPsi * kCubicMetrePerSecondPerGpm / 1000.0;

inline constexpr double kMinutesPerHour = 60.0;
inline constexpr double kMinutesPerDay = 1440.0;
inline constexpr double kKwhPerMwh = 1000.0;

constexpr double psi_gpm_to_kw(double psi_gpm) { return psi_gpm * kKilowattPerPsiGpm; }

constexpr double per_day_to_per_minute(double rate) { return rate / kMinutesPerDay; }

}  // namespace wtp::units
