#pragma once

#include "batterypool/domain.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bpool {

struct FleetDataset {
    TimeGrid grid;
    std::vector<HomeTelemetry> homes;
    PriceSeries prices;

    /// Throws on any week-completeness, sign or coverage violation.
    void validate() const;
    std::size_t find_home(const std::string& home_id) const;  // throws ConfigError
    bool operator==(const FleetDataset&) const = default;
};

struct Rejection {
    std::string home_id;
    std::string reason;
};

struct LoadOptions {
    /// Drop incomplete homes (listed in LoadResult::rejected) instead of
    /// throwing CompletenessError.
    bool drop_incomplete = false;
};

struct LoadResult {
    FleetDataset dataset;
    std::vector<Rejection> rejected;
};

/// Reads the three-file fleet format:
///   telemetry: home_id,timestamp,load_kw,solar_kw        (one row per home-minute)
///   prices:    timestamp,price_usd_per_mwh               (one row per interval start)
///   specs:     home_id,e_max_kwh,p_ch_max_kw,p_dis_max_kw,eta_ch,eta_dis,n_batteries
/// The price file defines the grid. Prices are converted to USD/kWh. Home
/// order follows the specs file.
LoadResult load_fleet(const std::filesystem::path& telemetry, const std::filesystem::path& prices,
                      const std::filesystem::path& specs, const LoadOptions& options = {});

/// Canonical writer; load_fleet(write_fleet(d)) reproduces d bit for bit.
void write_fleet(const FleetDataset& dataset, const std::filesystem::path& telemetry,
                 const std::filesystem::path& prices, const std::filesystem::path& specs);

enum class PriceProfile { flat, diurnal, spiky };
PriceProfile parse_price_profile(std::string_view name);
std::string to_string(PriceProfile profile);

enum class Archetype { non_solar = 0, solar_heavy = 1, evening_peak = 2, low_load_flat = 3 };

struct SynthConfig {
    std::size_t n_homes = 20;
    std::uint64_t seed = 7;
    /// Probability that a home of the evening-peak or low-load archetype has
    /// rooftop solar. Solar-heavy homes get solar whenever this is positive;
    /// non-solar homes never do.
    double solar_fraction = 0.5;
    std::array<double, 4> archetype_weights{0.35, 0.25, 0.2, 0.2};
    PriceProfile price_profile = PriceProfile::diurnal;
    double two_battery_probability = 0.2;
    double eta_ch = 0.95;
    double eta_dis = 0.95;

    void validate() const;
};

/// Deterministic synthetic fleet over a 7-day grid.
FleetDataset generate_fleet(const SynthConfig& config, const TimeGrid& grid);

/// Archetype that generate_fleet assigned to each home, in order.
std::vector<Archetype> synth_archetypes(const SynthConfig& config);

}  // namespace bpool
