#pragma once

#include "batterypool/data_io.hpp"

#include <array>
#include <map>
#include <span>
#include <vector>

namespace bpool {

/// One value per quarter-hour of day.
using QuarterProfile = std::array<double, kQuartersPerDay>;

/// Backup durations (hours) on the product menu.
inline constexpr std::array<int, 6> kBackupMenu{2, 4, 6, 8, 12, 24};
bool is_menu_tier(int hours) noexcept;

inline constexpr int kDefaultForecastWindow = 15;  // k_f, minutes
inline constexpr int kDefaultReserveWindow = 30;   // k_b, minutes
inline constexpr double kDefaultReserveQuantile = 0.90;

struct ForecastSet {
    std::vector<QuarterProfile> l_hat;  // kW, per home
    std::vector<QuarterProfile> s_hat;  // kW, per home
    QuarterProfile lambda_hat{};        // USD/kWh
};

/// True when clock minute `minute_of_day` lies within `k` minutes (circular
/// clock distance) of the nearest minute of quarter-hour `q`'s window.
bool in_quarter_neighborhood(int minute_of_day, int q, int k) noexcept;

/// Local-time-neighborhood means of load and solar pooled across days, and
/// slot medians of realized prices (lower middle for even counts).
ForecastSet point_forecasts(const FleetDataset& dataset, int k_f = kDefaultForecastWindow);

/// Delta * sum_{j<K} max(N[start+j], 0) with K = hours/Delta intervals,
/// indices wrapping around the series.
double forward_positive_energy(std::span<const double> net_kw, std::size_t start_interval, double hours);

/// Nearest-rank empirical quantile: element ceil(p*n) (1-based) of the sorted
/// sample. p in (0, 1].
double nearest_rank_quantile(std::vector<double> sample, double p);

/// Reserve floor (kWh of internal energy) per reserve quarter-hour for one
/// home and backup duration T: nearest-rank quantile of the minute-indexed
/// forward positive-net-load energies in the k_b neighborhood, divided by
/// the discharge efficiency.
QuarterProfile reserve_profile(const FleetDataset& dataset, std::size_t home, int backup_hours,
                               int k_b = kDefaultReserveWindow, double quantile = kDefaultReserveQuantile);

/// Reserve floors for every home and every requested tier. Forward sums are
/// accumulated across tiers in one pass per home.
class ReserveBook {
public:
    ReserveBook() = default;
    ReserveBook(const FleetDataset& dataset, std::span<const int> tiers, int k_b = kDefaultReserveWindow,
                double quantile = kDefaultReserveQuantile);

    const QuarterProfile& at(std::size_t home, int backup_hours) const;
    bool has(std::size_t home, int backup_hours) const;
    std::size_t n_homes() const noexcept { return rows_.size(); }
    /// Replace one row (tests and what-if runs).
    void set(std::size_t home, int backup_hours, const QuarterProfile& row);

private:
    std::vector<std::map<int, QuarterProfile>> rows_;
};

/// `reserves.csv`: home_id,backup_hours,quarter_hour,reserve_kwh
void write_reserves_csv(const std::filesystem::path& path, const FleetDataset& dataset,
                        const ReserveBook& book, std::span<const int> tiers);

}  // namespace bpool
