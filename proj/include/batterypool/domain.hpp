#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bpool {

inline constexpr int kIntervalMinutes = 15;
inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kQuartersPerDay = kMinutesPerDay / kIntervalMinutes;
inline constexpr int kMinutesPerWeek = 7 * kMinutesPerDay;
/// Length of one control interval in hours.
inline constexpr double kDeltaHours = 0.25;

using LocalMinute = std::chrono::local_time<std::chrono::minutes>;

/// Parses "YYYY-MM-DDTHH:MM" with optional ":SS" (seconds must be zero).
/// A space is accepted in place of 'T'. Throws ValidationError.
LocalMinute parse_local_minute(std::string_view text);
std::string format_local_minute(LocalMinute t);

/// Uniform one-minute clock over which telemetry is sampled, with the
/// 15-minute control grid laid on top.
class TimeGrid {
public:
    /// start must fall on a quarter-hour boundary; n_minutes must be a
    /// positive multiple of 15.
    TimeGrid(LocalMinute start, std::size_t n_minutes);

    static TimeGrid week(LocalMinute start) { return TimeGrid(start, kMinutesPerWeek); }

    LocalMinute start() const noexcept { return start_; }
    std::size_t n_minutes() const noexcept { return n_minutes_; }
    std::size_t n_intervals() const noexcept { return n_minutes_ / kIntervalMinutes; }
    static constexpr int interval_minutes() noexcept { return kIntervalMinutes; }

    LocalMinute minute_time(std::size_t minute_index) const;
    /// Clock minute of day (0..1439) of the given minute index.
    int minute_of_day(std::size_t minute_index) const noexcept;
    /// Quarter-hour-of-day (0..95) of an interval index; indices past the end
    /// wrap around the grid.
    int quarter_of_day(std::size_t interval) const noexcept;

    bool operator==(const TimeGrid&) const = default;

private:
    LocalMinute start_;
    std::size_t n_minutes_;
    int start_minute_of_day_;
};

struct BatterySpec {
    double e_max = 0.0;      // kWh
    double p_ch_max = 0.0;   // kW
    double p_dis_max = 0.0;  // kW
    double eta_ch = 0.95;
    double eta_dis = 0.95;
    int n_batteries = 1;

    void validate() const;
    bool operator==(const BatterySpec&) const = default;
};

/// Benchmark retail tariff. Energy terms in USD/kWh, subscriptions in
/// USD/month.
struct Tariff {
    double p_ret = 0.09;
    double c_tdsp = 0.05;
    double beta = 0.04;
    double sub_one = 19.0;
    double sub_two = 29.0;

    void validate() const;
    /// Monthly subscription pro-rated to one 7-day week (one quarter).
    double weekly_subscription(int n_batteries) const;
};

struct HomeTelemetry {
    std::string home_id;
    std::vector<double> load_kw;   // one value per grid minute
    std::vector<double> solar_kw;  // one value per grid minute
    BatterySpec battery;

    void validate(const TimeGrid& grid) const;
    bool operator==(const HomeTelemetry&) const = default;
};

struct PriceSeries {
    std::vector<double> usd_per_kwh;  // one value per 15-minute interval

    bool operator==(const PriceSeries&) const = default;
};

/// Arithmetic mean of each block of 15 consecutive minutes.
std::vector<double> resample_to_quarter_hour(std::span<const double> minutes);

/// Interval-average net load N = L - S (kW) on the 15-minute grid.
std::vector<double> net_load(const HomeTelemetry& home, const TimeGrid& grid);

/// Minute-level net load L - S (kW).
std::vector<double> minute_net_load(const HomeTelemetry& home);

}  // namespace bpool
