#include "batterypool/domain.hpp"

#include "batterypool/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace bpool {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    if (pos + len > text.size()) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
    if (ec != std::errc{} || ptr != text.data() + pos + len) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, std::string_view allowed) {
    if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
}

}  // namespace

LocalMinute parse_local_minute(std::string_view text) {
    using namespace std::chrono;
    // YYYY-MM-DDTHH:MM[:SS]
    if (text.size() != 16 && text.size() != 19) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
    const int y = parse_fixed(text, 0, 4);
    expect_char(text, 4, "-");
    const int mo = parse_fixed(text, 5, 2);
    expect_char(text, 7, "-");
    const int d = parse_fixed(text, 8, 2);
    expect_char(text, 10, "T ");
    const int hh = parse_fixed(text, 11, 2);
    expect_char(text, 13, ":");
    const int mm = parse_fixed(text, 14, 2);
    if (text.size() == 19) {
        expect_char(text, 16, ":");
        if (parse_fixed(text, 17, 2) != 0) {
            throw ValidationError("timestamp '" + std::string(text) + "' is not on a whole minute");
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59) {
        throw ValidationError("invalid timestamp '" + std::string(text) + "'");
    }
    return LocalMinute{local_days{ymd}.time_since_epoch() + hours{hh} + minutes{mm}};
}

std::string format_local_minute(LocalMinute t) {
    using namespace std::chrono;
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const auto tod = t - day_start;
    const auto hh = duration_cast<hours>(tod).count();
    const auto mm = (tod - hours{hh}).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hh), static_cast<int>(mm));
    return buf;
}

TimeGrid::TimeGrid(LocalMinute start, std::size_t n_minutes) : start_(start), n_minutes_(n_minutes) {
    using namespace std::chrono;
    if (n_minutes == 0 || n_minutes % kIntervalMinutes != 0) {
        throw ShapeError("grid length " + std::to_string(n_minutes) +
                         " minutes is not a positive multiple of 15");
    }
    const auto tod = start - floor<days>(start);
    start_minute_of_day_ = static_cast<int>(tod.count());
    if (start_minute_of_day_ % kIntervalMinutes != 0) {
        throw ShapeError("grid start " + format_local_minute(start) + " is not on a quarter hour");
    }
}

LocalMinute TimeGrid::minute_time(std::size_t minute_index) const {
    return start_ + std::chrono::minutes{static_cast<long long>(minute_index)};
}

int TimeGrid::minute_of_day(std::size_t minute_index) const noexcept {
    return static_cast<int>((start_minute_of_day_ + minute_index) % kMinutesPerDay);
}

int TimeGrid::quarter_of_day(std::size_t interval) const noexcept {
    const std::size_t wrapped = interval % n_intervals();
    return static_cast<int>((start_minute_of_day_ / kIntervalMinutes + wrapped) % kQuartersPerDay);
}

void BatterySpec::validate() const {
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(e_max) || !finite_nonneg(p_ch_max) || !finite_nonneg(p_dis_max)) {
        throw ValidationError("battery energy and power limits must be finite and nonnegative");
    }
    if (!(eta_ch > 0.0 && eta_ch <= 1.0) || !(eta_dis > 0.0 && eta_dis <= 1.0)) {
        throw ValidationError("battery efficiencies must lie in (0, 1]");
    }
    if (n_batteries != 1 && n_batteries != 2) {
        throw ValidationError("n_batteries must be 1 or 2");
    }
}

void Tariff::validate() const {
    for (double v : {p_ret, c_tdsp, beta, sub_one, sub_two}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("tariff parameters must be finite and nonnegative");
        }
    }
}

double Tariff::weekly_subscription(int n_batteries) const {
    return (n_batteries == 2 ? sub_two : sub_one) / 4.0;
}

void HomeTelemetry::validate(const TimeGrid& grid) const {
    if (load_kw.size() != grid.n_minutes() || solar_kw.size() != grid.n_minutes()) {
        throw CompletenessError(home_id, "series length does not match the grid (" +
                                             std::to_string(grid.n_minutes()) + " minutes)");
    }
    for (std::size_t i = 0; i < load_kw.size(); ++i) {
        if (!(load_kw[i] >= 0.0) || !(solar_kw[i] >= 0.0) || !std::isfinite(load_kw[i]) ||
            !std::isfinite(solar_kw[i])) {
            throw ValidationError("home " + home_id + ": negative or non-finite load/solar at minute " +
                                  std::to_string(i));
        }
    }
    battery.validate();
}

std::vector<double> resample_to_quarter_hour(std::span<const double> minutes) {
    if (minutes.size() % kIntervalMinutes != 0) {
        throw ShapeError("series of " + std::to_string(minutes.size()) +
                         " minutes is not a multiple of 15");
    }
    std::vector<double> out(minutes.size() / kIntervalMinutes);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double sum = 0.0;
        for (int k = 0; k < kIntervalMinutes; ++k) sum += minutes[i * kIntervalMinutes + k];
        out[i] = sum / kIntervalMinutes;
    }
    return out;
}

std::vector<double> net_load(const HomeTelemetry& home, const TimeGrid& grid) {
    if (home.load_kw.size() != grid.n_minutes() || home.solar_kw.size() != grid.n_minutes()) {
        throw ShapeError("telemetry for home " + home.home_id + " does not match the grid");
    }
    auto load = resample_to_quarter_hour(home.load_kw);
    const auto solar = resample_to_quarter_hour(home.solar_kw);
    for (std::size_t i = 0; i < load.size(); ++i) load[i] -= solar[i];
    return load;
}

std::vector<double> minute_net_load(const HomeTelemetry& home) {
    if (home.load_kw.size() != home.solar_kw.size()) {
        throw ShapeError("load and solar series differ in length for home " + home.home_id);
    }
    std::vector<double> net(home.load_kw.size());
    for (std::size_t i = 0; i < net.size(); ++i) net[i] = home.load_kw[i] - home.solar_kw[i];
    return net;
}

}  // namespace bpool
