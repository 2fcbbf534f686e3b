// Synthetic fleet generator. Four household archetypes (typical non-solar,
// solar-heavy with midday export, pronounced evening peaks, low and flat) on
// a summer week, plus a wholesale price path.
//
// All randomness comes from mt19937_64 streams seeded per home with
// splitmix64, and uniform/normal draws are derived from raw 64-bit words, so
// output depends only on the seed and not on the standard library's
// distribution implementations.

#include "batterypool/data_io.hpp"

#include "batterypool/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace bpool {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t lane) : engine_(splitmix64(seed ^ splitmix64(lane))) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }
    int integer(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

constexpr std::uint64_t kPriceLane = 0xffff0001ULL;

double bump(double hour, double center, double width) {
    double d = std::fabs(hour - center);
    d = std::min(d, 24.0 - d);
    return std::exp(-0.5 * (d / width) * (d / width));
}

double solar_shape(double hour) {
    constexpr double sunrise = 6.75;
    constexpr double sunset = 20.25;
    if (hour <= sunrise || hour >= sunset) return 0.0;
    return std::pow(std::sin(std::numbers::pi * (hour - sunrise) / (sunset - sunrise)), 1.3);
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

Archetype draw_archetype(Stream& rng, const std::array<double, 4>& weights) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        acc += weights[a];
        if (u < acc && weights[a] > 0.0) return static_cast<Archetype>(a);
    }
    for (int a = 3; a >= 0; --a) {
        if (weights[a] > 0.0) return static_cast<Archetype>(a);
    }
    return Archetype::non_solar;
}

struct LoadShape {
    double base = 0.5;
    double morning = 0.5;
    double cooling = 1.0;
    double evening = 1.0;
    double evening_center = 20.0;
    double evening_width = 1.5;
    double ev_probability = 0.0;
    double noise = 0.08;
};

HomeTelemetry make_home(const SynthConfig& config, const TimeGrid& grid, std::size_t index) {
    Stream rng(config.seed, index);
    const Archetype archetype = draw_archetype(rng, config.archetype_weights);

    LoadShape shape;
    bool has_solar = false;
    double solar_kw_peak = 0.0;
    switch (archetype) {
        case Archetype::non_solar:
            shape.base = rng.uniform(0.4, 0.9);
            shape.morning = rng.uniform(0.3, 0.8);
            shape.cooling = rng.uniform(0.8, 2.0);
            shape.evening = rng.uniform(0.8, 2.0);
            break;
        case Archetype::solar_heavy:
            shape.base = rng.uniform(0.4, 0.8);
            shape.morning = rng.uniform(0.3, 0.7);
            shape.cooling = rng.uniform(0.5, 1.5);
            shape.evening = rng.uniform(0.8, 1.8);
            has_solar = config.solar_fraction > 0.0;
            solar_kw_peak = rng.uniform(6.5, 10.0);
            break;
        case Archetype::evening_peak:
            shape.base = rng.uniform(0.5, 1.0);
            shape.morning = rng.uniform(0.2, 0.6);
            shape.cooling = rng.uniform(0.8, 1.8);
            shape.evening = rng.uniform(3.0, 6.0);
            shape.evening_center = rng.uniform(18.0, 20.0);
            shape.evening_width = rng.uniform(1.0, 1.6);
            shape.ev_probability = 0.35;
            has_solar = rng.bernoulli(config.solar_fraction);
            solar_kw_peak = rng.uniform(3.0, 7.0);
            break;
        case Archetype::low_load_flat:
            shape.base = rng.uniform(0.15, 0.4);
            shape.morning = rng.uniform(0.05, 0.2);
            shape.cooling = rng.uniform(0.1, 0.4);
            shape.evening = rng.uniform(0.1, 0.3);
            shape.noise = 0.05;
            has_solar = rng.bernoulli(config.solar_fraction);
            solar_kw_peak = rng.uniform(3.0, 7.0);
            break;
    }

    HomeTelemetry home;
    char id[32];
    std::snprintf(id, sizeof id, "home-%03zu", index);
    home.home_id = id;
    home.battery.e_max = round4(rng.uniform(10.0, 27.0));
    home.battery.p_ch_max = round4(rng.uniform(3.3, 9.6));
    home.battery.p_dis_max = home.battery.p_ch_max;
    home.battery.eta_ch = config.eta_ch;
    home.battery.eta_dis = config.eta_dis;
    home.battery.n_batteries = rng.bernoulli(config.two_battery_probability) ? 2 : 1;

    const std::size_t n = grid.n_minutes();
    const std::size_t n_days = (n + kMinutesPerDay - 1) / kMinutesPerDay;
    std::vector<double> day_load(n_days), day_sun(n_days), ev_start(n_days, -1.0), ev_hours(n_days),
        ev_kw(n_days);
    for (std::size_t d = 0; d < n_days; ++d) {
        day_load[d] = rng.uniform(0.85, 1.15);
        day_sun[d] = rng.uniform(0.65, 1.0);
        if (rng.bernoulli(shape.ev_probability)) {
            ev_start[d] = rng.uniform(18.0, 22.0);
            ev_hours[d] = rng.uniform(1.5, 3.0);
            ev_kw[d] = rng.uniform(6.0, 11.0);
        }
    }

    home.load_kw.resize(n);
    home.solar_kw.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t day = m / kMinutesPerDay;
        const double hour = grid.minute_of_day(m) / 60.0;
        double load = shape.base + shape.morning * bump(hour, 7.5, 1.0) +
                      shape.cooling * bump(hour, 16.5, 3.5) +
                      shape.evening * bump(hour, shape.evening_center, shape.evening_width);
        load *= day_load[day] * (1.0 + shape.noise * rng.normal());
        if (ev_start[day] >= 0.0 && hour >= ev_start[day] && hour < ev_start[day] + ev_hours[day]) {
            load += ev_kw[day];
        }
        home.load_kw[m] = round4(std::max(load, 0.0));
        if (has_solar) {
            const double s = solar_kw_peak * day_sun[day] * solar_shape(hour) * (1.0 + 0.05 * rng.normal());
            home.solar_kw[m] = round4(std::max(s, 0.0));
        }
    }
    return home;
}

std::vector<double> make_prices(const SynthConfig& config, const TimeGrid& grid) {
    Stream rng(config.seed, kPriceLane);
    const std::size_t n = grid.n_intervals();
    std::vector<double> usd_per_mwh(n, 30.0);
    if (config.price_profile != PriceProfile::flat) {
        const std::size_t n_days = (n + kQuartersPerDay - 1) / kQuartersPerDay;
        std::vector<double> day_level(n_days);
        for (auto& v : day_level) v = rng.uniform(0.8, 1.25);
        for (std::size_t i = 0; i < n; ++i) {
            const double hour = grid.quarter_of_day(i) * 0.25;
            const double shape = 22.0 + 10.0 * bump(hour, 8.0, 1.5) + 45.0 * bump(hour, 18.5, 2.0);
            usd_per_mwh[i] = std::max(shape * day_level[i / kQuartersPerDay] + 3.0 * rng.normal(), 1.0);
        }
        if (config.price_profile == PriceProfile::spiky) {
            const int n_spikes = rng.integer(2, 6);
            for (int k = 0; k < n_spikes; ++k) {
                const auto at = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
                usd_per_mwh[std::min(at, n - 1)] = rng.uniform(1000.0, 5000.0);
            }
        }
    }
    std::vector<double> usd_per_kwh(n);
    for (std::size_t i = 0; i < n; ++i) usd_per_kwh[i] = std::round(usd_per_mwh[i] * 100.0) / 100.0 / 1000.0;
    return usd_per_kwh;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_homes == 0) throw ConfigError("synthetic fleet needs at least one home");
    if (!(solar_fraction >= 0.0 && solar_fraction <= 1.0)) throw ConfigError("solar_fraction must be in [0, 1]");
    if (!(two_battery_probability >= 0.0 && two_battery_probability <= 1.0)) {
        throw ConfigError("two_battery_probability must be in [0, 1]");
    }
    double total = 0.0;
    for (double w : archetype_weights) {
        if (!(w >= 0.0)) throw ConfigError("archetype weights must be nonnegative");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("archetype weights must sum to 1");
    if (!(eta_ch > 0.0 && eta_ch <= 1.0 && eta_dis > 0.0 && eta_dis <= 1.0)) {
        throw ConfigError("efficiencies must lie in (0, 1]");
    }
}

FleetDataset generate_fleet(const SynthConfig& config, const TimeGrid& grid) {
    config.validate();
    if (grid.n_minutes() != static_cast<std::size_t>(kMinutesPerWeek)) {
        throw ConfigError("synthetic fleets span exactly 7 days");
    }
    FleetDataset out{grid, {}, PriceSeries{make_prices(config, grid)}};
    out.homes.reserve(config.n_homes);
    for (std::size_t i = 0; i < config.n_homes; ++i) out.homes.push_back(make_home(config, grid, i));
    return out;
}

std::vector<Archetype> synth_archetypes(const SynthConfig& config) {
    config.validate();
    std::vector<Archetype> out;
    for (std::size_t i = 0; i < config.n_homes; ++i) {
        Stream rng(config.seed, i);
        out.push_back(draw_archetype(rng, config.archetype_weights));
    }
    return out;
}

}  // namespace bpool
