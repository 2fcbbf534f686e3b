#pragma once

#include "batterypool/data_io.hpp"

#include <functional>

namespace fixture {

inline bpool::LocalMinute monday() { return bpool::parse_local_minute("2024-07-01T00:00"); }
inline bpool::TimeGrid week_grid() { return bpool::TimeGrid::week(monday()); }

inline bpool::BatterySpec battery(double e_max, double p, double eta = 1.0, int n = 1) {
    bpool::BatterySpec b;
    b.e_max = e_max;
    b.p_ch_max = p;
    b.p_dis_max = p;
    b.eta_ch = eta;
    b.eta_dis = eta;
    b.n_batteries = n;
    return b;
}

/// Home whose load and solar are functions of the minute index.
inline bpool::HomeTelemetry home(const std::string& id, const bpool::TimeGrid& grid,
                                 const std::function<double(std::size_t)>& load,
                                 const std::function<double(std::size_t)>& solar, bpool::BatterySpec spec) {
    bpool::HomeTelemetry h;
    h.home_id = id;
    h.battery = spec;
    h.load_kw.resize(grid.n_minutes());
    h.solar_kw.resize(grid.n_minutes());
    for (std::size_t m = 0; m < grid.n_minutes(); ++m) {
        h.load_kw[m] = load(m);
        h.solar_kw[m] = solar(m);
    }
    return h;
}

inline bpool::FleetDataset constant_fleet(std::size_t n_homes, double load, double solar, double price,
                                          bpool::BatterySpec spec) {
    const auto grid = week_grid();
    bpool::FleetDataset d{grid, {}, bpool::PriceSeries{std::vector<double>(grid.n_intervals(), price)}};
    for (std::size_t i = 0; i < n_homes; ++i) {
        d.homes.push_back(home("h" + std::to_string(i), grid, [=](std::size_t) { return load; },
                               [=](std::size_t) { return solar; }, spec));
    }
    return d;
}

inline bpool::FleetDataset synthetic(std::size_t n_homes, std::uint64_t seed,
                                     bpool::PriceProfile profile = bpool::PriceProfile::diurnal) {
    bpool::SynthConfig cfg;
    cfg.n_homes = n_homes;
    cfg.seed = seed;
    cfg.price_profile = profile;
    return bpool::generate_fleet(cfg, week_grid());
}

}  // namespace fixture
