#include "doctest.h"

#include "../support/fixtures.hpp"
#include "batterypool/domain.hpp"
#include "batterypool/error.hpp"

#include <cmath>
#include <numeric>

using namespace bpool;

TEST_CASE("resample averages blocks of fifteen minutes") {
    CHECK(resample_to_quarter_hour(std::vector<double>(15, 1.0)) == std::vector<double>{1.0});
    std::vector<double> two(30, 0.0);
    std::fill(two.begin() + 15, two.end(), 3.0);
    CHECK(resample_to_quarter_hour(two) == std::vector<double>{0.0, 3.0});
    std::vector<double> ramp(15);
    std::iota(ramp.begin(), ramp.end(), 1.0);
    double sum = 0.0;
    for (double v : ramp) sum += v;
    CHECK(resample_to_quarter_hour(ramp)[0] == sum / 15.0);
    CHECK(resample_to_quarter_hour(ramp)[0] == 8.0);
    CHECK_THROWS_AS(resample_to_quarter_hour(std::vector<double>(14, 1.0)), ShapeError);
}

TEST_CASE("resampling preserves energy") {
    std::vector<double> minutes(10080);
    for (std::size_t i = 0; i < minutes.size(); ++i) minutes[i] = 2.0 + std::sin(0.013 * i) + 0.001 * (i % 7);
    const auto q = resample_to_quarter_hour(minutes);
    double e_min = 0.0, e_q = 0.0;
    for (double v : minutes) e_min += v / 60.0;
    for (double v : q) e_q += 0.25 * v;
    CHECK(std::fabs(e_q - e_min) <= 1e-9 * std::fabs(e_min));
}

TEST_CASE("net load sign and linearity") {
    const TimeGrid grid(fixture::monday(), 15);
    auto h = fixture::home("a", grid, [](std::size_t) { return 2.0; }, [](std::size_t) { return 0.5; },
                           fixture::battery(1, 1));
    CHECK(net_load(h, grid) == std::vector<double>{1.5});
    h.solar_kw.assign(15, 3.0);
    h.load_kw.assign(15, 1.0);
    CHECK(net_load(h, grid) == std::vector<double>{-2.0});
    h.solar_kw = h.load_kw;
    CHECK(net_load(h, grid) == std::vector<double>{0.0});

    auto g = fixture::home("b", grid, [](std::size_t m) { return 0.1 * m; }, [](std::size_t m) { return 0.05 * m * m; },
                           fixture::battery(1, 1));
    auto scaled = g;
    for (auto& v : scaled.load_kw) v *= 4.0;
    for (auto& v : scaled.solar_kw) v *= 4.0;
    const auto base = net_load(g, grid), big = net_load(scaled, grid);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(big[i] == doctest::Approx(4.0 * base[i]).epsilon(1e-14));
}

TEST_CASE("time grid indexing") {
    CHECK_THROWS_AS(TimeGrid(fixture::monday(), 0), ShapeError);
    CHECK_THROWS_AS(TimeGrid(fixture::monday(), 20), ShapeError);
    CHECK_THROWS_AS(TimeGrid(parse_local_minute("2024-07-01T00:07"), 15), ShapeError);
    const TimeGrid g(parse_local_minute("2024-07-01T23:30"), 60);
    CHECK(g.n_intervals() == 4);
    CHECK(g.quarter_of_day(0) == 94);
    CHECK(g.quarter_of_day(2) == 0);
    CHECK(g.quarter_of_day(4) == 94);  // wraps
    CHECK(g.minute_of_day(31) == 1);
    CHECK(format_local_minute(g.minute_time(30)) == "2024-07-02T00:00");
}

TEST_CASE("timestamp parsing") {
    CHECK(format_local_minute(parse_local_minute("2024-02-29 13:45:00")) == "2024-02-29T13:45");
    CHECK_THROWS_AS(parse_local_minute("2024-02-30T00:00"), ValidationError);
    CHECK_THROWS_AS(parse_local_minute("2024-01-01T00:00:30"), ValidationError);
    CHECK_THROWS_AS(parse_local_minute("2024-01-01"), ValidationError);
    CHECK_THROWS_AS(parse_local_minute("2024-01-01T24:00"), ValidationError);
}

TEST_CASE("tariff and battery validation") {
    const Tariff t;
    CHECK(t.weekly_subscription(1) == 19.0 / 4.0);
    CHECK(t.weekly_subscription(2) == 29.0 / 4.0);
    Tariff bad;
    bad.beta = -0.01;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    BatterySpec b;
    b.eta_dis = 0.0;
    CHECK_THROWS_AS(b.validate(), ValidationError);
    b = BatterySpec{};
    b.n_batteries = 3;
    CHECK_THROWS_AS(b.validate(), ValidationError);
    b = BatterySpec{};
    b.p_ch_max = -1.0;
    CHECK_THROWS_AS(b.validate(), ValidationError);
}
