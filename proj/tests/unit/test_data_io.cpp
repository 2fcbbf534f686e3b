#include "doctest.h"

#include "../support/fixtures.hpp"
#include "../support/tempdir.hpp"
#include "batterypool/data_io.hpp"
#include "batterypool/error.hpp"

#include <fstream>
#include <sstream>

using namespace bpool;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Files {
    fixture::TempDir dir{"io"};
    std::filesystem::path tele = dir / "telemetry.csv";
    std::filesystem::path prices = dir / "prices.csv";
    std::filesystem::path specs = dir / "specs.csv";
};

}  // namespace

TEST_CASE("canonical writer round-trips bit for bit") {
    Files f;
    for (auto profile : {PriceProfile::flat, PriceProfile::diurnal, PriceProfile::spiky}) {
        const auto d = fixture::synthetic(3, 11, profile);
        write_fleet(d, f.tele, f.prices, f.specs);
        const auto back = load_fleet(f.tele, f.prices, f.specs);
        CHECK(back.rejected.empty());
        CHECK(back.dataset == d);
    }
}

TEST_CASE("one complete home gives a one-week grid") {
    Files f;
    const auto d = fixture::constant_fleet(1, 1.0, 0.0, 0.03, fixture::battery(10, 5, 0.95));
    write_fleet(d, f.tele, f.prices, f.specs);
    const auto back = load_fleet(f.tele, f.prices, f.specs).dataset;
    CHECK(back.grid.n_intervals() == 672);
    CHECK(back.homes.size() == 1);
    CHECK(back.prices.usd_per_kwh[0] == 0.03);
}

TEST_CASE("a missing minute is a completeness error naming the home") {
    Files f;
    const auto d = fixture::constant_fleet(2, 1.0, 0.0, 0.03, fixture::battery(10, 5));
    write_fleet(d, f.tele, f.prices, f.specs);
    // Drop the last telemetry row (home h1, final minute).
    auto text = slurp(f.tele);
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    write_text(f.tele, text);
    try {
        load_fleet(f.tele, f.prices, f.specs);
        FAIL("expected CompletenessError");
    } catch (const CompletenessError& e) {
        CHECK(e.home_id() == "h1");
    }
    LoadOptions opt;
    opt.drop_incomplete = true;
    const auto res = load_fleet(f.tele, f.prices, f.specs, opt);
    REQUIRE(res.rejected.size() == 1);
    CHECK(res.rejected[0].home_id == "h1");
    CHECK(res.dataset.homes.size() == 1);
}

TEST_CASE("negative solar and malformed rows") {
    Files f;
    const auto d = fixture::constant_fleet(1, 1.0, 0.5, 0.03, fixture::battery(10, 5));
    write_fleet(d, f.tele, f.prices, f.specs);
    const auto good = slurp(f.tele);

    auto neg = good;
    const auto first_row = neg.find('\n') + 1;
    const auto eol = neg.find('\n', first_row);
    neg.replace(first_row, eol - first_row, "h0,2024-07-01T00:00,1,-0.5");
    write_text(f.tele, neg);
    CHECK_THROWS_AS(load_fleet(f.tele, f.prices, f.specs), ValidationError);

    auto bad = good;
    bad.replace(first_row, eol - first_row, "h0,2024-07-01T00:00,abc,0.5");
    write_text(f.tele, bad);
    try {
        load_fleet(f.tele, f.prices, f.specs);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }

    auto unknown = good;
    unknown.replace(first_row, eol - first_row, "zz,2024-07-01T00:00,1,0.5");
    write_text(f.tele, unknown);
    CHECK_THROWS_AS(load_fleet(f.tele, f.prices, f.specs), ParseError);

    auto outside = good;
    outside.replace(first_row, eol - first_row, "h0,2024-06-30T23:59,1,0.5");
    write_text(f.tele, outside);
    CHECK_THROWS_AS(load_fleet(f.tele, f.prices, f.specs), CoverageError);
}

TEST_CASE("price gap is a coverage error") {
    Files f;
    const auto d = fixture::constant_fleet(1, 1.0, 0.0, 0.03, fixture::battery(10, 5));
    write_fleet(d, f.tele, f.prices, f.specs);
    auto text = slurp(f.prices);
    const auto row3 = text.find("2024-07-01T00:30");
    text.erase(row3, text.find('\n', row3) - row3 + 1);
    write_text(f.prices, text);
    CHECK_THROWS_AS(load_fleet(f.tele, f.prices, f.specs), CoverageError);
}

TEST_CASE("specs validation") {
    Files f;
    const auto d = fixture::constant_fleet(1, 1.0, 0.0, 0.03, fixture::battery(10, 5));
    write_fleet(d, f.tele, f.prices, f.specs);
    write_text(f.specs, "home_id,e_max_kwh,p_ch_max_kw,p_dis_max_kw,eta_ch,eta_dis,n_batteries\nh0,10,5,5,1.5,1,1\n");
    CHECK_THROWS_AS(load_fleet(f.tele, f.prices, f.specs), ValidationError);
    write_text(f.specs,
               "home_id,e_max_kwh,p_ch_max_kw,p_dis_max_kw,eta_ch,eta_dis,n_batteries\nh0,10,5,5,1,1,1\nh0,10,5,5,1,1,1\n");
    CHECK_THROWS_AS(load_fleet(f.tele, f.prices, f.specs), ParseError);
}

TEST_CASE("synthetic fleets") {
    const auto a = fixture::synthetic(6, 42);
    CHECK(a == fixture::synthetic(6, 42));
    CHECK_FALSE(a == fixture::synthetic(6, 43));
    CHECK_NOTHROW(a.validate());

    SynthConfig none;
    none.n_homes = 8;
    none.solar_fraction = 0.0;
    for (const auto& h : generate_fleet(none, fixture::week_grid()).homes) {
        for (double s : h.solar_kw) REQUIRE(s == 0.0);
    }

    SynthConfig heavy;
    heavy.n_homes = 6;
    heavy.archetype_weights = {0.0, 1.0, 0.0, 0.0};
    const auto grid = fixture::week_grid();
    for (const auto& h : generate_fleet(heavy, grid).homes) {
        const auto n = net_load(h, grid);
        CHECK(std::any_of(n.begin(), n.end(), [](double v) { return v < 0.0; }));
    }

    SynthConfig zero;
    zero.n_homes = 0;
    CHECK_THROWS_AS(generate_fleet(zero, grid), ConfigError);
    CHECK_THROWS_AS(generate_fleet(SynthConfig{}, TimeGrid(fixture::monday(), 1440)), ConfigError);

    SynthConfig spiky;
    spiky.n_homes = 1;
    spiky.price_profile = PriceProfile::spiky;
    const auto s = generate_fleet(spiky, grid);
    const auto spikes = std::count_if(s.prices.usd_per_kwh.begin(), s.prices.usd_per_kwh.end(),
                                      [](double p) { return p >= 1.0; });
    CHECK(spikes >= 1);
    CHECK(spikes <= 6);
    for (double p : s.prices.usd_per_kwh) CHECK(p <= 5.0);

    for (const auto& h : fixture::synthetic(30, 9).homes) {
        CHECK(h.battery.e_max >= 10.0);
        CHECK(h.battery.e_max <= 27.0);
        CHECK(h.battery.p_ch_max >= 3.3);
        CHECK(h.battery.p_ch_max <= 9.6);
    }
}
