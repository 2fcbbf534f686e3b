#include "batterypool/data_io.hpp"

#include "batterypool/error.hpp"
#include "csv.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace bpool {

namespace {

constexpr std::string_view kTelemetryHeader = "home_id,timestamp,load_kw,solar_kw";
constexpr std::string_view kPriceHeader = "timestamp,price_usd_per_mwh";
constexpr std::string_view kSpecsHeader =
    "home_id,e_max_kwh,p_ch_max_kw,p_dis_max_kw,eta_ch,eta_dis,n_batteries";

struct PriceFile {
    LocalMinute start;
    std::vector<double> usd_per_kwh;
};

PriceFile read_prices(const std::filesystem::path& path) {
    csv::Reader reader(path);
    reader.expect_header(kPriceHeader);
    PriceFile out{};
    std::string line;
    while (reader.next(line)) {
        const auto fields = csv::split(line);
        if (fields.size() != 2) reader.fail("expected 2 fields");
        LocalMinute t;
        try {
            t = parse_local_minute(csv::trim(fields[0]));
        } catch (const ValidationError& e) {
            reader.fail(e.what());
        }
        const double usd_per_mwh = reader.number(fields[1]);
        if (out.usd_per_kwh.empty()) {
            out.start = t;
        } else {
            const auto expected =
                out.start + std::chrono::minutes{kIntervalMinutes * static_cast<long long>(out.usd_per_kwh.size())};
            if (t != expected) {
                throw CoverageError(path.string() + ":" + std::to_string(reader.line_no()) +
                                    ": price gap, expected interval " + format_local_minute(expected) +
                                    " but found " + format_local_minute(t));
            }
        }
        out.usd_per_kwh.push_back(usd_per_mwh / 1000.0);
    }
    if (out.usd_per_kwh.empty()) throw CoverageError(path.string() + ": no price rows");
    return out;
}

std::vector<std::pair<std::string, BatterySpec>> read_specs(const std::filesystem::path& path) {
    csv::Reader reader(path);
    reader.expect_header(kSpecsHeader);
    std::vector<std::pair<std::string, BatterySpec>> out;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    while (reader.next(line)) {
        const auto f = csv::split(line);
        if (f.size() != 7) reader.fail("expected 7 fields");
        std::string id(csv::trim(f[0]));
        if (id.empty()) reader.fail("empty home_id");
        BatterySpec spec;
        spec.e_max = reader.number(f[1]);
        spec.p_ch_max = reader.number(f[2]);
        spec.p_dis_max = reader.number(f[3]);
        spec.eta_ch = reader.number(f[4]);
        spec.eta_dis = reader.number(f[5]);
        spec.n_batteries = static_cast<int>(reader.integer(f[6]));
        try {
            spec.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(reader.line_no()) + ": " + e.what());
        }
        if (!seen.emplace(id, out.size()).second) reader.fail("duplicate home_id '" + id + "'");
        out.emplace_back(std::move(id), spec);
    }
    return out;
}

/// Smallest-magnitude decimal for price*1000 that divides back to price.
double mwh_for_roundtrip(double usd_per_kwh) {
    double v = usd_per_kwh * 1000.0;
    if (v / 1000.0 == usd_per_kwh) return v;
    double lo = v, hi = v;
    for (int k = 0; k < 8; ++k) {
        lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
        if (lo / 1000.0 == usd_per_kwh) return lo;
        if (hi / 1000.0 == usd_per_kwh) return hi;
    }
    return v;
}

}  // namespace

void FleetDataset::validate() const {
    if (prices.usd_per_kwh.size() != grid.n_intervals()) {
        throw CoverageError("price series has " + std::to_string(prices.usd_per_kwh.size()) +
                            " intervals, grid has " + std::to_string(grid.n_intervals()));
    }
    for (double p : prices.usd_per_kwh) {
        if (!std::isfinite(p)) throw ValidationError("non-finite price");
    }
    for (const auto& home : homes) home.validate(grid);
}

std::size_t FleetDataset::find_home(const std::string& home_id) const {
    for (std::size_t i = 0; i < homes.size(); ++i) {
        if (homes[i].home_id == home_id) return i;
    }
    throw ConfigError("unknown home '" + home_id + "'");
}

LoadResult load_fleet(const std::filesystem::path& telemetry, const std::filesystem::path& prices_path,
                      const std::filesystem::path& specs_path, const LoadOptions& options) {
    const PriceFile prices = read_prices(prices_path);
    const auto specs = read_specs(specs_path);
    const TimeGrid grid(prices.start, prices.usd_per_kwh.size() * kIntervalMinutes);
    const std::size_t n = grid.n_minutes();

    std::unordered_map<std::string, std::size_t> index;
    std::vector<HomeTelemetry> homes(specs.size());
    std::vector<std::vector<char>> seen(specs.size());
    std::vector<std::size_t> counts(specs.size(), 0);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        index.emplace(specs[i].first, i);
        homes[i].home_id = specs[i].first;
        homes[i].battery = specs[i].second;
    }

    csv::Reader reader(telemetry);
    reader.expect_header(kTelemetryHeader);
    std::string line;
    while (reader.next(line)) {
        const auto f = csv::split(line);
        if (f.size() != 4) reader.fail("expected 4 fields");
        const auto it = index.find(std::string(csv::trim(f[0])));
        if (it == index.end()) {
            reader.fail("home '" + std::string(csv::trim(f[0])) + "' has no battery spec");
        }
        const std::size_t h = it->second;
        LocalMinute t;
        try {
            t = parse_local_minute(csv::trim(f[1]));
        } catch (const ValidationError& e) {
            reader.fail(e.what());
        }
        const long long offset = (t - grid.start()).count();
        if (offset < 0 || offset >= static_cast<long long>(n)) {
            throw CoverageError(telemetry.string() + ":" + std::to_string(reader.line_no()) +
                                ": telemetry at " + format_local_minute(t) + " is outside price coverage");
        }
        const double load = reader.number(f[2]);
        const double solar = reader.number(f[3]);
        if (load < 0.0 || solar < 0.0) {
            throw ValidationError(telemetry.string() + ":" + std::to_string(reader.line_no()) +
                                  ": negative load or solar value");
        }
        auto& home = homes[h];
        if (home.load_kw.empty()) {
            home.load_kw.assign(n, 0.0);
            home.solar_kw.assign(n, 0.0);
            seen[h].assign(n, 0);
        }
        const auto m = static_cast<std::size_t>(offset);
        if (seen[h][m]) reader.fail("duplicate minute for home '" + home.home_id + "'");
        seen[h][m] = 1;
        ++counts[h];
        home.load_kw[m] = load;
        home.solar_kw[m] = solar;
    }

    LoadResult result{FleetDataset{grid, {}, PriceSeries{prices.usd_per_kwh}}, {}};
    for (std::size_t h = 0; h < homes.size(); ++h) {
        if (counts[h] != n) {
            const std::string reason = "has " + std::to_string(counts[h]) + " of " + std::to_string(n) +
                                       " minutes (week-incomplete)";
            if (!options.drop_incomplete) throw CompletenessError(homes[h].home_id, reason);
            result.rejected.push_back({homes[h].home_id, reason});
            continue;
        }
        result.dataset.homes.push_back(std::move(homes[h]));
    }
    result.dataset.validate();
    return result;
}

void write_fleet(const FleetDataset& dataset, const std::filesystem::path& telemetry,
                 const std::filesystem::path& prices, const std::filesystem::path& specs) {
    dataset.validate();
    const auto& grid = dataset.grid;
    std::vector<std::string> stamps(grid.n_minutes());
    for (std::size_t m = 0; m < stamps.size(); ++m) stamps[m] = format_local_minute(grid.minute_time(m));

    {
        auto out = csv::open_out(prices);
        std::string buf(kPriceHeader);
        buf += '\n';
        for (std::size_t i = 0; i < grid.n_intervals(); ++i) {
            buf += stamps[i * kIntervalMinutes];
            buf += ',';
            csv::append_number(buf, mwh_for_roundtrip(dataset.prices.usd_per_kwh[i]));
            buf += '\n';
        }
        out << buf;
    }
    {
        auto out = csv::open_out(specs);
        std::string buf(kSpecsHeader);
        buf += '\n';
        for (const auto& home : dataset.homes) {
            const auto& b = home.battery;
            buf += home.home_id;
            for (double v : {b.e_max, b.p_ch_max, b.p_dis_max, b.eta_ch, b.eta_dis}) {
                buf += ',';
                csv::append_number(buf, v);
            }
            buf += ',' + std::to_string(b.n_batteries) + '\n';
        }
        out << buf;
    }
    {
        auto out = csv::open_out(telemetry);
        out << kTelemetryHeader << '\n';
        std::string buf;
        for (const auto& home : dataset.homes) {
            buf.clear();
            for (std::size_t m = 0; m < grid.n_minutes(); ++m) {
                buf += home.home_id;
                buf += ',';
                buf += stamps[m];
                buf += ',';
                csv::append_number(buf, home.load_kw[m]);
                buf += ',';
                csv::append_number(buf, home.solar_kw[m]);
                buf += '\n';
            }
            out << buf;
        }
    }
}

PriceProfile parse_price_profile(std::string_view name) {
    if (name == "flat") return PriceProfile::flat;
    if (name == "diurnal") return PriceProfile::diurnal;
    if (name == "spiky") return PriceProfile::spiky;
    throw ConfigError("unknown price profile '" + std::string(name) + "'");
}

std::string to_string(PriceProfile profile) {
    switch (profile) {
        case PriceProfile::flat: return "flat";
        case PriceProfile::diurnal: return "diurnal";
        case PriceProfile::spiky: return "spiky";
    }
    return "?";
}

}  // namespace bpool
