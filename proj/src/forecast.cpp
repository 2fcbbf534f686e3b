#include "batterypool/forecast.hpp"

#include "batterypool/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace bpool {

namespace {

int clock_distance(int a, int b) noexcept {
    const int d = std::abs(a - b);
    return std::min(d, kMinutesPerDay - d);
}

/// Grid minute indices in each quarter-hour's neighborhood, ascending.
std::vector<std::vector<std::size_t>> neighborhood_minutes(const TimeGrid& grid, int k) {
    std::vector<std::vector<std::size_t>> out(kQuartersPerDay);
    std::array<std::vector<int>, kMinutesPerDay> quarters_of_minute;
    for (int d = 0; d < kMinutesPerDay; ++d) {
        for (int q = 0; q < kQuartersPerDay; ++q) {
            if (in_quarter_neighborhood(d, q, k)) quarters_of_minute[d].push_back(q);
        }
    }
    for (std::size_t m = 0; m < grid.n_minutes(); ++m) {
        for (int q : quarters_of_minute[grid.minute_of_day(m)]) out[q].push_back(m);
    }
    return out;
}

void check_window(int k, const char* name) {
    if (k < 0 || k >= kMinutesPerDay / 2) throw ConfigError(std::string(name) + " must be in [0, 720) minutes");
}

/// Forward positive-net-load energy (kWh) for every start minute and every
/// tier, by direct left-to-right summation over the wrapped minute series.
std::map<int, std::vector<double>> forward_sums(const HomeTelemetry& home, std::span<const int> tiers) {
    const std::size_t n = home.load_kw.size();
    std::vector<double> positive(n);
    for (std::size_t m = 0; m < n; ++m) positive[m] = std::max(home.load_kw[m] - home.solar_kw[m], 0.0);

    std::vector<int> sorted(tiers.begin(), tiers.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::map<int, std::vector<double>> out;
    for (int t : sorted) out[t].resize(n);
    if (sorted.empty()) return out;
    const std::size_t longest = static_cast<std::size_t>(sorted.back()) * 60;

    for (std::size_t s = 0; s < n; ++s) {
        double acc = 0.0;
        std::size_t idx = s;
        std::size_t next_tier = 0;
        for (std::size_t j = 0; j < longest; ++j) {
            acc += positive[idx];
            if (++idx == n) idx = 0;
            if (j + 1 == static_cast<std::size_t>(sorted[next_tier]) * 60) {
                out[sorted[next_tier]][s] = acc / 60.0;
                ++next_tier;
            }
        }
    }
    return out;
}

QuarterProfile quantiles_by_quarter(const std::vector<double>& sums,
                                    const std::vector<std::vector<std::size_t>>& neighborhoods, double quantile,
                                    double eta_dis) {
    QuarterProfile r{};
    std::vector<double> sample;
    for (int q = 0; q < kQuartersPerDay; ++q) {
        sample.clear();
        for (std::size_t m : neighborhoods[q]) sample.push_back(sums[m]);
        if (sample.empty()) throw Error("empty reserve neighborhood for quarter " + std::to_string(q));
        r[q] = nearest_rank_quantile(std::move(sample), quantile) / eta_dis;
        sample = {};
    }
    return r;
}

void check_reserve_args(int backup_hours, int k_b, double quantile) {
    if (!is_menu_tier(backup_hours)) {
        throw ConfigError("backup duration " + std::to_string(backup_hours) + " h is not on the menu");
    }
    check_window(k_b, "k_b");
    if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("reserve quantile must be in (0, 1)");
}

}  // namespace

bool is_menu_tier(int hours) noexcept {
    return std::find(kBackupMenu.begin(), kBackupMenu.end(), hours) != kBackupMenu.end();
}

bool in_quarter_neighborhood(int minute_of_day, int q, int k) noexcept {
    const int first = q * kIntervalMinutes;
    const int last = first + kIntervalMinutes - 1;
    if (minute_of_day >= first && minute_of_day <= last) return true;
    return std::min(clock_distance(minute_of_day, first), clock_distance(minute_of_day, last)) <= k;
}

ForecastSet point_forecasts(const FleetDataset& dataset, int k_f) {
    check_window(k_f, "k_f");
    const auto& grid = dataset.grid;
    const auto hoods = neighborhood_minutes(grid, k_f);

    ForecastSet out;
    out.l_hat.resize(dataset.homes.size());
    out.s_hat.resize(dataset.homes.size());
    for (std::size_t h = 0; h < dataset.homes.size(); ++h) {
        const auto& home = dataset.homes[h];
        if (home.load_kw.size() != grid.n_minutes()) throw ShapeError("home " + home.home_id + " is not on the grid");
        for (int q = 0; q < kQuartersPerDay; ++q) {
            if (hoods[q].empty()) throw Error("empty forecast neighborhood for quarter " + std::to_string(q));
            double load = 0.0;
            double solar = 0.0;
            for (std::size_t m : hoods[q]) {
                load += home.load_kw[m];
                solar += home.solar_kw[m];
            }
            out.l_hat[h][q] = load / static_cast<double>(hoods[q].size());
            out.s_hat[h][q] = solar / static_cast<double>(hoods[q].size());
        }
    }

    std::array<std::vector<double>, kQuartersPerDay> slots;
    const auto& prices = dataset.prices.usd_per_kwh;
    if (prices.size() != grid.n_intervals()) throw CoverageError("prices do not cover the grid");
    for (std::size_t i = 0; i < prices.size(); ++i) slots[grid.quarter_of_day(i)].push_back(prices[i]);
    for (int q = 0; q < kQuartersPerDay; ++q) {
        auto& s = slots[q];
        if (s.empty()) throw Error("no price observations for quarter " + std::to_string(q));
        std::sort(s.begin(), s.end());
        out.lambda_hat[q] = s[(s.size() - 1) / 2];
    }
    return out;
}

double forward_positive_energy(std::span<const double> net_kw, std::size_t start_interval, double hours) {
    const double intervals = hours / kDeltaHours;
    const auto k = static_cast<std::size_t>(std::llround(intervals));
    if (hours < 0.0 || std::fabs(intervals - static_cast<double>(k)) > 1e-9) {
        throw ConfigError("backup duration must be a nonnegative multiple of 15 minutes");
    }
    if (net_kw.empty()) throw ShapeError("empty net-load series");
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::max(net_kw[(start_interval + j) % net_kw.size()], 0.0);
    return kDeltaHours * sum;
}

double nearest_rank_quantile(std::vector<double> sample, double p) {
    if (sample.empty()) throw ShapeError("quantile of an empty sample");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("quantile level must be in (0, 1]");
    const double n = static_cast<double>(sample.size());
    // ceil(p*n), guarded against p*n landing a hair above an integer.
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sample.size());
    std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(rank - 1), sample.end());
    return sample[rank - 1];
}

QuarterProfile reserve_profile(const FleetDataset& dataset, std::size_t home, int backup_hours, int k_b,
                               double quantile) {
    check_reserve_args(backup_hours, k_b, quantile);
    if (home >= dataset.homes.size()) throw ConfigError("home index out of range");
    const auto hoods = neighborhood_minutes(dataset.grid, k_b);
    const int tier[] = {backup_hours};
    const auto sums = forward_sums(dataset.homes[home], tier);
    return quantiles_by_quarter(sums.at(backup_hours), hoods, quantile, dataset.homes[home].battery.eta_dis);
}

ReserveBook::ReserveBook(const FleetDataset& dataset, std::span<const int> tiers, int k_b, double quantile) {
    for (int t : tiers) check_reserve_args(t, k_b, quantile);
    const auto hoods = neighborhood_minutes(dataset.grid, k_b);
    rows_.resize(dataset.homes.size());
    for (std::size_t h = 0; h < dataset.homes.size(); ++h) {
        const auto sums = forward_sums(dataset.homes[h], tiers);
        for (const auto& [t, s] : sums) {
            rows_[h][t] = quantiles_by_quarter(s, hoods, quantile, dataset.homes[h].battery.eta_dis);
        }
    }
}

const QuarterProfile& ReserveBook::at(std::size_t home, int backup_hours) const {
    if (home >= rows_.size()) throw ConfigError("reserve book has no home " + std::to_string(home));
    const auto it = rows_[home].find(backup_hours);
    if (it == rows_[home].end()) {
        throw ConfigError("reserve book has no " + std::to_string(backup_hours) + " h tier");
    }
    return it->second;
}

bool ReserveBook::has(std::size_t home, int backup_hours) const {
    return home < rows_.size() && rows_[home].count(backup_hours) > 0;
}

void ReserveBook::set(std::size_t home, int backup_hours, const QuarterProfile& row) {
    if (home >= rows_.size()) rows_.resize(home + 1);
    rows_[home][backup_hours] = row;
}

void write_reserves_csv(const std::filesystem::path& path, const FleetDataset& dataset, const ReserveBook& book,
                        std::span<const int> tiers) {
    auto out = csv::open_out(path);
    std::string buf = "home_id,backup_hours,quarter_hour,reserve_kwh\n";
    for (std::size_t h = 0; h < dataset.homes.size(); ++h) {
        for (int t : tiers) {
            const auto& row = book.at(h, t);
            for (int q = 0; q < kQuartersPerDay; ++q) {
                buf += dataset.homes[h].home_id + ',' + std::to_string(t) + ',' + std::to_string(q) + ',';
                csv::append_number(buf, row[q]);
                buf += '\n';
            }
        }
    }
    out << buf;
}

}  // namespace bpool
