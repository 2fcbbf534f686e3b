#include "batterypool/experiments.hpp"

#include "batterypool/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <optional>

namespace bpool {

namespace {

void finish_totals(MarginReport& r) {
    r.total_dispatch_usd = 0.0;
    r.total_subscription_usd = 0.0;
    for (const auto& h : r.homes) {
        r.total_dispatch_usd += h.dispatch_usd;
        r.total_subscription_usd += h.subscription_usd;
    }
    r.total_firm_usd = r.total_dispatch_usd + r.total_subscription_usd;
}

std::vector<int> all_menu_tiers() { return {kBackupMenu.begin(), kBackupMenu.end()}; }

std::string first_failure(const TrajectoryRecord& tr) {
    for (std::size_t t = 0; t < tr.n_epochs; ++t) {
        if (!tr.feasible[t]) return "dispatch LP infeasible at epoch " + std::to_string(t);
        for (std::size_t g = 0; g < tr.n_homes(); ++g) {
            const std::size_t i = tr.at(t, g);
            if (tr.soc[i] < tr.floor[i] - 1e-7) return "state of charge below floor at epoch " + std::to_string(t);
        }
    }
    return {};
}

}  // namespace

MarginReport firm_margin(const TrajectoryRecord& trajectory, const FleetDataset& dataset, const Tariff& tariff) {
    MarginReport r;
    for (std::size_t g = 0; g < trajectory.n_homes(); ++g) {
        HomeMargin h;
        h.home_id = trajectory.home_ids[g];
        h.dispatch_usd = trajectory.dispatch_margin(g);
        h.subscription_usd = tariff.weekly_subscription(dataset.homes.at(trajectory.homes[g]).battery.n_batteries);
        h.firm_usd = h.dispatch_usd + h.subscription_usd;
        r.homes.push_back(std::move(h));
    }
    finish_totals(r);
    return r;
}

MarginReport merge_reports(std::span<const MarginReport> parts) {
    MarginReport r;
    for (const auto& p : parts) r.homes.insert(r.homes.end(), p.homes.begin(), p.homes.end());
    finish_totals(r);
    return r;
}

double pooling_benefit_per_home(const MarginReport& standalone, const MarginReport& pooled) {
    if (standalone.homes.size() != pooled.homes.size() || standalone.homes.empty()) {
        throw ShapeError("paired reports must cover the same nonempty cohort");
    }
    return (pooled.total_firm_usd - standalone.total_firm_usd) / static_cast<double>(standalone.homes.size());
}

std::vector<std::size_t> ScreenResult::retained() const {
    std::vector<std::size_t> out;
    for (const auto& e : entries) {
        if (!e.dropped) out.push_back(e.home);
    }
    return out;
}

std::vector<int> ScreenResult::retained_tiers() const {
    std::vector<int> out;
    for (const auto& e : entries) {
        if (!e.dropped) out.push_back(e.t_maxfeas);
    }
    return out;
}

std::vector<std::size_t> ScreenResult::dropped() const {
    std::vector<std::size_t> out;
    for (const auto& e : entries) {
        if (e.dropped) out.push_back(e.home);
    }
    return out;
}

Experiment::Experiment(FleetDataset dataset, RolloutConfig config, ExperimentOptions options)
    : dataset_(std::move(dataset)), config_(std::move(config)), options_(options) {
    config_.validate();
    dataset_.validate();
    forecasts_ = point_forecasts(dataset_, options_.k_f);
    const auto tiers = all_menu_tiers();
    reserves_ = ReserveBook(dataset_, tiers, options_.k_b, options_.quantile);
}

const TrajectoryRecord& Experiment::standalone(std::size_t home, int tier) {
    auto& slot = standalone_cache_[{home, tier}];
    if (!slot) {
        slot = std::make_unique<TrajectoryRecord>(
            rollout(dataset_, forecasts_, reserves_, config_, RolloutMode::standalone(home, tier)));
    }
    return *slot;
}

const TrajectoryRecord& Experiment::pooled(const std::vector<std::size_t>& homes, const std::vector<int>& tiers) {
    auto& slot = pooled_cache_[{homes, tiers}];
    if (!slot) {
        slot = std::make_unique<TrajectoryRecord>(
            rollout(dataset_, forecasts_, reserves_, config_, RolloutMode::pool(homes, tiers)));
    }
    return *slot;
}

std::vector<const TrajectoryRecord*> Experiment::pooled_partitioned(const std::vector<std::size_t>& homes,
                                                                    const std::vector<int>& tiers) {
    if (homes.size() != tiers.size()) throw ShapeError("one tier per pooled home is required");
    const std::size_t chunk = options_.pool_size == 0 ? homes.size() : options_.pool_size;
    std::vector<const TrajectoryRecord*> out;
    for (std::size_t begin = 0; begin < homes.size(); begin += chunk) {
        const std::size_t end = std::min(homes.size(), begin + chunk);
        out.push_back(&pooled({homes.begin() + begin, homes.begin() + end}, {tiers.begin() + begin, tiers.begin() + end}));
    }
    return out;
}

std::vector<const TrajectoryRecord*> Experiment::trajectories() const {
    std::vector<const TrajectoryRecord*> out;
    for (const auto& [key, tr] : standalone_cache_) out.push_back(tr.get());
    for (const auto& [key, tr] : pooled_cache_) out.push_back(tr.get());
    return out;
}

bool Experiment::feasible(std::size_t home, int tier) {
    const auto& floor = reserves_.at(home, tier);
    if (*std::max_element(floor.begin(), floor.end()) > dataset_.homes.at(home).battery.e_max) return false;
    return trajectory_feasible(standalone(home, tier));
}

ScreenResult Experiment::screen() {
    ScreenResult result;
    for (std::size_t h = 0; h < dataset_.homes.size(); ++h) {
        ScreenEntry e;
        e.home = h;
        e.home_id = dataset_.homes[h].home_id;
        for (int tier : kBackupMenu) {
            if (!feasible(h, tier)) {
                const auto& floor = reserves_.at(h, tier);
                const bool over = *std::max_element(floor.begin(), floor.end()) > dataset_.homes[h].battery.e_max;
                e.reason = "infeasible at " + std::to_string(tier) + "h: " +
                           (over ? std::string("reserve exceeds capacity") : first_failure(standalone(h, tier)));
                break;
            }
            e.t_maxfeas = tier;
        }
        e.dropped = e.t_maxfeas == 0;
        result.entries.push_back(std::move(e));
    }
    return result;
}

CapSpectrum Experiment::cap_spectrum(const ScreenResult& screen, std::span<const int> caps) {
    for (int cap : caps) {
        if (!is_menu_tier(cap)) throw ConfigError("cap " + std::to_string(cap) + " is not on the menu");
    }
    CapSpectrum out;
    out.retained = screen.retained();
    if (out.retained.empty()) throw ConfigError("no retained homes to run");
    const auto t_max = screen.retained_tiers();
    const auto& tariff = config_.tariff;

    for (int cap : caps) {
        CapRun run;
        run.cap_hours = cap;
        CapRow row;
        row.cap_hours = cap;
        std::vector<MarginReport> parts;
        for (std::size_t i = 0; i < out.retained.size(); ++i) {
            const int tier = std::min(t_max[i], cap);
            run.tiers.push_back(tier);
            if (t_max[i] >= cap) ++row.homes_at_cap;
            parts.push_back(firm_margin(standalone(out.retained[i], tier), dataset_, tariff));
        }
        run.standalone = merge_reports(parts);
        parts.clear();
        run.pooled_total_soc.assign(dataset_.grid.n_intervals(), 0.0);
        for (const auto* tr : pooled_partitioned(out.retained, run.tiers)) {
            parts.push_back(firm_margin(*tr, dataset_, tariff));
            for (std::size_t t = 0; t < tr->n_epochs; ++t) {
                for (std::size_t g = 0; g < tr->n_homes(); ++g) run.pooled_total_soc[t] += tr->soc_start(t, g);
            }
        }
        run.pooled = merge_reports(parts);

        const double n = static_cast<double>(out.retained.size());
        row.standalone_firm_per_home = run.standalone.total_firm_usd / n;
        row.pooled_firm_per_home = run.pooled.total_firm_usd / n;
        row.pooling_benefit_per_home = pooling_benefit_per_home(run.standalone, run.pooled);
        row.benefit_pct = 100.0 * row.pooling_benefit_per_home / row.standalone_firm_per_home;
        out.runs.push_back(std::move(run));
        out.rows.push_back(row);
    }
    return out;
}

ScreenResult screen_cohort(const FleetDataset& dataset, const RolloutConfig& config, const ExperimentOptions& options) {
    return Experiment(dataset, config, options).screen();
}

CapSpectrum cap_spectrum(const FleetDataset& dataset, const ScreenResult& screen, std::span<const int> caps,
                         const RolloutConfig& config, const ExperimentOptions& options) {
    return Experiment(dataset, config, options).cap_spectrum(screen, caps);
}

std::vector<SocPoint> soc_trajectory(const CapSpectrum& spectrum) {
    std::vector<SocPoint> out;
    for (const auto& run : spectrum.runs) {
        for (std::size_t t = 0; t < run.pooled_total_soc.size(); ++t) {
            out.push_back({t, run.cap_hours, run.pooled_total_soc[t]});
        }
    }
    return out;
}

ScreenResult read_screen_csv(const std::filesystem::path& path, const FleetDataset& dataset) {
    csv::Reader in(path);
    in.expect_header("home_id,t_maxfeas_hours,dropped,reason");
    std::vector<std::optional<ScreenEntry>> by_home(dataset.homes.size());
    std::string line;
    while (in.next(line)) {
        const auto f = csv::split(line);
        if (f.size() != 4) in.fail("expected 4 fields");
        ScreenEntry e;
        e.home_id = std::string(csv::trim(f[0]));
        try {
            e.home = dataset.find_home(e.home_id);
        } catch (const ConfigError&) {
            in.fail("unknown home '" + e.home_id + "'");
        }
        const long t = in.integer(f[1]);
        const long dropped = in.integer(f[2]);
        if (dropped != 0 && dropped != 1) in.fail("dropped must be 0 or 1");
        e.dropped = dropped == 1;
        if (e.dropped ? t != 0 : !is_menu_tier(static_cast<int>(t))) in.fail("tier inconsistent with dropped flag");
        e.t_maxfeas = static_cast<int>(t);
        e.reason = std::string(csv::trim(f[3]));
        if (by_home[e.home]) in.fail("home listed twice");
        by_home[e.home] = std::move(e);
    }
    ScreenResult out;
    for (auto& e : by_home) {
        if (e) out.entries.push_back(std::move(*e));
    }
    return out;
}

std::vector<int> read_tiers_csv(const std::filesystem::path& path, const FleetDataset& dataset) {
    csv::Reader in(path);
    in.expect_header("home_id,tier_hours");
    std::vector<int> tiers(dataset.homes.size(), 0);
    std::string line;
    while (in.next(line)) {
        const auto f = csv::split(line);
        if (f.size() != 2) in.fail("expected 2 fields");
        std::size_t home = 0;
        try {
            home = dataset.find_home(std::string(csv::trim(f[0])));
        } catch (const ConfigError&) {
            in.fail("unknown home '" + std::string(csv::trim(f[0])) + "'");
        }
        const long t = in.integer(f[1]);
        if (!is_menu_tier(static_cast<int>(t))) in.fail("tier " + std::to_string(t) + " is not on the menu");
        if (tiers[home] != 0) in.fail("home listed twice");
        tiers[home] = static_cast<int>(t);
    }
    return tiers;
}

void write_screen_csv(const std::filesystem::path& path, const ScreenResult& screen) {
    auto out = csv::open_out(path);
    std::string buf = "home_id,t_maxfeas_hours,dropped,reason\n";
    for (const auto& e : screen.entries) {
        std::string reason = e.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        buf += e.home_id + ',' + std::to_string(e.t_maxfeas) + ',' + (e.dropped ? "1" : "0") + ',' + reason + '\n';
    }
    out << buf;
}

void write_cap_spectrum_csv(const std::filesystem::path& path, const CapSpectrum& spectrum) {
    auto out = csv::open_out(path);
    std::string buf = "cap_hours,homes_at_cap,standalone_firm_per_home_usd,pooling_benefit_per_home_usd,benefit_pct\n";
    for (const auto& r : spectrum.rows) {
        buf += std::to_string(r.cap_hours) + ',' + std::to_string(r.homes_at_cap) + ',';
        csv::append_number(buf, r.standalone_firm_per_home);
        buf += ',';
        csv::append_number(buf, r.pooling_benefit_per_home);
        buf += ',';
        csv::append_number(buf, r.benefit_pct);
        buf += '\n';
    }
    out << buf;
}

void write_soc_by_cap_csv(const std::filesystem::path& path, std::span<const SocPoint> points) {
    auto out = csv::open_out(path);
    std::string buf = "epoch,cap_hours,total_soc_kwh\n";
    for (const auto& p : points) {
        buf += std::to_string(p.epoch) + ',' + std::to_string(p.cap_hours) + ',';
        csv::append_number(buf, p.total_soc_kwh);
        buf += '\n';
    }
    out << buf;
}

void write_margins_csv(const std::filesystem::path& path, const MarginReport& report) {
    auto out = csv::open_out(path);
    std::string buf = "home_id,dispatch_margin_usd,subscription_usd,firm_margin_usd\n";
    for (const auto& h : report.homes) {
        buf += h.home_id + ',';
        csv::append_number(buf, h.dispatch_usd);
        buf += ',';
        csv::append_number(buf, h.subscription_usd);
        buf += ',';
        csv::append_number(buf, h.firm_usd);
        buf += '\n';
    }
    out << buf;
}

}  // namespace bpool
