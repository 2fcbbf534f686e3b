#pragma once

#include "batterypool/mpc.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bpool {

struct HomeMargin {
    std::string home_id;
    double dispatch_usd = 0.0;
    double subscription_usd = 0.0;
    double firm_usd = 0.0;
};

struct MarginReport {
    std::vector<HomeMargin> homes;
    double total_dispatch_usd = 0.0;
    double total_subscription_usd = 0.0;
    double total_firm_usd = 0.0;

    double firm_per_home() const { return homes.empty() ? 0.0 : total_firm_usd / static_cast<double>(homes.size()); }
};

/// Weekly dispatch margin per home plus the pro-rated subscription.
MarginReport firm_margin(const TrajectoryRecord& trajectory, const FleetDataset& dataset, const Tariff& tariff);

/// Sums several reports (pool partitions) home by home, in order.
MarginReport merge_reports(std::span<const MarginReport> parts);

/// (pooled total firm - standalone total firm) / number of homes.
double pooling_benefit_per_home(const MarginReport& standalone, const MarginReport& pooled);

struct ExperimentOptions {
    int k_f = kDefaultForecastWindow;
    int k_b = kDefaultReserveWindow;
    double quantile = kDefaultReserveQuantile;
    /// Homes per pool in pooled runs; 0 puts the whole cohort in one pool.
    std::size_t pool_size = 0;
};

struct ScreenEntry {
    std::size_t home = 0;
    std::string home_id;
    int t_maxfeas = 0;  // hours; 0 when dropped
    bool dropped = false;
    std::string reason;
};

struct ScreenResult {
    std::vector<ScreenEntry> entries;  // dataset order

    std::vector<std::size_t> retained() const;
    std::vector<int> retained_tiers() const;  // T_maxfeas aligned with retained()
    std::vector<std::size_t> dropped() const;
};

struct CapRow {
    int cap_hours = 0;
    std::size_t homes_at_cap = 0;
    double standalone_firm_per_home = 0.0;
    double pooled_firm_per_home = 0.0;
    double pooling_benefit_per_home = 0.0;
    double benefit_pct = 0.0;  // percent of standalone firm margin per home
};

struct CapRun {
    int cap_hours = 0;
    std::vector<int> tiers;  // aligned with the retained homes
    MarginReport standalone;
    MarginReport pooled;
    std::vector<double> pooled_total_soc;  // per epoch, at interval start
};

struct CapSpectrum {
    std::vector<std::size_t> retained;
    std::vector<CapRun> runs;
    std::vector<CapRow> rows;
};

struct SocPoint {
    std::size_t epoch = 0;
    int cap_hours = 0;
    double total_soc_kwh = 0.0;
};

/// Forecasts, reserves and cached rollouts for one dataset and configuration.
/// Standalone rollouts are cached by (home, tier); pooled ones by the pool's
/// homes and tiers.
class Experiment {
public:
    Experiment(FleetDataset dataset, RolloutConfig config, ExperimentOptions options = {});

    const FleetDataset& dataset() const noexcept { return dataset_; }
    const ForecastSet& forecasts() const noexcept { return forecasts_; }
    const ReserveBook& reserves() const noexcept { return reserves_; }
    const RolloutConfig& config() const noexcept { return config_; }
    const ExperimentOptions& options() const noexcept { return options_; }

    const TrajectoryRecord& standalone(std::size_t home, int tier);
    const TrajectoryRecord& pooled(const std::vector<std::size_t>& homes, const std::vector<int>& tiers);
    /// Pools in consecutive chunks of options().pool_size (0: one pool).
    std::vector<const TrajectoryRecord*> pooled_partitioned(const std::vector<std::size_t>& homes,
                                                            const std::vector<int>& tiers);

    /// Standalone feasibility with the capacity shortcut.
    bool feasible(std::size_t home, int tier);

    /// Longest tier such that the home is feasible at it and at every
    /// shorter tier; homes infeasible at the shortest tier are dropped.
    ScreenResult screen();

    /// Standalone and pooled reruns of the retained cohort under
    /// T_g = min(T_maxfeas, cap) for every cap. Throws ConfigError for caps
    /// off the menu or an empty cohort.
    CapSpectrum cap_spectrum(const ScreenResult& screen, std::span<const int> caps);

    /// Every rollout run so far.
    std::vector<const TrajectoryRecord*> trajectories() const;

    std::size_t standalone_runs() const noexcept { return standalone_cache_.size(); }
    std::size_t pooled_runs() const noexcept { return pooled_cache_.size(); }

private:
    FleetDataset dataset_;
    RolloutConfig config_;
    ExperimentOptions options_;
    ForecastSet forecasts_;
    ReserveBook reserves_;
    std::map<std::pair<std::size_t, int>, std::unique_ptr<TrajectoryRecord>> standalone_cache_;
    std::map<std::pair<std::vector<std::size_t>, std::vector<int>>, std::unique_ptr<TrajectoryRecord>> pooled_cache_;
};

ScreenResult screen_cohort(const FleetDataset& dataset, const RolloutConfig& config,
                           const ExperimentOptions& options = {});
CapSpectrum cap_spectrum(const FleetDataset& dataset, const ScreenResult& screen, std::span<const int> caps,
                         const RolloutConfig& config, const ExperimentOptions& options = {});

/// Total pooled state of charge at the start of every interval, per cap.
std::vector<SocPoint> soc_trajectory(const CapSpectrum& spectrum);

/// Reads `screen.csv` back; homes are matched to the dataset by id and
/// returned in dataset order. Throws ParseError or ConfigError.
ScreenResult read_screen_csv(const std::filesystem::path& path, const FleetDataset& dataset);

/// Reads an explicit tier file `home_id,tier_hours`. Returns one tier per
/// dataset home, 0 for homes not listed.
std::vector<int> read_tiers_csv(const std::filesystem::path& path, const FleetDataset& dataset);

void write_screen_csv(const std::filesystem::path& path, const ScreenResult& screen);
void write_cap_spectrum_csv(const std::filesystem::path& path, const CapSpectrum& spectrum);
void write_soc_by_cap_csv(const std::filesystem::path& path, std::span<const SocPoint> points);
/// `margins.csv`: home_id,dispatch_margin_usd,subscription_usd,firm_margin_usd
void write_margins_csv(const std::filesystem::path& path, const MarginReport& report);

}  // namespace bpool
