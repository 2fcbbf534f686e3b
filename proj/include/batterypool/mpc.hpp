#pragma once

#include "batterypool/dispatch.hpp"
#include "batterypool/forecast.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bpool {

enum class EInitPolicy { fraction_of_capacity, reserve_floor, fixed };
EInitPolicy parse_e_init_policy(std::string_view name);
std::string to_string(EInitPolicy policy);

struct RolloutConfig {
    std::size_t horizon = 96;
    std::optional<double> salvage_override;  // USD/kWh
    EInitPolicy e_init_policy = EInitPolicy::fraction_of_capacity;
    double e_init_fraction = 0.5;
    std::vector<double> e_init_fixed;  // kWh per dataset home, used by EInitPolicy::fixed
    /// Pooled runs only: false pins every sharing flow at zero.
    bool sharing = true;
    std::string backend = "reference";
    SolverOptions solver;
    Tariff tariff;

    /// Throws ConfigError.
    void validate() const;
};

/// Which homes a rollout controls and how. Tiers are backup hours aligned
/// with `homes`; tier 0 means no reserve floor.
struct RolloutMode {
    bool pooled = false;
    std::vector<std::size_t> homes;
    std::vector<int> tiers;

    static RolloutMode standalone(std::size_t home, int tier) { return {false, {home}, {tier}}; }
    static RolloutMode pool(std::vector<std::size_t> homes, std::vector<int> tiers) {
        return {true, std::move(homes), std::move(tiers)};
    }
};

/// Realized outcome of a one-week receding-horizon run. Per-home arrays are
/// indexed [epoch * n_homes + g] with g the position in `homes`.
struct TrajectoryRecord {
    bool pooled = false;
    std::size_t n_epochs = 0;
    std::vector<std::size_t> homes;
    std::vector<std::string> home_ids;
    std::vector<double> e_init;                        // kWh per home
    std::vector<std::array<double, kAllFlows>> flows;  // realized flows incl. implemented controls
    std::vector<double> soc;                           // post-decision energy, kWh
    std::vector<double> floor;                         // reserve floor on the post-decision energy, kWh
    std::vector<double> margin;                        // realized dispatch margin, USD
    std::vector<char> feasible;                        // per epoch

    std::size_t n_homes() const noexcept { return homes.size(); }
    std::size_t at(std::size_t epoch, std::size_t g) const noexcept { return epoch * homes.size() + g; }
    /// Energy at the start of an epoch.
    double soc_start(std::size_t epoch, std::size_t g) const {
        return epoch == 0 ? e_init[g] : soc[at(epoch - 1, g)];
    }
    double dispatch_margin(std::size_t g) const;
    bool operator==(const TrajectoryRecord&) const = default;
};

/// Initial energy for a dataset home under the configured policy, clamped
/// into [0, e_max]. `floor_profile` may be null when no floor applies.
double initial_energy(const FleetDataset& dataset, std::size_t home, const QuarterProfile* floor_profile,
                      const RolloutConfig& config);

/// Runs every epoch of the dataset's grid. Infeasible epochs are flagged,
/// hold SoC and route passively. Throws ResourceError naming the epoch when
/// the solver gives up.
TrajectoryRecord rollout(const FleetDataset& dataset, const ForecastSet& forecasts, const ReserveBook& reserves,
                         const RolloutConfig& config, const RolloutMode& mode);

/// Horizon LP inputs the rollout assembles at `epoch` when the mode's homes
/// hold `energy` kWh.
HorizonInputs epoch_inputs(const FleetDataset& dataset, const ForecastSet& forecasts, const ReserveBook& reserves,
                           const RolloutConfig& config, const RolloutMode& mode, std::size_t epoch,
                           std::span<const double> energy);

/// Feasible iff no epoch was flagged and every post-decision SoC met its
/// floor within 1e-7.
bool trajectory_feasible(const TrajectoryRecord& trajectory);

/// Standalone feasibility of one home at a backup tier. A floor above
/// capacity at any quarter-hour decides infeasibility without a rollout.
bool classify_feasibility(const FleetDataset& dataset, const ForecastSet& forecasts, const ReserveBook& reserves,
                          std::size_t home, int tier, const RolloutConfig& config);

/// `trajectory.csv`, one row per epoch and home.
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& trajectory);
/// Several records in one file, record by record.
void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRecord* const> trajectories);

}  // namespace bpool
