#include "batterypool/mpc.hpp"

#include "batterypool/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bpool {

namespace {

constexpr double kFloorTolerance = 1e-7;

struct Controls {
    double u_ch = 0.0;
    double u_dis = 0.0;
    double e_next = 0.0;
};

/// Implements planned controls against the battery limits; charging is
/// trimmed first when the next state would overshoot capacity.
Controls implement(double e, double u_ch, double u_dis, const BatterySpec& b, double delta) {
    Controls c{std::clamp(u_ch, 0.0, b.p_ch_max), std::clamp(u_dis, 0.0, b.p_dis_max), 0.0};
    auto next = [&] { return e + b.eta_ch * delta * c.u_ch - delta / b.eta_dis * c.u_dis; };
    c.e_next = next();
    if (c.e_next > b.e_max) {
        c.u_ch = std::max(0.0, c.u_ch - (c.e_next - b.e_max) / (b.eta_ch * delta));
        c.e_next = next();
    }
    if (c.e_next < 0.0) {
        c.u_dis = std::max(0.0, c.u_dis + c.e_next * b.eta_dis / delta);
        c.e_next = next();
    }
    c.e_next = std::clamp(c.e_next, 0.0, b.e_max);
    return c;
}

std::array<double, kAllFlows> passive_flows(double load, double solar) {
    std::array<double, kAllFlows> f{};
    const double net = load - solar;
    f[static_cast<std::size_t>(Flow::m_imp)] = std::max(net, 0.0);
    f[static_cast<std::size_t>(Flow::x_s)] = std::max(-net, 0.0);
    return f;
}

void append_trajectory(std::string& buf, const TrajectoryRecord& tr);

void check_mode(const FleetDataset& dataset, const ForecastSet& forecasts, const RolloutMode& mode) {
    if (mode.homes.empty()) throw ConfigError("rollout needs at least one home");
    if (!mode.pooled && mode.homes.size() != 1) throw ConfigError("standalone rollouts control exactly one home");
    if (mode.tiers.size() != mode.homes.size()) throw ConfigError("one tier per home is required");
    std::set<std::size_t> seen;
    for (std::size_t h : mode.homes) {
        if (h >= dataset.homes.size()) throw ConfigError("home index out of range");
        if (!seen.insert(h).second) throw ConfigError("a home appears twice in one pool");
    }
    for (int t : mode.tiers) {
        if (t != 0 && !is_menu_tier(t)) throw ConfigError("tier " + std::to_string(t) + " is not on the menu");
    }
    if (forecasts.l_hat.size() != dataset.homes.size() || forecasts.s_hat.size() != dataset.homes.size()) {
        throw ShapeError("forecasts do not cover the dataset's homes");
    }
    if (dataset.prices.usd_per_kwh.size() != dataset.grid.n_intervals()) {
        throw ShapeError("price series does not match the grid");
    }
}

HorizonInputs sized_inputs(const FleetDataset& dataset, const RolloutConfig& config, const RolloutMode& mode) {
    HorizonInputs in;
    in.horizon = config.horizon;
    in.delta = kDeltaHours;
    in.tariff = config.tariff;
    in.lambda_hat.resize(config.horizon);
    in.homes.resize(mode.homes.size());
    for (std::size_t g = 0; g < mode.homes.size(); ++g) {
        in.homes[g].spec = dataset.homes[mode.homes[g]].battery;
        in.homes[g].l_hat.resize(config.horizon);
        in.homes[g].s_hat.resize(config.horizon);
        in.homes[g].reserve.resize(config.horizon);
    }
    return in;
}

/// Forecast window, floors and starting energies of epoch t. The floor for
/// step h applies to the energy at the start of interval t + h + 1.
void fill_epoch(HorizonInputs& in, const FleetDataset& dataset, const ForecastSet& forecasts,
                std::span<const QuarterProfile* const> floors, const RolloutConfig& config, const RolloutMode& mode,
                std::size_t t, std::span<const double> energy) {
    const auto& grid = dataset.grid;
    for (std::size_t h = 0; h < in.horizon; ++h) {
        const int q = grid.quarter_of_day(t + h);
        const int q_next = grid.quarter_of_day(t + h + 1);
        in.lambda_hat[h] = forecasts.lambda_hat[q];
        for (std::size_t g = 0; g < in.homes.size(); ++g) {
            in.homes[g].l_hat[h] = forecasts.l_hat[mode.homes[g]][q];
            in.homes[g].s_hat[h] = forecasts.s_hat[mode.homes[g]][q];
            in.homes[g].reserve[h] = (*floors[g])[q_next];
        }
    }
    for (std::size_t g = 0; g < in.homes.size(); ++g) in.homes[g].e_init = energy[g];
    in.salvage = config.salvage_override ? *config.salvage_override
                                         : default_salvage(in.lambda_hat, config.tariff.c_tdsp);
}

const QuarterProfile kNoFloor{};

std::vector<const QuarterProfile*> floor_rows(const ReserveBook& reserves, const RolloutMode& mode) {
    std::vector<const QuarterProfile*> out;
    for (std::size_t g = 0; g < mode.homes.size(); ++g) {
        out.push_back(mode.tiers[g] == 0 ? &kNoFloor : &reserves.at(mode.homes[g], mode.tiers[g]));
    }
    return out;
}

}  // namespace

EInitPolicy parse_e_init_policy(std::string_view name) {
    if (name == "fraction_of_capacity") return EInitPolicy::fraction_of_capacity;
    if (name == "reserve_floor") return EInitPolicy::reserve_floor;
    if (name == "fixed") return EInitPolicy::fixed;
    throw ConfigError("unknown initial-energy policy '" + std::string(name) + "'");
}

std::string to_string(EInitPolicy policy) {
    switch (policy) {
        case EInitPolicy::fraction_of_capacity: return "fraction_of_capacity";
        case EInitPolicy::reserve_floor: return "reserve_floor";
        case EInitPolicy::fixed: return "fixed";
    }
    return "?";
}

void RolloutConfig::validate() const {
    if (horizon == 0) throw ConfigError("horizon must be at least one step");
    if (salvage_override && !std::isfinite(*salvage_override)) throw ConfigError("salvage override must be finite");
    if (!(e_init_fraction >= 0.0 && e_init_fraction <= 1.0)) throw ConfigError("initial fraction must lie in [0, 1]");
    for (double v : e_init_fixed) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("fixed initial energy must be finite and nonnegative");
    }
    if (!has_backend(backend)) throw ConfigError("unknown solver backend '" + backend + "'");
    try {
        tariff.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

double TrajectoryRecord::dispatch_margin(std::size_t g) const {
    double total = 0.0;
    for (std::size_t t = 0; t < n_epochs; ++t) total += margin[at(t, g)];
    return total;
}

double initial_energy(const FleetDataset& dataset, std::size_t home, const QuarterProfile* floor_profile,
                      const RolloutConfig& config) {
    const double e_max = dataset.homes.at(home).battery.e_max;
    double e = 0.0;
    switch (config.e_init_policy) {
        case EInitPolicy::fraction_of_capacity: e = config.e_init_fraction * e_max; break;
        case EInitPolicy::reserve_floor:
            e = floor_profile ? (*floor_profile)[dataset.grid.quarter_of_day(1)] : 0.0;
            break;
        case EInitPolicy::fixed:
            if (home >= config.e_init_fixed.size()) throw ConfigError("no fixed initial energy for this home");
            e = config.e_init_fixed[home];
            break;
    }
    return std::clamp(e, 0.0, e_max);
}

TrajectoryRecord rollout(const FleetDataset& dataset, const ForecastSet& forecasts, const ReserveBook& reserves,
                         const RolloutConfig& config, const RolloutMode& mode) {
    config.validate();
    check_mode(dataset, forecasts, mode);
    const auto& grid = dataset.grid;
    const std::size_t n = mode.homes.size();
    const double delta = kDeltaHours;
    const auto& tariff = config.tariff;

    TrajectoryRecord rec;
    rec.pooled = mode.pooled;
    rec.n_epochs = grid.n_intervals();
    rec.homes = mode.homes;

    const auto floors = floor_rows(reserves, mode);
    std::vector<std::vector<double>> load(n), solar(n);
    std::vector<double> e(n);
    for (std::size_t g = 0; g < n; ++g) {
        const auto& home = dataset.homes[mode.homes[g]];
        load[g] = resample_to_quarter_hour(home.load_kw);
        solar[g] = resample_to_quarter_hour(home.solar_kw);
        e[g] = initial_energy(dataset, mode.homes[g], mode.tiers[g] == 0 ? nullptr : floors[g], config);
        rec.home_ids.push_back(home.home_id);
    }
    rec.e_init = e;

    HorizonInputs in = sized_inputs(dataset, config, mode);
    const std::size_t total = rec.n_epochs * n;
    rec.flows.resize(total);
    rec.soc.resize(total);
    rec.floor.resize(total);
    rec.margin.resize(total);
    rec.feasible.resize(rec.n_epochs);
    std::vector<RoutingHome> routing(n);

    for (std::size_t t = 0; t < rec.n_epochs; ++t) {
        fill_epoch(in, dataset, forecasts, floors, config, mode, t, e);

        const auto built = mode.pooled ? build_pooled(in, config.sharing) : build_standalone(in, 0);
        LpSolution sol;
        try {
            sol = solve_with(built.problem, config.backend, config.solver);
        } catch (const ResourceError& err) {
            throw ResourceError("epoch " + std::to_string(t) + ": " + err.what());
        }

        const double price = dataset.prices.usd_per_kwh[t];
        const int q_post = grid.quarter_of_day(t + 1);
        rec.feasible[t] = sol.status == LpStatus::optimal;
        if (rec.feasible[t]) {
            const auto plan = decode(built.problem, sol, built.layout);
            std::vector<Controls> ctl(n);
            for (std::size_t g = 0; g < n; ++g) {
                ctl[g] = implement(e[g], plan.flow(g, 0, Flow::u_ch), plan.flow(g, 0, Flow::u_dis),
                                   in.homes[g].spec, delta);
                routing[g] = RoutingHome{load[g][t], solar[g][t], ctl[g].u_ch, ctl[g].u_dis};
            }
            const auto route = build_routing(routing, price, tariff, delta, mode.pooled, config.sharing);
            const auto route_sol = solve_with(route.problem, config.backend, config.solver);
            if (route_sol.status != LpStatus::optimal) {
                throw Error("epoch " + std::to_string(t) + ": realized routing is " + to_string(route_sol.status));
            }
            const auto realized = decode(route.problem, route_sol, route.layout);
            for (std::size_t g = 0; g < n; ++g) {
                rec.flows[rec.at(t, g)] = realized.flows[g];
                e[g] = ctl[g].e_next;
            }
        } else {
            for (std::size_t g = 0; g < n; ++g) rec.flows[rec.at(t, g)] = passive_flows(load[g][t], solar[g][t]);
        }
        for (std::size_t g = 0; g < n; ++g) {
            const std::size_t i = rec.at(t, g);
            rec.soc[i] = e[g];
            rec.floor[i] = (*floors[g])[q_post];
            rec.margin[i] = step_margin(rec.flows[i], load[g][t], price, tariff, delta);
        }
    }
    return rec;
}

HorizonInputs epoch_inputs(const FleetDataset& dataset, const ForecastSet& forecasts, const ReserveBook& reserves,
                           const RolloutConfig& config, const RolloutMode& mode, std::size_t epoch,
                           std::span<const double> energy) {
    config.validate();
    check_mode(dataset, forecasts, mode);
    if (energy.size() != mode.homes.size()) throw ShapeError("one starting energy per home is required");
    HorizonInputs in = sized_inputs(dataset, config, mode);
    fill_epoch(in, dataset, forecasts, floor_rows(reserves, mode), config, mode, epoch, energy);
    return in;
}

bool trajectory_feasible(const TrajectoryRecord& trajectory) {
    for (char f : trajectory.feasible) {
        if (!f) return false;
    }
    for (std::size_t i = 0; i < trajectory.soc.size(); ++i) {
        if (trajectory.soc[i] < trajectory.floor[i] - kFloorTolerance) return false;
    }
    return true;
}

bool classify_feasibility(const FleetDataset& dataset, const ForecastSet& forecasts, const ReserveBook& reserves,
                          std::size_t home, int tier, const RolloutConfig& config) {
    if (!is_menu_tier(tier)) throw ConfigError("tier " + std::to_string(tier) + " is not on the menu");
    const auto& floor = reserves.at(home, tier);
    const double e_max = dataset.homes.at(home).battery.e_max;
    if (*std::max_element(floor.begin(), floor.end()) > e_max) return false;
    return trajectory_feasible(rollout(dataset, forecasts, reserves, config, RolloutMode::standalone(home, tier)));
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& trajectory) {
    const TrajectoryRecord* one[] = {&trajectory};
    write_trajectory_csv(path, one);
}

void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRecord* const> trajectories) {
    auto out = csv::open_out(path);
    std::string buf =
        "epoch,home_id,u_ch_kw,u_dis_kw,m_imp_kw,x_s_kw,x_b_kw,z_kw,c_kw,y_s_kw,y_b_kw,w_l_kw,w_c_kw,soc_kwh,"
        "margin_usd,feasible\n";
    for (const auto* tr : trajectories) append_trajectory(buf, *tr);
    out << buf;
}

namespace {

void append_trajectory(std::string& buf, const TrajectoryRecord& tr) {
    constexpr Flow kColumns[] = {Flow::u_ch, Flow::u_dis, Flow::m_imp, Flow::x_s, Flow::x_b, Flow::z,
                                 Flow::c,    Flow::y_s,   Flow::y_b,   Flow::w_l, Flow::w_c};
    for (std::size_t t = 0; t < tr.n_epochs; ++t) {
        for (std::size_t g = 0; g < tr.n_homes(); ++g) {
            const std::size_t i = tr.at(t, g);
            buf += std::to_string(t) + ',' + tr.home_ids[g];
            for (Flow f : kColumns) {
                buf += ',';
                csv::append_number(buf, tr.flows[i][static_cast<std::size_t>(f)]);
            }
            buf += ',';
            csv::append_number(buf, tr.soc[i]);
            buf += ',';
            csv::append_number(buf, tr.margin[i]);
            buf += tr.feasible[t] ? ",1\n" : ",0\n";
        }
    }
}

}  // namespace

}  // namespace bpool
