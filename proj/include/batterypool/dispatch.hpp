#pragma once

#include "batterypool/domain.hpp"
#include "batterypool/lp.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace bpool {

/// Per-step flows of one home, kW. The first seven exist in every model; the
/// sharing flows only in pooled models.
enum class Flow : std::size_t { m_imp, u_ch, u_dis, z, x_s, x_b, c, y_s, y_b, w_l, w_c };
inline constexpr std::size_t kStandaloneFlows = 7;
inline constexpr std::size_t kPooledFlows = 11;
inline constexpr std::size_t kAllFlows = kPooledFlows;
const char* flow_name(Flow f) noexcept;

struct HomeHorizon {
    BatterySpec spec;
    std::vector<double> l_hat;    // kW, per step h
    std::vector<double> s_hat;    // kW, per step h
    std::vector<double> reserve;  // kWh floor on e after step h (i.e. e_{h+1})
    double e_init = 0.0;          // kWh
};

struct HorizonInputs {
    std::size_t horizon = 96;
    double delta = kDeltaHours;
    std::vector<double> lambda_hat;  // USD/kWh per step
    double salvage = 0.0;            // USD/kWh on terminal energy
    Tariff tariff;
    std::vector<HomeHorizon> homes;

    /// Throws ShapeError / ValidationError.
    void validate() const;
};

/// Median over the horizon of (lambda_hat + c_tdsp); lower middle for even
/// counts.
double default_salvage(std::span<const double> lambda_hat, double c_tdsp);

/// Deterministic variable numbering: home-major blocks, each holding the
/// per-step flows (step-major) followed by e_0..e_H when state is modeled.
struct DispatchLayout {
    std::size_t n_homes = 1;
    std::size_t horizon = 1;
    bool pooled = false;
    bool with_soc = true;

    std::size_t flows_per_step() const noexcept { return pooled ? kPooledFlows : kStandaloneFlows; }
    std::size_t home_block() const noexcept { return flows_per_step() * horizon + (with_soc ? horizon + 1 : 0); }
    std::size_t n_vars() const noexcept { return n_homes * home_block(); }
    std::size_t flow(std::size_t g, std::size_t h, Flow f) const;
    std::size_t soc(std::size_t g, std::size_t h) const;
};

struct BuiltLp {
    LpProblem problem;
    DispatchLayout layout;
};

/// Single-home horizon LP for inputs.homes[home].
BuiltLp build_standalone(const HorizonInputs& inputs, std::size_t home = 0);

/// One LP over every home in inputs with pool conservation and no-self-supply
/// rows per step. sharing = false fixes all sharing flows at zero, as does a
/// pool of one home.
BuiltLp build_pooled(const HorizonInputs& inputs, bool sharing = true);

/// Realized data for one interval and one home, with battery controls fixed.
struct RoutingHome {
    double load_kw = 0.0;
    double solar_kw = 0.0;
    double u_ch = 0.0;
    double u_dis = 0.0;
};

/// Single-interval routing LP maximizing the realized one-step margin with
/// u_ch and u_dis pinned. Pooled adds the sharing flows and pool rows.
BuiltLp build_routing(std::span<const RoutingHome> homes, double price, const Tariff& tariff, double delta,
                      bool pooled, bool sharing = true);

struct DispatchPlan {
    std::size_t n_homes = 0;
    std::size_t horizon = 0;
    bool pooled = false;
    std::vector<std::array<double, kAllFlows>> flows;  // [g * horizon + h], sharing flows zero if standalone
    std::vector<double> soc;                           // [g * (horizon + 1) + h], empty without state
    double objective_value = 0.0;

    double flow(std::size_t g, std::size_t h, Flow f) const {
        return flows[g * horizon + h][static_cast<std::size_t>(f)];
    }
    double e(std::size_t g, std::size_t h) const { return soc[g * (horizon + 1) + h]; }
};

/// Maps an optimal solution back onto flows and states. Throws DecodeError
/// for non-optimal solutions or mismatched shapes.
DispatchPlan decode(const LpProblem& problem, const LpSolution& solution, const DispatchLayout& layout);

/// Dispatch margin of one home for one step, USD:
/// delta·[p_ret·L − (λ + c_tdsp)·m + λ·(x_s + x_b) − β·(z + x_s + y_s)].
double step_margin(const std::array<double, kAllFlows>& flows, double load_kw, double price, const Tariff& tariff,
                   double delta);

}  // namespace bpool
