#include "batterypool/dispatch.hpp"

#include "batterypool/error.hpp"

#include <algorithm>
#include <cmath>

namespace bpool {

namespace {

constexpr auto idx(Flow f) { return static_cast<std::size_t>(f); }

/// Objective coefficients of the flows for one step (maximize).
struct StepCoefficients {
    double m_imp, z, x_s, x_b, y_s;
};

StepCoefficients step_coefficients(double price, const Tariff& t, double delta) {
    return {-delta * (price + t.c_tdsp), -delta * t.beta, delta * (price - t.beta), delta * price, -delta * t.beta};
}

struct FlowBounds {
    std::array<double, kAllFlows> lower{};
    std::array<double, kAllFlows> upper{};
};

/// Bounds of one step's flows. Solar-fed flows are capped by the available
/// solar, battery-fed ones by the power ratings; both caps are implied by
/// the rows and only tighten the box.
FlowBounds flow_bounds(double solar, const BatterySpec& b, bool sharing) {
    FlowBounds fb;
    fb.lower.fill(0.0);
    fb.upper[idx(Flow::m_imp)] = kInf;
    fb.upper[idx(Flow::u_ch)] = b.p_ch_max;
    fb.upper[idx(Flow::u_dis)] = b.p_dis_max;
    fb.upper[idx(Flow::z)] = solar;
    fb.upper[idx(Flow::x_s)] = solar;
    fb.upper[idx(Flow::x_b)] = b.p_dis_max;
    fb.upper[idx(Flow::c)] = solar;
    fb.upper[idx(Flow::y_s)] = sharing ? solar : 0.0;
    fb.upper[idx(Flow::y_b)] = sharing ? b.p_dis_max : 0.0;
    fb.upper[idx(Flow::w_l)] = sharing ? kInf : 0.0;
    fb.upper[idx(Flow::w_c)] = sharing ? b.p_ch_max : 0.0;
    return fb;
}

void set_step_vars(LpProblem& p, const DispatchLayout& lay, std::size_t g, std::size_t h, const FlowBounds& fb,
                   const StepCoefficients& sc) {
    for (std::size_t f = 0; f < lay.flows_per_step(); ++f) {
        const std::size_t j = lay.flow(g, h, static_cast<Flow>(f));
        p.var_lower[j] = fb.lower[f];
        p.var_upper[j] = fb.upper[f];
        p.objective[j] = 0.0;
    }
    p.objective[lay.flow(g, h, Flow::m_imp)] = sc.m_imp;
    p.objective[lay.flow(g, h, Flow::z)] = sc.z;
    p.objective[lay.flow(g, h, Flow::x_s)] = sc.x_s;
    p.objective[lay.flow(g, h, Flow::x_b)] = sc.x_b;
    if (lay.pooled) p.objective[lay.flow(g, h, Flow::y_s)] = sc.y_s;
}

/// Balance, routing, solar and grid-charging rows of one home-step.
void add_step_rows(LpProblem& p, const DispatchLayout& lay, std::size_t g, std::size_t h, double net, double solar) {
    auto v = [&](Flow f) { return lay.flow(g, h, f); };
    if (lay.pooled) {
        p.add_row({v(Flow::m_imp), v(Flow::u_ch), v(Flow::u_dis), v(Flow::x_s), v(Flow::x_b), v(Flow::c),
                   v(Flow::w_l), v(Flow::w_c), v(Flow::y_s), v(Flow::y_b)},
                  {1.0, -1.0, 1.0, -1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0}, Relation::eq, net);
        p.add_row({v(Flow::z), v(Flow::w_c), v(Flow::u_ch)}, {1.0, 1.0, -1.0}, Relation::le, 0.0);
        p.add_row({v(Flow::x_b), v(Flow::y_b), v(Flow::u_dis)}, {1.0, 1.0, -1.0}, Relation::le, 0.0);
        p.add_row({v(Flow::z), v(Flow::x_s), v(Flow::y_s), v(Flow::c)}, {1.0, 1.0, 1.0, 1.0}, Relation::le, solar);
        p.add_row({v(Flow::m_imp), v(Flow::u_ch), v(Flow::z), v(Flow::w_c)}, {1.0, -1.0, 1.0, 1.0}, Relation::ge, 0.0);
    } else {
        p.add_row({v(Flow::m_imp), v(Flow::u_ch), v(Flow::u_dis), v(Flow::x_s), v(Flow::x_b), v(Flow::c)},
                  {1.0, -1.0, 1.0, -1.0, -1.0, -1.0}, Relation::eq, net);
        p.add_row({v(Flow::z), v(Flow::u_ch)}, {1.0, -1.0}, Relation::le, 0.0);
        p.add_row({v(Flow::x_b), v(Flow::u_dis)}, {1.0, -1.0}, Relation::le, 0.0);
        p.add_row({v(Flow::z), v(Flow::x_s), v(Flow::c)}, {1.0, 1.0, 1.0}, Relation::le, solar);
        p.add_row({v(Flow::m_imp), v(Flow::u_ch), v(Flow::z)}, {1.0, -1.0, 1.0}, Relation::ge, 0.0);
    }
}

/// Pool conservation and no-self-supply rows for step h.
void add_pool_rows(LpProblem& p, const DispatchLayout& lay, std::size_t h) {
    const std::size_t n = lay.n_homes;
    std::vector<std::size_t> index;
    std::vector<double> value;
    for (std::size_t g = 0; g < n; ++g) {
        for (Flow f : {Flow::w_l, Flow::w_c, Flow::y_s, Flow::y_b}) {
            index.push_back(lay.flow(g, h, f));
            value.push_back(f == Flow::w_l || f == Flow::w_c ? 1.0 : -1.0);
        }
    }
    p.add_row(std::move(index), std::move(value), Relation::eq, 0.0);
    for (std::size_t g = 0; g < n; ++g) {
        index.clear();
        value.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i == g) {
                index.push_back(lay.flow(g, h, Flow::w_l));
                index.push_back(lay.flow(g, h, Flow::w_c));
                value.push_back(1.0);
                value.push_back(1.0);
            } else {
                index.push_back(lay.flow(i, h, Flow::y_s));
                index.push_back(lay.flow(i, h, Flow::y_b));
                value.push_back(-1.0);
                value.push_back(-1.0);
            }
        }
        p.add_row(index, value, Relation::le, 0.0);
    }
}

void size_problem(LpProblem& p, std::size_t n) {
    p.n_vars = n;
    p.objective.assign(n, 0.0);
    p.var_lower.assign(n, 0.0);
    p.var_upper.assign(n, kInf);
}

BuiltLp build_horizon(const HorizonInputs& in, std::span<const std::size_t> which, bool pooled, bool sharing) {
    in.validate();
    // A pool of one has nobody to share with.
    sharing = sharing && which.size() > 1;
    const std::size_t horizon = in.horizon;
    BuiltLp out;
    out.layout = DispatchLayout{which.size(), horizon, pooled, true};
    const auto& lay = out.layout;
    auto& p = out.problem;
    size_problem(p, lay.n_vars());
    p.rows.reserve(which.size() * horizon * 6 + (pooled ? horizon * (which.size() + 1) : 0));

    const double d = in.delta;
    for (std::size_t g = 0; g < which.size(); ++g) {
        const auto& home = in.homes[which[g]];
        const auto& b = home.spec;
        for (std::size_t h = 0; h < horizon; ++h) {
            const double solar = home.s_hat[h];
            set_step_vars(p, lay, g, h, flow_bounds(solar, b, sharing), step_coefficients(in.lambda_hat[h], in.tariff, d));
            p.objective_constant += d * in.tariff.p_ret * home.l_hat[h];
        }
        const std::size_t e0 = lay.soc(g, 0);
        p.var_lower[e0] = home.e_init;
        p.var_upper[e0] = home.e_init;
        for (std::size_t h = 0; h < horizon; ++h) {
            const std::size_t e = lay.soc(g, h + 1);
            const double r = home.reserve[h];
            p.var_lower[e] = r <= b.e_max ? r : 0.0;
            p.var_upper[e] = b.e_max;
        }
        p.objective[lay.soc(g, horizon)] = in.salvage;

        for (std::size_t h = 0; h < horizon; ++h) {
            p.add_row({lay.soc(g, h + 1), lay.soc(g, h), lay.flow(g, h, Flow::u_ch), lay.flow(g, h, Flow::u_dis)},
                      {1.0, -1.0, -b.eta_ch * d, d / b.eta_dis}, Relation::eq, 0.0);
            add_step_rows(p, lay, g, h, home.l_hat[h] - home.s_hat[h], home.s_hat[h]);
            if (home.reserve[h] > b.e_max) {
                // Floor above capacity: keep bounds consistent and let the
                // row make the LP infeasible.
                p.add_row({lay.soc(g, h + 1)}, {1.0}, Relation::ge, home.reserve[h]);
            }
        }
    }
    if (pooled) {
        for (std::size_t h = 0; h < horizon; ++h) add_pool_rows(p, lay, h);
    }
    return out;
}

}  // namespace

const char* flow_name(Flow f) noexcept {
    switch (f) {
        case Flow::m_imp: return "m_imp";
        case Flow::u_ch: return "u_ch";
        case Flow::u_dis: return "u_dis";
        case Flow::z: return "z";
        case Flow::x_s: return "x_s";
        case Flow::x_b: return "x_b";
        case Flow::c: return "c";
        case Flow::y_s: return "y_s";
        case Flow::y_b: return "y_b";
        case Flow::w_l: return "w_l";
        case Flow::w_c: return "w_c";
    }
    return "?";
}

void HorizonInputs::validate() const {
    if (horizon == 0) throw ValidationError("horizon must be at least one step");
    if (!(delta > 0.0)) throw ValidationError("step length must be positive");
    if (lambda_hat.size() != horizon) throw ShapeError("price forecast length differs from the horizon");
    if (!std::isfinite(salvage)) throw ValidationError("salvage value must be finite");
    tariff.validate();
    for (const auto& h : homes) {
        h.spec.validate();
        if (h.l_hat.size() != horizon || h.s_hat.size() != horizon || h.reserve.size() != horizon) {
            throw ShapeError("home forecast or reserve length differs from the horizon");
        }
        if (!(h.e_init >= 0.0 && h.e_init <= h.spec.e_max)) {
            throw ValidationError("initial energy must lie in [0, e_max]");
        }
        for (std::size_t k = 0; k < horizon; ++k) {
            if (!(h.l_hat[k] >= 0.0) || !(h.s_hat[k] >= 0.0) || !std::isfinite(h.l_hat[k]) ||
                !std::isfinite(h.s_hat[k])) {
                throw ValidationError("load and solar forecasts must be finite and nonnegative");
            }
            if (!(h.reserve[k] >= 0.0) || !std::isfinite(h.reserve[k])) {
                throw ValidationError("reserve floors must be finite and nonnegative");
            }
        }
    }
    for (double v : lambda_hat) {
        if (!std::isfinite(v)) throw ValidationError("price forecast must be finite");
    }
}

double default_salvage(std::span<const double> lambda_hat, double c_tdsp) {
    if (lambda_hat.empty()) throw ShapeError("salvage needs at least one price");
    std::vector<double> v(lambda_hat.begin(), lambda_hat.end());
    for (auto& x : v) x += c_tdsp;
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

std::size_t DispatchLayout::flow(std::size_t g, std::size_t h, Flow f) const {
    const auto k = static_cast<std::size_t>(f);
    if (g >= n_homes || h >= horizon || k >= flows_per_step()) throw ShapeError("flow index out of range");
    return g * home_block() + h * flows_per_step() + k;
}

std::size_t DispatchLayout::soc(std::size_t g, std::size_t h) const {
    if (!with_soc || g >= n_homes || h > horizon) throw ShapeError("state index out of range");
    return g * home_block() + flows_per_step() * horizon + h;
}

BuiltLp build_standalone(const HorizonInputs& inputs, std::size_t home) {
    if (home >= inputs.homes.size()) throw ShapeError("home index out of range");
    const std::size_t which[] = {home};
    return build_horizon(inputs, which, false, false);
}

BuiltLp build_pooled(const HorizonInputs& inputs, bool sharing) {
    if (inputs.homes.empty()) throw ShapeError("a pool needs at least one home");
    std::vector<std::size_t> which(inputs.homes.size());
    for (std::size_t g = 0; g < which.size(); ++g) which[g] = g;
    return build_horizon(inputs, which, true, sharing);
}

BuiltLp build_routing(std::span<const RoutingHome> homes, double price, const Tariff& tariff, double delta,
                      bool pooled, bool sharing) {
    if (homes.empty()) throw ShapeError("routing needs at least one home");
    sharing = sharing && homes.size() > 1;
    BuiltLp out;
    out.layout = DispatchLayout{homes.size(), 1, pooled, false};
    const auto& lay = out.layout;
    auto& p = out.problem;
    size_problem(p, lay.n_vars());
    const auto sc = step_coefficients(price, tariff, delta);
    for (std::size_t g = 0; g < homes.size(); ++g) {
        const auto& rh = homes[g];
        BatterySpec pinned;
        pinned.p_ch_max = rh.u_ch;
        pinned.p_dis_max = rh.u_dis;
        auto fb = flow_bounds(rh.solar_kw, pinned, sharing);
        fb.lower[idx(Flow::u_ch)] = rh.u_ch;
        fb.lower[idx(Flow::u_dis)] = rh.u_dis;
        set_step_vars(p, lay, g, 0, fb, sc);
        p.objective_constant += delta * tariff.p_ret * rh.load_kw;
        add_step_rows(p, lay, g, 0, rh.load_kw - rh.solar_kw, rh.solar_kw);
    }
    if (pooled) add_pool_rows(p, lay, 0);
    return out;
}

DispatchPlan decode(const LpProblem& problem, const LpSolution& solution, const DispatchLayout& layout) {
    if (solution.status != LpStatus::optimal) {
        throw DecodeError("cannot decode a " + to_string(solution.status) + " solution");
    }
    if (problem.n_vars != layout.n_vars() || solution.x.size() != layout.n_vars()) {
        throw DecodeError("solution does not match the variable layout");
    }
    DispatchPlan plan;
    plan.n_homes = layout.n_homes;
    plan.horizon = layout.horizon;
    plan.pooled = layout.pooled;
    plan.objective_value = solution.objective_value;
    plan.flows.assign(layout.n_homes * layout.horizon, {});
    for (std::size_t g = 0; g < layout.n_homes; ++g) {
        for (std::size_t h = 0; h < layout.horizon; ++h) {
            auto& row = plan.flows[g * layout.horizon + h];
            row.fill(0.0);
            for (std::size_t f = 0; f < layout.flows_per_step(); ++f) {
                row[f] = solution.x[layout.flow(g, h, static_cast<Flow>(f))];
            }
        }
    }
    if (layout.with_soc) {
        plan.soc.resize(layout.n_homes * (layout.horizon + 1));
        for (std::size_t g = 0; g < layout.n_homes; ++g) {
            for (std::size_t h = 0; h <= layout.horizon; ++h) {
                plan.soc[g * (layout.horizon + 1) + h] = solution.x[layout.soc(g, h)];
            }
        }
    }
    return plan;
}

double step_margin(const std::array<double, kAllFlows>& f, double load_kw, double price, const Tariff& t,
                   double delta) {
    return delta * (t.p_ret * load_kw - (price + t.c_tdsp) * f[idx(Flow::m_imp)] +
                    price * (f[idx(Flow::x_s)] + f[idx(Flow::x_b)]) -
                    t.beta * (f[idx(Flow::z)] + f[idx(Flow::x_s)] + f[idx(Flow::y_s)]));
}

}  // namespace bpool
