#pragma once

#include "batterypool/mpc.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

/// Largest residuals of the physical identities over a trajectory.
struct TrajectoryResiduals {
    double soc_bounds = 0.0;
    double dynamics = 0.0;
    double balance = 0.0;
    double floor = 0.0;
    double conservation = 0.0;
    double solar = 0.0;
    double negative_flow = 0.0;
};

inline TrajectoryResiduals residuals(const bpool::FleetDataset& d, const bpool::TrajectoryRecord& tr) {
    using bpool::Flow;
    TrajectoryResiduals r;
    const std::size_t n = tr.n_homes();
    for (std::size_t g = 0; g < n; ++g) {
        const auto& home = d.homes[tr.homes[g]];
        const auto& b = home.battery;
        const auto load = bpool::resample_to_quarter_hour(home.load_kw);
        const auto solar = bpool::resample_to_quarter_hour(home.solar_kw);
        for (std::size_t t = 0; t < tr.n_epochs; ++t) {
            const auto& f = tr.flows[tr.at(t, g)];
            auto v = [&](Flow fl) { return f[static_cast<std::size_t>(fl)]; };
            const double e0 = tr.soc_start(t, g), e1 = tr.soc[tr.at(t, g)];
            r.soc_bounds = std::max({r.soc_bounds, -e1, e1 - b.e_max});
            r.dynamics = std::max(r.dynamics, std::fabs(e1 - e0 - b.eta_ch * 0.25 * v(Flow::u_ch) +
                                                        0.25 / b.eta_dis * v(Flow::u_dis)));
            const double bal = v(Flow::m_imp) + v(Flow::w_l) + v(Flow::w_c) - v(Flow::u_ch) + v(Flow::u_dis) -
                               v(Flow::x_s) - v(Flow::x_b) - v(Flow::y_s) - v(Flow::y_b) - v(Flow::c) -
                               (load[t] - solar[t]);
            r.balance = std::max(r.balance, std::fabs(bal));
            r.solar = std::max(r.solar, v(Flow::z) + v(Flow::x_s) + v(Flow::y_s) + v(Flow::c) - solar[t]);
            for (double x : f) r.negative_flow = std::max(r.negative_flow, -x);
            if (tr.feasible[t]) r.floor = std::max(r.floor, tr.floor[tr.at(t, g)] - e1);
        }
    }
    for (std::size_t t = 0; t < tr.n_epochs; ++t) {
        double net = 0.0;
        for (std::size_t g = 0; g < n; ++g) {
            const auto& f = tr.flows[tr.at(t, g)];
            net += f[static_cast<std::size_t>(Flow::w_l)] + f[static_cast<std::size_t>(Flow::w_c)] -
                   f[static_cast<std::size_t>(Flow::y_s)] - f[static_cast<std::size_t>(Flow::y_b)];
        }
        r.conservation = std::max(r.conservation, std::fabs(net));
    }
    return r;
}

inline bool within_limits(const TrajectoryResiduals& r) {
    return r.soc_bounds <= 1e-7 && r.dynamics < 1e-9 && r.balance < 1e-7 && r.floor <= 1e-7 &&
           r.conservation < 1e-7 && r.solar <= 1e-7 && r.negative_flow <= 1e-9;
}

}  // namespace oracle
