// One line per acceptance criterion; exit status 1 if any fails.

#include "../support/fixtures.hpp"
#include "../support/invariants.hpp"
#include "../support/lp_oracle.hpp"
#include "../support/random_lp.hpp"
#include "../support/reserve_oracle.hpp"
#include "batterypool/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace bpool;

namespace {

// Pinned tolerances and budgets.
constexpr double kOracleObjTol = 1e-8;
constexpr double kReductionTol = 1e-6;
constexpr double kSuperiorityTol = 1e-6;
constexpr double kMonotoneTol = 1e-9;
constexpr double kClosedFormTol = 1e-8;
constexpr double kSocTol = 1e-7;
constexpr double kDynamicsTol = 1e-9;
constexpr double kBalanceTol = 1e-7;
constexpr double kConservationTol = 1e-7;

constexpr std::uint64_t kFleetSeed = 7;
constexpr std::size_t kFleetHorizon = 24;
constexpr std::uint64_t kLpSeed = 20240701;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

RolloutConfig fleet_config() {
    RolloutConfig c;
    c.horizon = kFleetHorizon;
    return c;
}

/// Shared 10-home fleet used by criteria 2, 3, 6 and 7.
struct TenHome {
    Experiment ex{fixture::synthetic(10, kFleetSeed), fleet_config()};
    ScreenResult screen;
    CapSpectrum spectrum;
    bool screened = false;
    bool spectrum_done = false;

    const ScreenResult& screened_cohort() {
        if (!screened) {
            screen = ex.screen();
            screened = true;
        }
        return screen;
    }
    const CapSpectrum& all_caps() {
        if (!spectrum_done) {
            const std::vector<int> caps(kBackupMenu.begin(), kBackupMenu.end());
            spectrum = ex.cap_spectrum(screened_cohort(), caps);
            spectrum_done = true;
        }
        return spectrum;
    }
};

Outcome lp_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(kLpSeed);
    int status_mismatch = 0, optimal = 0, infeasible = 0;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const int n = 1 + static_cast<int>(rng() % 10);
        const int m = 1 + static_cast<int>(rng() % 8);
        const auto p = oracle::random_lp(rng, n, m, false);
        const auto want = oracle::brute_force_lp(p);
        const auto got = solve_with(p, "reference");
        if (got.status != want.status) {
            ++status_mismatch;
            continue;
        }
        if (want.status == LpStatus::optimal) {
            ++optimal;
            worst = std::max(worst, std::fabs(got.objective_value - want.objective));
        } else {
            ++infeasible;
        }
    }
    const double secs = seconds_since(t0);
    return {status_mismatch == 0 && worst <= kOracleObjTol && secs < 10.0,
            fmt("200 LPs (%d optimal, %d infeasible), status mismatches %d, max |obj error| %.2e (tol %.0e), %.1f s "
                "(limit 10 s)",
                optimal, infeasible, status_mismatch, worst, kOracleObjTol, secs)};
}

Outcome zero_sharing(TenHome& fleet) {
    const auto t0 = Clock::now();
    const auto& s = fleet.screened_cohort();
    const auto homes = s.retained();
    const auto tiers = s.retained_tiers();
    auto cfg = fleet_config();
    cfg.sharing = false;
    const auto& ex = fleet.ex;
    const auto pooled = rollout(ex.dataset(), ex.forecasts(), ex.reserves(), cfg, RolloutMode::pool(homes, tiers));

    double lp_gap = 0.0;
    std::size_t infeasible_epochs = 0;
    const RolloutMode mode = RolloutMode::pool(homes, tiers);
    std::vector<double> energy(homes.size());
    for (std::size_t t = 0; t < pooled.n_epochs; ++t) {
        for (std::size_t g = 0; g < homes.size(); ++g) energy[g] = pooled.soc_start(t, g);
        const auto in = epoch_inputs(ex.dataset(), ex.forecasts(), ex.reserves(), cfg, mode, t, energy);
        const auto joint = solve(build_pooled(in, false).problem);
        double sum = 0.0;
        bool all_optimal = joint.status == LpStatus::optimal;
        for (std::size_t g = 0; g < homes.size() && all_optimal; ++g) {
            const auto own = solve(build_standalone(in, g).problem);
            all_optimal = own.status == LpStatus::optimal;
            sum += own.objective_value;
        }
        if (!all_optimal) {
            ++infeasible_epochs;
            continue;
        }
        lp_gap = std::max(lp_gap, std::fabs(joint.objective_value - sum));
    }

    double roll_gap = 0.0;
    for (std::size_t g = 0; g < homes.size(); ++g) {
        const auto& own = fleet.ex.standalone(homes[g], tiers[g]);
        for (std::size_t t = 0; t < own.n_epochs; ++t) {
            roll_gap = std::max({roll_gap, std::fabs(own.margin[t] - pooled.margin[pooled.at(t, g)]),
                                 std::fabs(own.soc[t] - pooled.soc[pooled.at(t, g)])});
        }
        roll_gap = std::max(roll_gap, std::fabs(own.dispatch_margin(0) - pooled.dispatch_margin(g)));
    }
    const double secs = seconds_since(t0);
    return {infeasible_epochs == 0 && lp_gap <= kReductionTol && roll_gap <= kReductionTol && secs < 300.0,
            fmt("%zu homes x %zu epochs, max per-epoch LP gap %.2e, max rollout gap %.2e (tol %.0e), infeasible "
                "epochs %zu, %.0f s (limit 300 s)",
                homes.size(), pooled.n_epochs, lp_gap, roll_gap, kReductionTol, infeasible_epochs, secs)};
}

Outcome superiority(TenHome& fleet) {
    const auto t0 = Clock::now();
    const auto& spec = fleet.all_caps();
    bool ok = true;
    std::string per_cap;
    for (const auto& run : spec.runs) {
        const double diff = run.pooled.total_firm_usd - run.standalone.total_firm_usd;
        ok = ok && diff >= -kSuperiorityTol;
        per_cap += fmt(" %dh:%+.4f", run.cap_hours, diff);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 1800.0,
            fmt("pooled minus standalone weekly firm margin, USD:%s (tol -%.0e), %.0f s (limit 1800 s)",
                per_cap.c_str(), kSuperiorityTol, secs)};
}

Outcome reserve_oracle() {
    const auto t0 = Clock::now();
    const auto data = fixture::synthetic(5, 41);
    std::size_t mismatches = 0, compared = 0;
    for (std::size_t h = 0; h < 5; ++h) {
        for (int hours : {2, 4, 24}) {
            const auto want = oracle::reserve_row(data, h, hours, kDefaultReserveWindow, 9, 10);
            const auto got = reserve_profile(data, h, hours);
            for (int q = 0; q < 96; ++q) {
                ++compared;
                mismatches += got[q] != want[q];
            }
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 30.0,
            fmt("%zu values over 5 homes x {2,4,24} h, exact mismatches %zu, %.1f s (limit 30 s)", compared, mismatches,
                secs)};
}

Outcome reserve_monotonicity(TenHome& fleet) {
    const auto t0 = Clock::now();
    const auto& ex = fleet.ex;
    std::size_t order_violations = 0;
    for (std::size_t h = 0; h < ex.dataset().homes.size(); ++h) {
        for (std::size_t i = 1; i < kBackupMenu.size(); ++i) {
            const auto& lo = ex.reserves().at(h, kBackupMenu[i - 1]);
            const auto& hi = ex.reserves().at(h, kBackupMenu[i]);
            for (int q = 0; q < 96; ++q) order_violations += hi[q] < lo[q];
        }
    }
    // Scale one home's floor vector by 10% in sampled epoch LPs.
    const auto& s = fleet.screened_cohort();
    const auto homes = s.retained();
    const auto tiers = s.retained_tiers();
    const auto cfg = fleet_config();
    const auto mode = RolloutMode::pool(homes, tiers);
    std::vector<double> energy(homes.size());
    for (std::size_t g = 0; g < homes.size(); ++g) energy[g] = ex.dataset().homes[homes[g]].battery.e_max * 0.5;
    std::size_t lps = 0, increases = 0, decreases = 0, lost = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < 672; t += 48) {
        const auto base = epoch_inputs(ex.dataset(), ex.forecasts(), ex.reserves(), cfg, mode, t, energy);
        for (std::size_t g = 0; g < homes.size(); ++g) {
            auto raised = base;
            for (auto& r : raised.homes[g].reserve) r *= 1.1;
            auto compare = [&](const LpProblem& a, const LpProblem& b) {
                const auto x = solve(a), y = solve(b);
                ++lps;
                if (y.status != LpStatus::optimal) {
                    lost += x.status == LpStatus::optimal;
                    return;
                }
                if (x.status != LpStatus::optimal) {
                    ++increases;  // raising a floor made an infeasible LP feasible
                    return;
                }
                worst = std::max(worst, y.objective_value - x.objective_value);
                increases += y.objective_value > x.objective_value + kMonotoneTol;
                decreases += y.objective_value < x.objective_value - kMonotoneTol;
            };
            compare(build_standalone(base, g).problem, build_standalone(raised, g).problem);
            if (g % 3 == 0) compare(build_pooled(base).problem, build_pooled(raised).problem);
        }
    }
    const double secs = seconds_since(t0);
    return {order_violations == 0 && increases == 0 && secs < 60.0,
            fmt("tier-order violations %zu over %zu homes x 96 q; %zu LP pairs, objective increases %zu (max change "
                "%+.2e, tol %.0e), strict decreases %zu, made infeasible %zu, %.1f s (limit 60 s)",
                order_violations, ex.dataset().homes.size(), lps, increases, worst, kMonotoneTol, decreases, lost,
                secs)};
}

struct Suite {
    oracle::TrajectoryResiduals worst;
    std::size_t rollouts = 0;

    void add(const FleetDataset& d, const TrajectoryRecord& tr) {
        const auto r = oracle::residuals(d, tr);
        worst.soc_bounds = std::max(worst.soc_bounds, r.soc_bounds);
        worst.dynamics = std::max(worst.dynamics, r.dynamics);
        worst.balance = std::max(worst.balance, r.balance);
        worst.floor = std::max(worst.floor, r.floor);
        worst.conservation = std::max(worst.conservation, r.conservation);
        worst.solar = std::max(worst.solar, r.solar);
        worst.negative_flow = std::max(worst.negative_flow, r.negative_flow);
        ++rollouts;
    }
    void add_all(Experiment& ex) {
        for (const auto* tr : ex.trajectories()) add(ex.dataset(), *tr);
    }
};

Outcome trajectory_invariants(const Suite& suite) {
    const auto& w = suite.worst;
    const bool ok = w.soc_bounds <= kSocTol && w.dynamics < kDynamicsTol && w.balance < kBalanceTol &&
                    w.floor <= kSocTol && w.conservation < kConservationTol && oracle::within_limits(w);
    return {ok, fmt("%zu rollouts: SoC bound excess %.1e, dynamics %.1e, balance %.1e, floor shortfall %.1e, "
                    "conservation %.1e (tols %.0e/%.0e/%.0e/%.0e/%.0e); solar split %.1e, negative flow %.1e",
                    suite.rollouts, w.soc_bounds, w.dynamics, w.balance, w.floor, w.conservation, kSocTol,
                    kDynamicsTol, kBalanceTol, kSocTol, kConservationTol, w.solar, w.negative_flow)};
}

Outcome screening_consistency(TenHome& fleet, Suite& suite) {
    const auto& s = fleet.screened_cohort();
    const auto& spec = fleet.all_caps();
    bool monotone = true;
    for (std::size_t i = 1; i < spec.rows.size(); ++i) {
        monotone = monotone && spec.rows[i].homes_at_cap <= spec.rows[i - 1].homes_at_cap;
    }

    // Uncapped rerun from scratch.
    Experiment fresh(fleet.ex.dataset(), fleet.ex.config());
    const auto homes = s.retained();
    const auto tiers = s.retained_tiers();
    const auto& last = spec.runs.back();
    bool identical = last.cap_hours == 24 && last.tiers == tiers &&
                     fresh.pooled(homes, tiers) == fleet.ex.pooled(homes, last.tiers);
    for (std::size_t i = 0; i < homes.size() && identical; ++i) {
        identical = fresh.standalone(homes[i], tiers[i]) == fleet.ex.standalone(homes[i], last.tiers[i]);
    }
    const auto uncapped = firm_margin(fresh.pooled(homes, tiers), fresh.dataset(), fresh.config().tariff);
    identical = identical && uncapped.total_firm_usd == last.pooled.total_firm_usd;
    suite.add_all(fresh);

    std::size_t leaks = 0;
    for (std::size_t d : s.dropped()) {
        const auto& id = fleet.ex.dataset().homes[d].home_id;
        for (std::size_t r : spec.retained) leaks += r == d;
        for (const auto& run : spec.runs) {
            for (const auto& h : run.standalone.homes) leaks += h.home_id == id;
            for (const auto& h : run.pooled.homes) leaks += h.home_id == id;
        }
    }
    std::string counts;
    for (const auto& r : spec.rows) counts += fmt(" %dh:%zu", r.cap_hours, r.homes_at_cap);
    return {monotone && identical && leaks == 0,
            fmt("homes_at_cap%s (%s); 24h cap vs uncapped rerun %s; %zu dropped homes, downstream appearances %zu",
                counts.c_str(), monotone ? "non-increasing" : "NOT monotone",
                identical ? "bit-identical" : "DIFFERENT", s.dropped().size(), leaks)};
}

Outcome qualitative(Suite& suite) {
    const auto t0 = Clock::now();
    Experiment ex(fixture::synthetic(20, kFleetSeed, PriceProfile::spiky), fleet_config());
    const auto s = ex.screen();
    const int caps[] = {2, 24};
    const auto spec = ex.cap_spectrum(s, caps);
    auto mean = [](const std::vector<double>& v) {
        double total = 0.0;
        for (double x : v) total += x;
        return total / static_cast<double>(v.size());
    };
    const double benefit = spec.rows[0].pooling_benefit_per_home;
    const double soc2 = mean(spec.runs[0].pooled_total_soc);
    const double soc24 = mean(spec.runs[1].pooled_total_soc);
    suite.add_all(ex);
    const double secs = seconds_since(t0);
    return {benefit > 0.0 && soc24 >= soc2 && secs < 900.0,
            fmt("%zu retained of 20; cap 2 benefit %.4f USD/home (%.2f%%); mean pooled SoC cap 24 %.3f kWh vs cap 2 "
                "%.3f kWh; %.0f s (limit 900 s)",
                spec.retained.size(), benefit, spec.rows[0].benefit_pct, soc24, soc2, secs)};
}

Outcome closed_form(Suite& suite) {
    auto data = fixture::synthetic(1, 13);
    auto& h = data.homes[0];
    h.battery = fixture::battery(0.0, 0.0, 0.95);
    std::fill(h.solar_kw.begin(), h.solar_kw.end(), 0.0);
    RolloutConfig cfg = fleet_config();
    const auto f = point_forecasts(data);
    const ReserveBook none;
    const auto tr = rollout(data, f, none, cfg, RolloutMode::standalone(0, 0));
    suite.add(data, tr);
    const Tariff t;
    const auto load = resample_to_quarter_hour(h.load_kw);
    double expected = 0.0;
    for (std::size_t k = 0; k < load.size(); ++k) {
        expected += kDeltaHours * (t.p_ret - data.prices.usd_per_kwh[k] - t.c_tdsp) * load[k];
    }
    const double got = firm_margin(tr, data, t).homes[0].dispatch_usd;
    const double err = std::fabs(got - expected);
    const bool subs = t.weekly_subscription(1) == 19.0 / 4.0 && t.weekly_subscription(2) == 29.0 / 4.0;
    auto two = data;
    two.homes[0].battery.n_batteries = 2;
    const bool report_subs = firm_margin(tr, data, t).homes[0].subscription_usd == 4.75 &&
                             firm_margin(tr, two, t).homes[0].subscription_usd == 7.25;
    return {err <= kClosedFormTol && subs && report_subs,
            fmt("dispatch %.10f vs closed form %.10f USD (|error| %.1e, tol %.0e); subscriptions %.2f / %.2f USD %s",
                got, expected, err, kClosedFormTol, t.weekly_subscription(1), t.weekly_subscription(2),
                subs && report_subs ? "exact" : "WRONG")};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    };

    TenHome fleet;
    Suite suite;
    report(1, "LP solver oracle", [] { return lp_oracle(); });
    report(2, "zero-sharing reduction", [&] { return zero_sharing(fleet); });
    report(3, "pooling superiority", [&] { return superiority(fleet); });
    report(4, "reserve oracle", [] { return reserve_oracle(); });
    report(5, "reserve monotonicity", [&] { return reserve_monotonicity(fleet); });
    // Criterion 6 audits every rollout, so it reports after the others ran.
    Outcome c7, c8, c9;
    try {
        c7 = screening_consistency(fleet, suite);
    } catch (const std::exception& e) {
        c7 = {false, std::string("threw: ") + e.what()};
    }
    try {
        c8 = qualitative(suite);
    } catch (const std::exception& e) {
        c8 = {false, std::string("threw: ") + e.what()};
    }
    try {
        c9 = closed_form(suite);
    } catch (const std::exception& e) {
        c9 = {false, std::string("threw: ") + e.what()};
    }
    suite.add_all(fleet.ex);
    report(6, "trajectory invariants", [&] { return trajectory_invariants(suite); });
    report(7, "screening consistency", [&] { return c7; });
    report(8, "qualitative cap analog", [&] { return c8; });
    report(9, "closed-form accounting", [&] { return c9; });
    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
