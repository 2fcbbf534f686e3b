#include "batterypool/cli.hpp"

#include "batterypool/error.hpp"
#include "batterypool/experiments.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace bpool {

namespace {

namespace fs = std::filesystem;

constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string data;
    std::string prices;
    std::string specs;
    std::string out = ".";
    std::uint64_t seed = 7;
    std::size_t horizon = 96;
    double quantile = kDefaultReserveQuantile;
    int k_f = kDefaultForecastWindow;
    int k_b = kDefaultReserveWindow;
    std::string solver = "reference";
    std::optional<double> salvage;
    std::string e_init_policy = "fraction_of_capacity";
    double e_init_fraction = 0.5;
    std::vector<int> caps{kBackupMenu.begin(), kBackupMenu.end()};
    std::size_t pool_size = 0;
    bool drop_incomplete = false;
    Tariff tariff;

    // synth
    std::size_t homes = 20;
    std::string price_profile = "diurnal";
    double solar_fraction = 0.5;
    double two_battery_probability = 0.2;

    // run / cap-spectrum
    std::string mode;
    std::string screen_file;
    std::string tiers_file;
    std::optional<int> cap;
    bool no_sharing = false;
};

std::string money(double usd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", usd);
    return buf;
}

struct DataPaths {
    fs::path telemetry, prices, specs;
};

DataPaths resolve_paths(const Options& o) {
    if (o.data.empty()) throw UsageError("--data is required");
    DataPaths p;
    const fs::path data(o.data);
    const bool dir = fs::is_directory(data);
    p.telemetry = dir ? data / "telemetry.csv" : data;
    p.prices = !o.prices.empty() ? fs::path(o.prices) : dir ? data / "prices.csv" : fs::path();
    p.specs = !o.specs.empty() ? fs::path(o.specs) : dir ? data / "specs.csv" : fs::path();
    if (p.prices.empty() || p.specs.empty()) throw UsageError("--prices and --specs are required with a telemetry file");
    return p;
}

RolloutConfig rollout_config(const Options& o) {
    RolloutConfig c;
    c.horizon = o.horizon;
    c.salvage_override = o.salvage;
    c.e_init_policy = parse_e_init_policy(o.e_init_policy);
    c.e_init_fraction = o.e_init_fraction;
    c.backend = o.solver;
    c.tariff = o.tariff;
    c.sharing = !o.no_sharing;
    return c;
}

ExperimentOptions experiment_options(const Options& o) {
    ExperimentOptions e;
    e.k_f = o.k_f;
    e.k_b = o.k_b;
    e.quantile = o.quantile;
    e.pool_size = o.pool_size;
    return e;
}

Experiment open_experiment(const Options& o, std::ostream& out) {
    const auto paths = resolve_paths(o);
    LoadOptions lo;
    lo.drop_incomplete = o.drop_incomplete;
    auto loaded = load_fleet(paths.telemetry, paths.prices, paths.specs, lo);
    for (const auto& r : loaded.rejected) out << "rejected " << r.home_id << ": " << r.reason << '\n';
    return Experiment(std::move(loaded.dataset), rollout_config(o), experiment_options(o));
}

fs::path screen_path(const Options& o) {
    if (!o.screen_file.empty()) return o.screen_file;
    const fs::path fallback = fs::path(o.out) / "screen.csv";
    if (fs::exists(fallback)) return fallback;
    throw UsageError("no screen file: pass --screen or run 'screen' first");
}

int cmd_synth(const Options& o, std::ostream& out) {
    SynthConfig cfg;
    cfg.n_homes = o.homes;
    cfg.seed = o.seed;
    cfg.price_profile = parse_price_profile(o.price_profile);
    cfg.solar_fraction = o.solar_fraction;
    cfg.two_battery_probability = o.two_battery_probability;
    const auto dataset = generate_fleet(cfg, TimeGrid::week(parse_local_minute("2024-07-01T00:00")));
    const fs::path dir(o.out);
    write_fleet(dataset, dir / "telemetry.csv", dir / "prices.csv", dir / "specs.csv");
    out << "wrote " << dataset.homes.size() << " homes to " << dir.string() << '\n';
    return 0;
}

int cmd_screen(const Options& o, std::ostream& out) {
    auto ex = open_experiment(o, out);
    const auto result = ex.screen();
    write_screen_csv(fs::path(o.out) / "screen.csv", result);
    out << "retained " << result.retained().size() << " dropped " << result.dropped().size() << '\n';
    return 0;
}

int cmd_run(const Options& o, std::ostream& out) {
    if (o.screen_file.empty() && o.tiers_file.empty()) throw UsageError("run needs --screen or --tiers");
    auto ex = open_experiment(o, out);
    const auto& data = ex.dataset();
    std::vector<std::size_t> homes;
    std::vector<int> tiers;
    if (!o.tiers_file.empty()) {
        const auto t = read_tiers_csv(o.tiers_file, data);
        for (std::size_t h = 0; h < t.size(); ++h) {
            if (t[h] != 0) {
                homes.push_back(h);
                tiers.push_back(t[h]);
            }
        }
    } else {
        const auto s = read_screen_csv(o.screen_file, data);
        homes = s.retained();
        tiers = s.retained_tiers();
    }
    if (o.cap) {
        for (auto& t : tiers) t = std::min(t, *o.cap);
    }
    if (homes.empty()) throw ConfigError("no homes to run");

    std::vector<const TrajectoryRecord*> records;
    if (o.mode == "standalone") {
        for (std::size_t i = 0; i < homes.size(); ++i) records.push_back(&ex.standalone(homes[i], tiers[i]));
    } else {
        records = ex.pooled_partitioned(homes, tiers);
    }
    std::vector<MarginReport> parts;
    for (const auto* r : records) parts.push_back(firm_margin(*r, data, ex.config().tariff));
    const auto report = merge_reports(parts);
    const fs::path dir(o.out);
    write_trajectory_csv(dir / "trajectory.csv", records);
    write_margins_csv(dir / "margins.csv", report);
    std::size_t infeasible = 0;
    for (const auto* r : records) {
        for (char f : r->feasible) infeasible += f ? 0 : 1;
    }
    out << o.mode << " homes " << homes.size() << " dispatch " << money(report.total_dispatch_usd)
        << " subscription " << money(report.total_subscription_usd) << " firm " << money(report.total_firm_usd)
        << " USD infeasible_epochs " << infeasible << '\n';
    return 0;
}

int cmd_cap_spectrum(const Options& o, std::ostream& out) {
    auto ex = open_experiment(o, out);
    const auto screen = read_screen_csv(screen_path(o), ex.dataset());
    const auto spectrum = ex.cap_spectrum(screen, o.caps);
    const fs::path dir(o.out);
    write_cap_spectrum_csv(dir / "cap_spectrum.csv", spectrum);
    write_soc_by_cap_csv(dir / "soc_by_cap.csv", soc_trajectory(spectrum));
    out << "cap_hours homes_at_cap standalone_firm_per_home pooling_benefit_per_home benefit_pct\n";
    for (const auto& r : spectrum.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%9d %12zu %24s %24s %10.2f\n", r.cap_hours, r.homes_at_cap,
                      money(r.standalone_firm_per_home).c_str(), money(r.pooling_benefit_per_home).c_str(),
                      r.benefit_pct);
        out << buf;
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Residential battery fleet dispatch: standalone vs pooled MPC under backup reserve floors",
                 "batterypool"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");

    const std::vector<int> menu(kBackupMenu.begin(), kBackupMenu.end());
    app.add_option("--data", o.data, "Telemetry file, or a directory holding telemetry/prices/specs .csv");
    app.add_option("--prices", o.prices, "Price file");
    app.add_option("--specs", o.specs, "Battery spec file");
    app.add_option("--out", o.out, "Output directory")->capture_default_str();
    app.add_option("--seed", o.seed, "Synthetic generator seed")->capture_default_str();
    app.add_option("--horizon", o.horizon, "MPC horizon in 15-minute steps")
        ->check(CLI::Range(std::size_t{1}, std::size_t{10000}))
        ->capture_default_str();
    app.add_option("--quantile", o.quantile, "Reserve quantile")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app.add_option("--kf", o.k_f, "Forecast neighborhood, minutes")->check(CLI::Range(0, 719))->capture_default_str();
    app.add_option("--kb", o.k_b, "Reserve neighborhood, minutes")->check(CLI::Range(0, 719))->capture_default_str();
    app.add_option("--solver", o.solver, "LP backend")->check(CLI::IsMember(backend_names()))->capture_default_str();
    app.add_option("--salvage", o.salvage, "Fixed terminal value of stored energy, USD/kWh");
    app.add_option("--e-init-policy", o.e_init_policy, "Initial energy policy")
        ->check(CLI::IsMember({"fraction_of_capacity", "reserve_floor"}))
        ->capture_default_str();
    app.add_option("--e-init-fraction", o.e_init_fraction, "Initial energy as a share of capacity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--caps", o.caps, "Backup caps, hours")->delimiter(',')->check(CLI::IsMember(menu));
    app.add_option("--pool-size", o.pool_size, "Homes per pool (0 = one pool)")->capture_default_str();
    app.add_flag("--drop-incomplete", o.drop_incomplete, "Skip homes with incomplete telemetry");
    app.add_option("--p-ret", o.tariff.p_ret, "Retail energy rate, USD/kWh")->capture_default_str();
    app.add_option("--c-tdsp", o.tariff.c_tdsp, "Delivery charge on imports, USD/kWh")->capture_default_str();
    app.add_option("--beta", o.tariff.beta, "Solar credit, USD/kWh")->capture_default_str();
    app.add_option("--sub-one", o.tariff.sub_one, "Monthly subscription, one battery")->capture_default_str();
    app.add_option("--sub-two", o.tariff.sub_two, "Monthly subscription, two batteries")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Write a synthetic fleet");
    synth->add_option("--homes", o.homes, "Number of homes")->check(CLI::Range(std::size_t{1}, std::size_t{100000}))->capture_default_str();
    synth->add_option("--price-profile", o.price_profile, "Price path")
        ->check(CLI::IsMember({"flat", "diurnal", "spiky"}))
        ->capture_default_str();
    synth->add_option("--solar-fraction", o.solar_fraction, "Share of homes with solar")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--two-battery-prob", o.two_battery_probability, "Share of two-battery homes")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    auto* screen = app.add_subcommand("screen", "Find each home's longest feasible backup tier");

    auto* run = app.add_subcommand("run", "Weekly rollout of one mode");
    run->add_option("--mode", o.mode, "standalone or pooled")
        ->required()
        ->check(CLI::IsMember({"standalone", "pooled"}));
    auto* screen_opt = run->add_option("--screen", o.screen_file, "screen.csv to take tiers from");
    auto* tiers_opt = run->add_option("--tiers", o.tiers_file, "Explicit tier file home_id,tier_hours");
    screen_opt->excludes(tiers_opt);
    run->add_option("--cap", o.cap, "Cap every tier at this many hours")->check(CLI::IsMember(menu));
    run->add_flag("--no-sharing", o.no_sharing, "Pin pooled sharing flows at zero");

    auto* spectrum = app.add_subcommand("cap-spectrum", "Standalone and pooled reruns for each cap");
    spectrum->add_option("--screen", o.screen_file, "screen.csv (defaults to <out>/screen.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << "batterypool\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (synth->parsed()) return cmd_synth(o, out);
        if (screen->parsed()) return cmd_screen(o, out);
        if (run->parsed()) return cmd_run(o, out);
        if (spectrum->parsed()) return cmd_cap_spectrum(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return kUsageError;
}

}  // namespace bpool
