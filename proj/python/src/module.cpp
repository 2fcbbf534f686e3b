#include "batterypool/cli.hpp"
#include "batterypool/error.hpp"
#include "batterypool/experiments.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace bpool;

namespace {

py::dict margin_dict(const MarginReport& r) {
    py::list homes;
    for (const auto& h : r.homes) {
        py::dict d;
        d["home_id"] = h.home_id;
        d["dispatch_usd"] = h.dispatch_usd;
        d["subscription_usd"] = h.subscription_usd;
        d["firm_usd"] = h.firm_usd;
        homes.append(d);
    }
    py::dict out;
    out["homes"] = homes;
    out["total_dispatch_usd"] = r.total_dispatch_usd;
    out["total_subscription_usd"] = r.total_subscription_usd;
    out["total_firm_usd"] = r.total_firm_usd;
    return out;
}

py::list screen_list(const ScreenResult& s) {
    py::list out;
    for (const auto& e : s.entries) {
        py::dict d;
        d["home"] = e.home;
        d["home_id"] = e.home_id;
        d["t_maxfeas"] = e.t_maxfeas;
        d["dropped"] = e.dropped;
        d["reason"] = e.reason;
        out.append(d);
    }
    return out;
}

ScreenResult screen_from(const FleetDataset& data, const py::list& entries) {
    ScreenResult s;
    for (const auto& item : entries) {
        const auto d = item.cast<py::dict>();
        ScreenEntry e;
        e.home_id = d["home_id"].cast<std::string>();
        e.home = data.find_home(e.home_id);
        e.t_maxfeas = d["t_maxfeas"].cast<int>();
        e.dropped = d["dropped"].cast<bool>();
        s.entries.push_back(std::move(e));
    }
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Residential battery fleet dispatch: standalone and pooled MPC with backup reserve floors";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<CompletenessError>(m, "CompletenessError", validation.ptr());
    py::register_exception<CoverageError>(m, "CoverageError", validation.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
    py::register_exception<DecodeError>(m, "DecodeError", base.ptr());

    py::class_<Tariff>(m, "Tariff")
        .def(py::init<>())
        .def_readwrite("p_ret", &Tariff::p_ret)
        .def_readwrite("c_tdsp", &Tariff::c_tdsp)
        .def_readwrite("beta", &Tariff::beta)
        .def_readwrite("sub_one", &Tariff::sub_one)
        .def_readwrite("sub_two", &Tariff::sub_two)
        .def("weekly_subscription", &Tariff::weekly_subscription, py::arg("n_batteries"));

    py::class_<BatterySpec>(m, "BatterySpec")
        .def(py::init<>())
        .def_readwrite("e_max", &BatterySpec::e_max)
        .def_readwrite("p_ch_max", &BatterySpec::p_ch_max)
        .def_readwrite("p_dis_max", &BatterySpec::p_dis_max)
        .def_readwrite("eta_ch", &BatterySpec::eta_ch)
        .def_readwrite("eta_dis", &BatterySpec::eta_dis)
        .def_readwrite("n_batteries", &BatterySpec::n_batteries);

    py::class_<FleetDataset>(m, "FleetDataset")
        .def_property_readonly("n_homes", [](const FleetDataset& d) { return d.homes.size(); })
        .def_property_readonly("n_intervals", [](const FleetDataset& d) { return d.grid.n_intervals(); })
        .def_property_readonly("home_ids",
                               [](const FleetDataset& d) {
                                   std::vector<std::string> ids;
                                   for (const auto& h : d.homes) ids.push_back(h.home_id);
                                   return ids;
                               })
        .def_property_readonly("prices", [](const FleetDataset& d) { return d.prices.usd_per_kwh; })
        .def("battery", [](const FleetDataset& d, std::size_t home) { return d.homes.at(home).battery; })
        .def("set_battery", [](FleetDataset& d, std::size_t home, const BatterySpec& b) { d.homes.at(home).battery = b; })
        .def("net_load", [](const FleetDataset& d, std::size_t home) { return net_load(d.homes.at(home), d.grid); })
        .def("validate", &FleetDataset::validate);

    m.def(
        "synthetic_fleet",
        [](std::size_t n_homes, std::uint64_t seed, const std::string& price_profile, double solar_fraction) {
            SynthConfig cfg;
            cfg.n_homes = n_homes;
            cfg.seed = seed;
            cfg.price_profile = parse_price_profile(price_profile);
            cfg.solar_fraction = solar_fraction;
            return generate_fleet(cfg, TimeGrid::week(parse_local_minute("2024-07-01T00:00")));
        },
        py::arg("n_homes") = 20, py::arg("seed") = 7, py::arg("price_profile") = "diurnal",
        py::arg("solar_fraction") = 0.5);

    m.def(
        "load_fleet",
        [](const std::filesystem::path& telemetry, const std::filesystem::path& prices,
           const std::filesystem::path& specs, bool drop_incomplete) {
            LoadOptions o;
            o.drop_incomplete = drop_incomplete;
            auto r = load_fleet(telemetry, prices, specs, o);
            std::vector<std::pair<std::string, std::string>> rejected;
            for (const auto& x : r.rejected) rejected.emplace_back(x.home_id, x.reason);
            return py::make_tuple(std::move(r.dataset), rejected);
        },
        py::arg("telemetry"), py::arg("prices"), py::arg("specs"), py::arg("drop_incomplete") = false);
    m.def("write_fleet", &write_fleet, py::arg("dataset"), py::arg("telemetry"), py::arg("prices"), py::arg("specs"));

    m.def(
        "point_forecasts",
        [](const FleetDataset& d, int k_f) {
            const auto f = point_forecasts(d, k_f);
            py::dict out;
            out["l_hat"] = f.l_hat;
            out["s_hat"] = f.s_hat;
            out["lambda_hat"] = f.lambda_hat;
            return out;
        },
        py::arg("dataset"), py::arg("k_f") = kDefaultForecastWindow);
    m.def("reserve_profile", &reserve_profile, py::arg("dataset"), py::arg("home"), py::arg("backup_hours"),
          py::arg("k_b") = kDefaultReserveWindow, py::arg("quantile") = kDefaultReserveQuantile);
    m.def("nearest_rank_quantile", &nearest_rank_quantile, py::arg("sample"), py::arg("p"));

    py::enum_<Relation>(m, "Relation").value("eq", Relation::eq).value("le", Relation::le).value("ge", Relation::ge);
    py::class_<LpProblem>(m, "LpProblem")
        .def(py::init<>())
        .def("add_var", &LpProblem::add_var, py::arg("lower"), py::arg("upper"), py::arg("cost"),
             py::arg("name") = "")
        .def("add_row", &LpProblem::add_row, py::arg("index"), py::arg("value"), py::arg("relation"), py::arg("rhs"))
        .def_readwrite("objective_constant", &LpProblem::objective_constant)
        .def_readonly("n_vars", &LpProblem::n_vars)
        .def("dump", &dump_problem);
    py::class_<LpSolution>(m, "LpSolution")
        .def_property_readonly("status", [](const LpSolution& s) { return to_string(s.status); })
        .def_readonly("x", &LpSolution::x)
        .def_readonly("objective_value", &LpSolution::objective_value)
        .def_readonly("iterations", &LpSolution::iterations);
    m.def(
        "solve_lp",
        [](const LpProblem& p, const std::string& backend) { return solve_with(p, backend, {}); },
        py::arg("problem"), py::arg("backend") = "reference");
    m.attr("INF") = kInf;
    m.def("backend_names", &backend_names);

    py::class_<RolloutConfig>(m, "RolloutConfig")
        .def(py::init<>())
        .def_readwrite("horizon", &RolloutConfig::horizon)
        .def_readwrite("salvage_override", &RolloutConfig::salvage_override)
        .def_property(
            "e_init_policy", [](const RolloutConfig& c) { return to_string(c.e_init_policy); },
            [](RolloutConfig& c, const std::string& v) { c.e_init_policy = parse_e_init_policy(v); })
        .def_readwrite("e_init_fraction", &RolloutConfig::e_init_fraction)
        .def_readwrite("e_init_fixed", &RolloutConfig::e_init_fixed)
        .def_readwrite("sharing", &RolloutConfig::sharing)
        .def_readwrite("backend", &RolloutConfig::backend)
        .def_readwrite("tariff", &RolloutConfig::tariff);

    py::class_<TrajectoryRecord>(m, "TrajectoryRecord")
        .def_readonly("pooled", &TrajectoryRecord::pooled)
        .def_readonly("n_epochs", &TrajectoryRecord::n_epochs)
        .def_readonly("home_ids", &TrajectoryRecord::home_ids)
        .def_readonly("soc", &TrajectoryRecord::soc)
        .def_readonly("floor", &TrajectoryRecord::floor)
        .def_readonly("margin", &TrajectoryRecord::margin)
        .def_property_readonly("feasible",
                               [](const TrajectoryRecord& t) { return std::vector<bool>(t.feasible.begin(), t.feasible.end()); })
        .def("flow",
             [](const TrajectoryRecord& t, std::size_t epoch, std::size_t g, const std::string& name) {
                 for (std::size_t f = 0; f < kAllFlows; ++f) {
                     if (name == flow_name(static_cast<Flow>(f))) return t.flows.at(t.at(epoch, g))[f];
                 }
                 throw ConfigError("unknown flow '" + name + "'");
             })
        .def("dispatch_margin", &TrajectoryRecord::dispatch_margin)
        .def("is_feasible", &trajectory_feasible)
        .def("write_csv", [](const TrajectoryRecord& t, const std::filesystem::path& p) { write_trajectory_csv(p, t); });

    m.def(
        "rollout",
        [](const FleetDataset& d, const std::vector<std::size_t>& homes, const std::vector<int>& tiers, bool pooled,
           const RolloutConfig& cfg, int k_f, int k_b, double quantile) {
            const auto f = point_forecasts(d, k_f);
            std::vector<int> needed;
            for (int t : tiers) {
                if (t != 0 && std::find(needed.begin(), needed.end(), t) == needed.end()) needed.push_back(t);
            }
            const ReserveBook book(d, needed, k_b, quantile);
            const RolloutMode mode{pooled, homes, tiers};
            py::gil_scoped_release release;
            return rollout(d, f, book, cfg, mode);
        },
        py::arg("dataset"), py::arg("homes"), py::arg("tiers"), py::arg("pooled") = false,
        py::arg("config") = RolloutConfig{}, py::arg("k_f") = kDefaultForecastWindow,
        py::arg("k_b") = kDefaultReserveWindow, py::arg("quantile") = kDefaultReserveQuantile);

    m.def(
        "firm_margin",
        [](const TrajectoryRecord& t, const FleetDataset& d, const Tariff& tariff) {
            return margin_dict(firm_margin(t, d, tariff));
        },
        py::arg("trajectory"), py::arg("dataset"), py::arg("tariff") = Tariff{});

    m.def(
        "screen_cohort",
        [](const FleetDataset& d, const RolloutConfig& cfg) {
            ScreenResult s;
            {
                py::gil_scoped_release release;
                s = screen_cohort(d, cfg);
            }
            return screen_list(s);
        },
        py::arg("dataset"), py::arg("config") = RolloutConfig{});

    m.def(
        "cap_spectrum",
        [](const FleetDataset& d, const py::list& screen, const std::vector<int>& caps, const RolloutConfig& cfg) {
            const auto s = screen_from(d, screen);
            CapSpectrum spec;
            {
                py::gil_scoped_release release;
                spec = cap_spectrum(d, s, caps, cfg);
            }
            py::list rows;
            for (std::size_t i = 0; i < spec.rows.size(); ++i) {
                const auto& r = spec.rows[i];
                py::dict row;
                row["cap_hours"] = r.cap_hours;
                row["homes_at_cap"] = r.homes_at_cap;
                row["standalone_firm_per_home"] = r.standalone_firm_per_home;
                row["pooling_benefit_per_home"] = r.pooling_benefit_per_home;
                row["benefit_pct"] = r.benefit_pct;
                row["pooled_total_soc"] = spec.runs[i].pooled_total_soc;
                rows.append(row);
            }
            return rows;
        },
        py::arg("dataset"), py::arg("screen"), py::arg("caps"), py::arg("config") = RolloutConfig{});

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"batterypool"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
