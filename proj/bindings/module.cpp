// Python bindings for the toolkit's main operations: plant simulation,
// dataset restructuring, model training and the receding-horizon solver.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hvacmpc/config.hpp"
#include "hvacmpc/errors.hpp"
#include "hvacmpc/experiment.hpp"
#include "hvacmpc/mlp.hpp"
#include "hvacmpc/mpc.hpp"
#include "hvacmpc/pipeline.hpp"
#include "hvacmpc/plant.hpp"
#include "hvacmpc/rng.hpp"

namespace py = pybind11;
using namespace hvacmpc;

namespace {

TimeSeriesFrame simulate_from_config(const AppConfig& cfg,
                                     const std::vector<WeatherSample>& weather,
                                     const std::vector<std::array<double, kZones>>& schedule) {
    return simulate(cfg.zones, cfg.power, weather, schedule, cfg.dt_seconds, cfg.start_epoch(),
                    cfg.initial_temp_c);
}

std::vector<double> frame_column(const TimeSeriesFrame& f, const std::string& name) {
    std::vector<double> out;
    out.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const FrameRow& r = f[i];
        if (name == "t_out") out.push_back(r.t_out);
        else if (name == "humidity") out.push_back(r.humidity);
        else if (name == "solar") out.push_back(r.solar);
        else if (name == "energy") out.push_back(r.energy);
        else if (name == "comp_mode") out.push_back(r.comp_mode);
        else if (name.rfind("t_zone_", 0) == 0) out.push_back(r.t_zone[std::stoul(name.substr(7)) - 1]);
        else if (name.rfind("sp_zone_", 0) == 0) out.push_back(r.sp_zone[std::stoul(name.substr(8)) - 1]);
        else throw Error(ErrorKind::invalid_input, "unknown column '" + name + "'");
    }
    return out;
}

} // namespace

PYBIND11_MODULE(hvacmpc, m) {
    m.doc() = "neural-network MPC toolkit for a simulated multi-zone heating plant";

    py::register_exception<Error>(m, "HvacError");

    py::class_<WeatherSample>(m, "WeatherSample")
        .def(py::init<>())
        .def_readwrite("t_out", &WeatherSample::t_out)
        .def_readwrite("humidity", &WeatherSample::humidity)
        .def_readwrite("solar", &WeatherSample::solar);

    py::class_<WeatherProfile>(m, "WeatherProfile")
        .def(py::init<>())
        .def_readwrite("t_mean", &WeatherProfile::t_mean)
        .def_readwrite("t_amplitude", &WeatherProfile::t_amplitude)
        .def_readwrite("noise_std", &WeatherProfile::noise_std)
        .def_readwrite("solar_peak", &WeatherProfile::solar_peak);

    py::class_<AppConfig>(m, "AppConfig")
        .def_static("defaults", &AppConfig::defaults)
        .def_static("load", &AppConfig::load)
        .def_readwrite("weather", &AppConfig::weather)
        .def_readwrite("excite_days", &AppConfig::excite_days)
        .def_readwrite("run_days", &AppConfig::run_days)
        .def_readwrite("run_controller", &AppConfig::run_controller)
        .def("serialize", &AppConfig::serialize, py::arg("invocation") = "");

    py::class_<FrameRow>(m, "FrameRow")
        .def_readonly("timestamp", &FrameRow::timestamp)
        .def_readonly("t_out", &FrameRow::t_out)
        .def_readonly("humidity", &FrameRow::humidity)
        .def_readonly("solar", &FrameRow::solar)
        .def_readonly("t_zone", &FrameRow::t_zone)
        .def_readonly("sp_zone", &FrameRow::sp_zone)
        .def_readonly("comp_mode", &FrameRow::comp_mode)
        .def_readonly("energy", &FrameRow::energy);

    py::class_<TimeSeriesFrame>(m, "TimeSeriesFrame")
        .def("__len__", &TimeSeriesFrame::size)
        .def("__getitem__",
             [](const TimeSeriesFrame& f, std::size_t i) {
                 if (i >= f.size()) throw py::index_error();
                 return f[i];
             })
        .def("column", &frame_column)
        .def("validate", &TimeSeriesFrame::validate);

    m.def("relay_step", &relay_step, py::arg("setpoint"), py::arg("t_meas"), py::arg("split_on"));
    m.def("compressor_logic", &compressor_logic);
    m.def("quantize_temperature", &quantize_temperature);
    m.def("synth_weather", &synth_weather, py::arg("profile"), py::arg("seed"), py::arg("days"),
          py::arg("start_time") = 0);
    m.def("excitation_schedule", &excitation_schedule, py::arg("seed"), py::arg("days"));
    m.def("simulate", &simulate_from_config, py::arg("config"), py::arg("weather"),
          py::arg("schedule"));
    m.def("load_csv", &load_csv);
    m.def("write_csv", &write_csv);
    m.def("derive_seed", &derive_seed);

    py::class_<LagSpec>(m, "LagSpec")
        .def(py::init<>())
        .def_readwrite("delta_y", &LagSpec::delta_y)
        .def_readwrite("delta_d", &LagSpec::delta_d)
        .def_readwrite("delta_u", &LagSpec::delta_u);
    m.def("energy_lagspec", &energy_lagspec);
    m.def("zone_lagspec", &zone_lagspec);

    py::class_<TargetId>(m, "TargetId")
        .def(py::init([](const std::string& s) {
            if (s == "energy") return TargetId{true, 0};
            return TargetId{false, std::stoi(s.substr(s.find(':') + 1))};
        }))
        .def("__str__", &TargetId::str);

    py::class_<LagFeature>(m, "LagFeature")
        .def_readonly("signal", &LagFeature::signal)
        .def_readonly("lag", &LagFeature::lag);

    py::class_<LaggedDataset>(m, "LaggedDataset")
        .def_readonly("X", &LaggedDataset::X)
        .def_readonly("y", &LaggedDataset::y)
        .def_readonly("manifest", &LaggedDataset::manifest)
        .def("__len__", &LaggedDataset::size)
        .def_property_readonly("width", &LaggedDataset::width);

    m.def("make_lagged_samples", &make_lagged_samples);
    m.def("chronological_split", &chronological_split);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<MLPModel>(m, "MLPModel")
        .def_readonly("dims", &MLPModel::dims)
        .def("forward", &MLPModel::forward)
        .def("grad_input", &MLPModel::grad_input)
        .def("predict", &MLPModel::predict);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("model", &TrainResult::model)
        .def_readonly("best_epoch", &TrainResult::best_epoch)
        .def_readonly("best_val_mse", &TrainResult::best_val_mse);

    m.def("train", &train, py::arg("train_set"), py::arg("val_set"), py::arg("hidden_dims"),
          py::arg("config"));
    m.def("hidden_dims_for", &hidden_dims_for);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("mae", &EvalReport::mae)
        .def_readonly("rmse", &EvalReport::rmse)
        .def_readonly("p95", &EvalReport::p95)
        .def_readonly("persistence_mae", &EvalReport::persistence_mae)
        .def_readonly("persistence_rmse", &EvalReport::persistence_rmse);
    m.def("evaluate", &evaluate);
    m.def("save_model", &save_model);
    m.def("load_model", &load_model);

    py::class_<MPCConfig>(m, "MPCConfig")
        .def(py::init<>())
        .def_readwrite("horizon", &MPCConfig::horizon)
        .def_readwrite("lambda_energy", &MPCConfig::lambda_energy)
        .def_readwrite("lambda_tracking", &MPCConfig::lambda_tracking)
        .def_readwrite("t_ref", &MPCConfig::t_ref)
        .def_readwrite("t_min", &MPCConfig::t_min)
        .def_readwrite("t_max", &MPCConfig::t_max)
        .def_readwrite("u_min", &MPCConfig::u_min)
        .def_readwrite("u_max", &MPCConfig::u_max)
        .def_readwrite("control_period_steps", &MPCConfig::control_period_steps)
        .def_readwrite("max_iters", &MPCConfig::max_iters)
        .def_readwrite("restarts", &MPCConfig::restarts);

    py::class_<ModelBundle>(m, "ModelBundle")
        .def(py::init<>())
        .def_readwrite("energy", &ModelBundle::energy)
        .def_readwrite("zone", &ModelBundle::zone)
        .def("validate", &ModelBundle::validate);
    m.def("load_bundle", &load_bundle);
    m.def("mpc_config_from_settings",
          [](const AppConfig& cfg) { return mpc_config_from_settings(cfg.mpc); });

    py::class_<HorizonHistory>(m, "HorizonHistory")
        .def_static("from_frame", &HorizonHistory::from_frame)
        .def_property_readonly("depth", &HorizonHistory::depth);

    py::class_<MPCSolution>(m, "MPCSolution")
        .def_readonly("u_cont", &MPCSolution::u_cont)
        .def_readonly("u_int", &MPCSolution::u_int)
        .def_readonly("cost", &MPCSolution::cost)
        .def_readonly("iterations", &MPCSolution::iterations)
        .def_readonly("converged", &MPCSolution::converged)
        .def_readonly("predicted_energy", &MPCSolution::predicted_energy)
        .def_readonly("predicted_temps", &MPCSolution::predicted_temps);

    m.def("solve",
          [](const MPCConfig& cfg, const ModelBundle& models, const HorizonHistory& history) {
              return solve(cfg, models, history, nullptr);
          });
    m.def("evaluate_sequence",
          [](const MPCConfig& cfg, const ModelBundle& models, const HorizonHistory& history,
             const std::vector<std::vector<double>>& u) {
              return evaluate_sequence(cfg, models, history, u, nullptr, nullptr);
          });
    m.def("round_setpoints", &round_setpoints);
    m.def("forecast_weather", &forecast_weather);

    py::class_<SignalStats>(m, "SignalStats")
        .def_readonly("mean", &SignalStats::mean)
        .def_readonly("std", &SignalStats::stddev);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("pooled", &MetricsReport::pooled)
        .def_readonly("per_zone", &MetricsReport::per_zone)
        .def_readonly("cumulative_energy_kwh", &MetricsReport::cumulative_energy_kwh)
        .def_readonly("degc_hours_below", &MetricsReport::degc_hours_below)
        .def_readonly("degc_hours_above", &MetricsReport::degc_hours_above)
        .def("to_json", &MetricsReport::to_json);
    m.def("metrics_from_frame", &metrics_from_frame, py::arg("frame"),
          py::arg("comfort_min") = 23.0, py::arg("comfort_max") = 27.0);

    py::class_<RunArtifact>(m, "RunArtifact")
        .def_readonly("frame", &RunArtifact::frame)
        .def_readonly("controller", &RunArtifact::controller)
        .def_readonly("seed", &RunArtifact::seed);

    m.def(
        "run_experiment",
        [](const AppConfig& cfg, const std::string& controller, const ModelBundle* models,
           int days, std::uint64_t weather_seed) {
            const MPCConfig base = mpc_config_from_settings(cfg.mpc);
            ControllerKind kind;
            if (controller == "baseline") {
                std::array<double, kZones> sp{};
                sp.fill(cfg.baseline_setpoint);
                kind = ControllerKind::baseline(sp, base);
            } else if (controller == "mpc-min") {
                kind = ControllerKind::mpc_min(base);
            } else if (controller == "mpc-tracking") {
                kind = ControllerKind::mpc_tracking(base);
            } else {
                throw Error(ErrorKind::config, "unknown controller '" + controller + "'");
            }
            return run_experiment(cfg, kind, models, days, weather_seed);
        },
        py::arg("config"), py::arg("controller"), py::arg("models") = nullptr, py::arg("days") = 3,
        py::arg("weather_seed") = 101);
}
