// hvacmpc: data generation, model training/validation, closed-loop
// experiments and A/B reports for the simulated 10-zone heating plant.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "hvacmpc/config.hpp"
#include "hvacmpc/errors.hpp"
#include "hvacmpc/experiment.hpp"
#include "hvacmpc/mlp.hpp"
#include "hvacmpc/mpc.hpp"
#include "hvacmpc/pipeline.hpp"
#include "hvacmpc/plant.hpp"
#include "hvacmpc/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hvacmpc;

namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::config:
        return 2;
    case ErrorKind::ingestion:
    case ErrorKind::io:
    case ErrorKind::serialization:
        return 3;
    case ErrorKind::training:
        return 4;
    case ErrorKind::solver:
        return 5;
    }
    return 1;
}

// --out, optionally re-rooted by HVACMPC_OUT_ROOT for harness automation
std::string resolve_out(const std::string& out) {
    const char* root = std::getenv("HVACMPC_OUT_ROOT");
    if (root && *root && fs::path(out).is_relative()) {
        return (fs::path(root) / out).string();
    }
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory '" + dir + "'");
}

void write_snapshot(const AppConfig& cfg, const std::string& dir, const std::string& invocation) {
    std::ofstream snap(dir + "/config.snapshot");
    if (!snap) throw Error(ErrorKind::io, "cannot write '" + dir + "/config.snapshot'");
    snap << cfg.serialize(invocation);
}

AppConfig load_config_opt(const std::optional<std::string>& path) {
    return path ? AppConfig::load(*path) : AppConfig::defaults();
}

TargetId parse_target(const std::string& s) {
    if (s == "energy") return {true, 0};
    if (s.rfind("zone:", 0) == 0) {
        int j = 0;
        try {
            j = std::stoi(s.substr(5));
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "bad --target '" + s + "'");
        }
        if (j < 1 || j > kZones) {
            throw Error(ErrorKind::config, "zone targets are 1.." + std::to_string(kZones));
        }
        return {false, j};
    }
    throw Error(ErrorKind::config, "--target must be 'energy' or 'zone:<j>'");
}

int cmd_excite(const AppConfig& cfg, std::uint64_t weather_seed, std::uint64_t excitation_seed,
               const std::string& out, const std::string& invocation) {
    ensure_dir(out);
    const auto schedule = excitation_schedule(excitation_seed, cfg.excite_days);
    const auto weather =
        synth_weather(cfg.weather, weather_seed, cfg.excite_days, cfg.start_epoch());
    const auto frame = simulate(cfg.zones, cfg.power, weather, schedule, cfg.dt_seconds,
                                cfg.start_epoch(), cfg.initial_temp_c);
    write_csv(frame, out + "/excitation.csv");
    write_snapshot(cfg, out, invocation);
    std::cout << "wrote " << frame.size() << " rows to " << out << "/excitation.csv\n";
    return 0;
}

int cmd_train(const AppConfig& cfg, const std::string& data, const std::string& out,
              const std::string& invocation) {
    ensure_dir(out);
    const TargetId target = parse_target(cfg.train.target);
    const TimeSeriesFrame frame = load_csv(data);
    const LagSpec spec = target.is_energy ? energy_lagspec() : zone_lagspec();
    const LaggedDataset ds = make_lagged_samples(frame, spec, target);
    auto [train_set, val_set] = chronological_split(ds, 0.8);

    TrainConfig tc;
    tc.learning_rate = cfg.train.learning_rate;
    tc.batch_size = cfg.train.batch_size;
    tc.max_epochs = cfg.train.max_epochs;
    tc.patience = cfg.train.patience;
    tc.seed = cfg.train.seed;
    TrainResult result = train(train_set, val_set, hidden_dims_for(target), tc);

    save_model(result.model, out + "/" + model_filename(target));
    const EvalReport report = evaluate(result.model, val_set);

    json j;
    j["target"] = target.str();
    j["samples"] = {{"train", train_set.size()}, {"validation", val_set.size()}};
    j["mae"] = report.mae;
    j["rmse"] = report.rmse;
    j["p95"] = report.p95;
    j["persistence_mae"] = report.persistence_mae;
    j["persistence_rmse"] = report.persistence_rmse;
    j["persistence_p95"] = report.persistence_p95;
    j["best_epoch"] = result.best_epoch;
    j["best_val_mse"] = result.best_val_mse;
    json hist = json::array();
    for (const auto& e : result.history) {
        hist.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
    }
    j["history"] = hist;
    std::ofstream ej(out + "/" + target.str() + ".eval.json");
    if (!ej) throw Error(ErrorKind::io, "cannot write the eval report");
    ej << j.dump(1) << '\n';

    write_snapshot(cfg, out, invocation);
    std::cout << target.str() << ": mae " << report.mae << " vs persistence "
              << report.persistence_mae << " (best epoch " << result.best_epoch << ")\n";
    return 0;
}

void write_hist_csv(const std::string& path, const EvalReport& r) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << "bin_lo,bin_hi,model_count,persistence_count\n";
    for (std::size_t k = 0; k < r.model_hist.counts.size(); ++k) {
        out << r.model_hist.edges[k] << ',' << r.model_hist.edges[k + 1] << ','
            << r.model_hist.counts[k] << ',' << r.persistence_hist.counts[k] << '\n';
    }
}

int cmd_validate(const AppConfig& cfg, const std::string& data, const std::string& models_dir,
                 const std::string& out, const std::string& invocation) {
    ensure_dir(out);
    const TimeSeriesFrame frame = load_csv(data);

    json report;
    report["data"] = data;
    json per_model = json::array();
    std::vector<TargetId> targets;
    targets.push_back({true, 0});
    for (int j = 1; j <= kZones; ++j) targets.push_back({false, j});
    for (const TargetId& t : targets) {
        const std::string path = models_dir + "/" + model_filename(t);
        if (!fs::exists(path)) continue;
        const MLPModel model = load_model(path);
        const LaggedDataset ds = make_lagged_samples(frame, model.lagspec, t);
        const EvalReport r = evaluate(model, ds);
        per_model.push_back({{"target", t.str()},
                             {"mae", r.mae},
                             {"rmse", r.rmse},
                             {"p95", r.p95},
                             {"persistence_mae", r.persistence_mae},
                             {"persistence_rmse", r.persistence_rmse},
                             {"persistence_p95", r.persistence_p95},
                             {"samples", ds.size()}});
        write_hist_csv(out + "/hist_" + t.str() + ".csv", r);
    }
    if (per_model.empty()) {
        throw Error(ErrorKind::io, "no model files found under '" + models_dir + "'");
    }
    report["models"] = per_model;
    std::ofstream rj(out + "/validation.json");
    if (!rj) throw Error(ErrorKind::io, "cannot write validation.json");
    rj << report.dump(1) << '\n';
    write_snapshot(cfg, out, invocation);
    std::cout << "validated " << per_model.size() << " model(s) against " << data << "\n";
    return 0;
}

int cmd_run(const AppConfig& cfg, const std::optional<std::string>& models_dir,
            std::uint64_t weather_seed, const std::string& out, const std::string& invocation) {
    const MPCConfig base = mpc_config_from_settings(cfg.mpc);
    ControllerKind controller;
    if (cfg.run_controller == "baseline") {
        std::array<double, kZones> sp{};
        sp.fill(cfg.baseline_setpoint);
        controller = ControllerKind::baseline(sp, base);
    } else if (cfg.run_controller == "mpc-min") {
        controller = ControllerKind::mpc_min(base);
    } else if (cfg.run_controller == "mpc-tracking") {
        controller = ControllerKind::mpc_tracking(base);
    } else {
        throw Error(ErrorKind::config,
                    "--controller must be baseline|mpc-min|mpc-tracking, got '" +
                        cfg.run_controller + "'");
    }

    std::optional<ModelBundle> bundle;
    if (controller.kind != ControllerKind::Kind::baseline) {
        if (!models_dir) {
            throw Error(ErrorKind::config, cfg.run_controller + " requires --models");
        }
        bundle = load_bundle(*models_dir);
    }

    RunArtifact art = run_experiment(cfg, controller, bundle ? &*bundle : nullptr, cfg.run_days,
                                     weather_seed);
    art.config_snapshot = cfg.serialize(invocation);
    ensure_dir(out);
    save_run(out, art);
    const MetricsReport m = metrics(art);
    std::cout << cfg.run_controller << ": " << art.frame.size() << " rows, "
              << m.cumulative_energy_kwh << " kWh, pooled " << m.pooled.mean << " +/- "
              << m.pooled.stddev << " degC, " << art.solves.size() << " solves\n";
    return 0;
}

int cmd_report(const AppConfig& cfg, const std::string& run_a, const std::string& run_b,
               const std::string& out, const std::string& invocation) {
    const RunArtifact a = load_run(run_a);
    const RunArtifact b = load_run(run_b);
    const ComparisonReport cmp = compare(a, b);
    ensure_dir(out);
    write_comparison(out, cmp, a, b);
    write_snapshot(cfg, out, invocation);
    std::cout << "energy delta " << cmp.energy_delta_kwh << " kWh (" << cmp.energy_delta_pct
              << "% of A)" << (cmp.weather_dissimilar ? ", weather differs" : "") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"neural-model predictive control toolkit for a simulated 10-zone heating plant"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "key-value config file (built-in defaults if omitted)");

    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> days;

    auto* excite = app.add_subcommand("excite", "generate an excitation dataset CSV");
    excite->add_option("--days", days, "days of excitation data");
    excite->add_option("--seed", seed, "base seed (derives weather/excitation streams)");
    excite->add_option("--out", out, "output directory");

    auto* train_cmd = app.add_subcommand("train", "train one model from a dataset CSV");
    std::string data, target_str;
    train_cmd->add_option("--data", data, "dataset CSV")->required();
    train_cmd->add_option("--target", target_str, "energy or zone:<j>");
    train_cmd->add_option("--seed", seed, "training seed");
    train_cmd->add_option("--out", out, "output directory");

    auto* validate_cmd = app.add_subcommand("validate", "score models against persistence");
    std::string models_dir_v;
    validate_cmd->add_option("--data", data, "dataset CSV")->required();
    validate_cmd->add_option("--models", models_dir_v, "model directory")->required();
    validate_cmd->add_option("--out", out, "output directory");

    auto* run_cmd = app.add_subcommand("run", "closed-loop experiment against the plant");
    std::string controller;
    std::optional<std::string> models_dir;
    run_cmd->add_option("--controller", controller, "baseline|mpc-min|mpc-tracking");
    run_cmd->add_option("--models", models_dir, "model directory (MPC controllers)");
    run_cmd->add_option("--days", days, "experiment length in days");
    run_cmd->add_option("--seed", seed, "base seed (derives the weather stream)");
    run_cmd->add_option("--out", out, "run directory");

    auto* report_cmd = app.add_subcommand("report", "compare two run directories");
    std::string run_a, run_b;
    report_cmd->add_option("--run-a", run_a, "reference run directory")->required();
    report_cmd->add_option("--run-b", run_b, "candidate run directory")->required();
    report_cmd->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::string invocation = "command =";
    for (int i = 1; i < argc; ++i) invocation += std::string(" ") + argv[i];

    try {
        AppConfig cfg = load_config_opt(config_path);
        const std::string out_dir = resolve_out(out);

        if (excite->parsed()) {
            if (days) cfg.excite_days = *days;
            if (cfg.excite_days < 1) throw Error(ErrorKind::config, "--days must be >= 1");
            const std::uint64_t ws = seed ? derive_seed(*seed, 1) : cfg.weather_seed;
            const std::uint64_t es = seed ? derive_seed(*seed, 2) : cfg.excitation_seed;
            cfg.weather_seed = ws;
            cfg.excitation_seed = es;
            return cmd_excite(cfg, ws, es, out_dir, invocation);
        }
        if (train_cmd->parsed()) {
            if (!target_str.empty()) cfg.train.target = target_str;
            if (seed) cfg.train.seed = *seed;
            return cmd_train(cfg, data, out_dir, invocation);
        }
        if (validate_cmd->parsed()) {
            return cmd_validate(cfg, data, models_dir_v, out_dir, invocation);
        }
        if (run_cmd->parsed()) {
            if (!controller.empty()) cfg.run_controller = controller;
            if (days) cfg.run_days = *days;
            if (cfg.run_days < 1) throw Error(ErrorKind::config, "--days must be >= 1");
            const std::uint64_t ws = seed ? derive_seed(*seed, 1) : cfg.weather_seed;
            cfg.weather_seed = ws;
            return cmd_run(cfg, models_dir, ws, out_dir, invocation);
        }
        if (report_cmd->parsed()) {
            return cmd_report(cfg, run_a, run_b, out_dir, invocation);
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
