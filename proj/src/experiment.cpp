#include "hvacmpc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hvacmpc/errors.hpp"
#include "hvacmpc/rng.hpp"
#include "hvacmpc/timeutil.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace hvacmpc {

std::string model_filename(const TargetId& target) { return target.str() + ".model.json"; }

ModelBundle load_bundle(const std::string& dir) {
    ModelBundle b;
    b.energy = load_model(dir + "/" + model_filename(TargetId{true, 0}));
    for (int j = 1; j <= kZones; ++j) {
        b.zone.push_back(load_model(dir + "/" + model_filename(TargetId{false, j})));
    }
    b.validate();
    return b;
}

MPCConfig mpc_config_from_settings(const MpcSettings& s) {
    MPCConfig c;
    c.horizon = s.horizon;
    c.lambda_energy = s.lambda_energy;
    c.lambda_tracking = s.lambda_tracking;
    c.t_ref.assign(kZones, s.t_ref);
    c.t_min.assign(kZones, s.t_min);
    c.t_max.assign(kZones, s.t_max);
    c.u_min = s.u_min;
    c.u_max = s.u_max;
    c.slack_weight = s.slack_weight;
    c.control_period_steps = s.control_period_steps;
    c.max_iters = s.max_iters;
    c.step_rule = s.step_rule == "gd" ? MPCConfig::StepRule::gd : MPCConfig::StepRule::adam;
    if (s.step_rule != "gd" && s.step_rule != "adam") {
        throw Error(ErrorKind::config, "[mpc] step_rule must be 'adam' or 'gd'");
    }
    c.step_size = s.step_size;
    c.tol_rel = s.tol_rel;
    c.restarts = s.restarts;
    c.alternations = s.alternations;
    c.softplus_beta = s.softplus_beta;
    c.validate();
    return c;
}

ControllerKind ControllerKind::baseline(const std::array<double, kZones>& setpoints,
                                        const MPCConfig& box_source) {
    ControllerKind c;
    c.kind = Kind::baseline;
    c.baseline_setpoints = setpoints;
    c.mpc = box_source;
    c.validate();
    return c;
}

ControllerKind ControllerKind::mpc_min(MPCConfig base) {
    ControllerKind c;
    c.kind = Kind::mpc_min;
    base.lambda_energy = 1.0;
    base.lambda_tracking = 0.0;
    c.mpc = std::move(base);
    c.validate();
    return c;
}

ControllerKind ControllerKind::mpc_tracking(MPCConfig base) {
    ControllerKind c;
    c.kind = Kind::mpc_tracking;
    base.lambda_energy = 0.0;
    base.lambda_tracking = 1.0;
    base.t_ref.assign(base.t_ref.size(), 25.0);
    c.mpc = std::move(base);
    c.validate();
    return c;
}

const char* ControllerKind::name() const {
    switch (kind) {
    case Kind::baseline: return "baseline";
    case Kind::mpc_min: return "mpc-min";
    case Kind::mpc_tracking: return "mpc-tracking";
    }
    return "?";
}

void ControllerKind::validate() const {
    if (kind == Kind::baseline) {
        for (double sp : baseline_setpoints) {
            if (sp < mpc.u_min || sp > mpc.u_max) {
                throw Error(ErrorKind::config, "baseline setpoints must lie in the setpoint box");
            }
        }
        return;
    }
    mpc.validate();
    if (kind == Kind::mpc_min && !(mpc.lambda_energy == 1.0 && mpc.lambda_tracking == 0.0)) {
        throw Error(ErrorKind::config, "mpc-min requires lambda_E=1, lambda_T=0");
    }
    if (kind == Kind::mpc_tracking) {
        if (!(mpc.lambda_energy == 0.0 && mpc.lambda_tracking == 1.0)) {
            throw Error(ErrorKind::config, "mpc-tracking requires lambda_E=0, lambda_T=1");
        }
        for (double r : mpc.t_ref) {
            if (r != 25.0) throw Error(ErrorKind::config, "mpc-tracking requires t_ref=25");
        }
    }
}

RunArtifact run_experiment(const AppConfig& cfg, const ControllerKind& controller,
                           const ModelBundle* models, int days, std::uint64_t weather_seed) {
    controller.validate();
    if (days < 1) throw Error(ErrorKind::invalid_input, "run_experiment: days must be >= 1");
    const bool is_mpc = controller.kind != ControllerKind::Kind::baseline;
    if (is_mpc && models == nullptr) {
        throw Error(ErrorKind::config, std::string(controller.name()) + " requires trained models");
    }
    if (is_mpc) models->validate();

    const std::int64_t start = cfg.start_epoch();
    const auto weather = synth_weather(cfg.weather, weather_seed, days, start);
    const std::size_t rows = weather.size();

    RunArtifact art;
    art.controller = controller.name();
    art.seed = weather_seed;

    if (!is_mpc) {
        const std::vector<std::array<double, kZones>> schedule(rows,
                                                               controller.baseline_setpoints);
        art.frame = simulate(cfg.zones, cfg.power, weather, schedule, cfg.dt_seconds, start,
                             cfg.initial_temp_c);
        return art;
    }

    const MPCConfig& mpc = controller.mpc;
    const int depth = models->required_history_depth();
    const std::size_t first_solve = static_cast<std::size_t>(depth - 1); // warm-up fills buffers

    SimState init;
    init.clock = start - kFramePeriodSec;
    init.t_zone.fill(cfg.initial_temp_c);
    init.t_wall.fill(cfg.initial_temp_c);
    Simulator sim(cfg.zones, cfg.power, cfg.dt_seconds, init);

    std::array<double, kZones> held{};
    held.fill(cfg.baseline_setpoint);

    art.frame.reserve(rows);
    double wh = sim.run_window(held, weather[0]); // pre-roll, as in simulate()
    MPCSolution prev;
    bool have_prev = false;

    for (std::size_t k = 0;; ++k) {
        FrameRow r;
        r.timestamp = sim.state().clock;
        r.t_out = weather[k].t_out;
        r.humidity = weather[k].humidity;
        r.solar = weather[k].solar;
        r.t_zone = sim.measure();
        r.sp_zone = held; // placeholder until the controller decides
        r.comp_mode = sim.state().comp_on ? 1 : 0;
        r.energy = wh;
        art.frame.push_back(r);

        if (k >= first_solve &&
            (k - first_solve) % static_cast<std::size_t>(mpc.control_period_steps) == 0) {
            const auto history = HorizonHistory::from_frame(art.frame, k, depth);
            const auto t_begin = std::chrono::steady_clock::now();
            MPCSolution sol = solve(mpc, *models, history, have_prev ? &prev : nullptr);
            const auto t_end = std::chrono::steady_clock::now();

            for (int j = 0; j < kZones; ++j) {
                held[static_cast<std::size_t>(j)] =
                    static_cast<double>(sol.u_int[static_cast<std::size_t>(j)]);
            }
            SolveRecord rec;
            rec.timestamp = r.timestamp;
            rec.cost = sol.cost;
            rec.candidate_costs = sol.candidate_costs;
            rec.iterations = sol.iterations;
            rec.converged = sol.converged;
            rec.u_int = sol.u_int;
            rec.predicted_energy = sol.predicted_energy;
            rec.predicted_temps = sol.predicted_temps;
            rec.eps = sol.eps;
            rec.wall_ms =
                std::chrono::duration<double, std::milli>(t_end - t_begin).count();
            art.solves.push_back(std::move(rec));
            prev = std::move(sol);
            have_prev = true;
        }

        art.frame[k].sp_zone = held;
        if (k + 1 == rows) break;
        wh = sim.run_window(held, weather[k]);
    }
    return art;
}

namespace {

SignalStats stats_of(const std::vector<double>& v) {
    SignalStats s;
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
    return s;
}

json stats_json(const SignalStats& s) { return json{{"mean", s.mean}, {"std", s.stddev}}; }

} // namespace

MetricsReport metrics_from_frame(const TimeSeriesFrame& frame, double comfort_min,
                                 double comfort_max) {
    MetricsReport m;
    m.comfort_min = comfort_min;
    m.comfort_max = comfort_max;
    const double hours_per_row = static_cast<double>(kFramePeriodSec) / 3600.0;

    std::vector<double> pooled, t_out, humidity, solar;
    pooled.reserve(frame.size() * kZones);
    for (int j = 0; j < kZones; ++j) {
        std::vector<double> zone;
        zone.reserve(frame.size());
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const double t = frame[i].t_zone[static_cast<std::size_t>(j)];
            zone.push_back(t);
            pooled.push_back(t);
            if (t < comfort_min) {
                ++m.count_below;
                m.degc_hours_below += (comfort_min - t) * hours_per_row;
            } else if (t > comfort_max) {
                ++m.count_above;
                m.degc_hours_above += (t - comfort_max) * hours_per_row;
            }
        }
        m.per_zone.push_back(stats_of(zone));
    }
    m.pooled = stats_of(pooled);

    double wh = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        wh += frame[i].energy;
        t_out.push_back(frame[i].t_out);
        humidity.push_back(frame[i].humidity);
        solar.push_back(frame[i].solar);
    }
    m.cumulative_energy_kwh = wh / 1000.0;
    m.weather_t_out = stats_of(t_out);
    m.weather_humidity = stats_of(humidity);
    m.weather_solar = stats_of(solar);
    return m;
}

MetricsReport metrics(const RunArtifact& run, double comfort_min, double comfort_max) {
    return metrics_from_frame(run.frame, comfort_min, comfort_max);
}

std::string MetricsReport::to_json() const {
    json j;
    json zones = json::array();
    for (const auto& z : per_zone) zones.push_back(stats_json(z));
    j["per_zone"] = zones;
    j["pooled"] = stats_json(pooled);
    j["cumulative_energy_kwh"] = cumulative_energy_kwh;
    j["comfort"] = {{"t_min", comfort_min},
                    {"t_max", comfort_max},
                    {"count_below", count_below},
                    {"count_above", count_above},
                    {"degc_hours_below", degc_hours_below},
                    {"degc_hours_above", degc_hours_above}};
    j["weather"] = {{"t_out", stats_json(weather_t_out)},
                    {"humidity", stats_json(weather_humidity)},
                    {"solar", stats_json(weather_solar)}};
    return j.dump(1);
}

ComparisonReport compare(const RunArtifact& a, const RunArtifact& b) {
    if (a.frame.size() != b.frame.size()) {
        throw Error(ErrorKind::invalid_input, "compare: runs cover different durations");
    }
    ComparisonReport c;
    c.a = metrics(a);
    c.b = metrics(b);
    c.controller_a = a.controller;
    c.controller_b = b.controller;
    c.energy_delta_kwh = c.b.cumulative_energy_kwh - c.a.cumulative_energy_kwh;
    c.energy_delta_pct = c.a.cumulative_energy_kwh > 0.0
                             ? 100.0 * c.energy_delta_kwh / c.a.cumulative_energy_kwh
                             : 0.0;
    c.cumulative_diff_kwh.reserve(a.frame.size());
    double ca = 0.0, cb = 0.0;
    for (std::size_t i = 0; i < a.frame.size(); ++i) {
        ca += a.frame[i].energy;
        cb += b.frame[i].energy;
        c.cumulative_diff_kwh.push_back((ca - cb) / 1000.0);
    }
    c.t_out_mean_diff = c.a.weather_t_out.mean - c.b.weather_t_out.mean;
    c.weather_dissimilar = std::abs(c.t_out_mean_diff) > 1.0;
    return c;
}

std::string ComparisonReport::to_json() const {
    json j;
    j["controller_a"] = controller_a;
    j["controller_b"] = controller_b;
    j["a"] = json::parse(a.to_json());
    j["b"] = json::parse(b.to_json());
    j["energy_delta_kwh"] = energy_delta_kwh;
    j["energy_delta_pct"] = energy_delta_pct;
    j["t_out_mean_diff"] = t_out_mean_diff;
    j["weather_dissimilar"] = weather_dissimilar;
    return j.dump(1);
}

namespace {

json solve_record_to_json(const SolveRecord& r) {
    json j;
    j["timestamp"] = format_iso8601_utc(r.timestamp);
    j["cost"] = r.cost;
    j["candidate_costs"] = r.candidate_costs;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["u_int"] = r.u_int;
    j["predicted_energy"] = r.predicted_energy;
    j["predicted_temps"] = r.predicted_temps;
    j["eps"] = r.eps;
    j["wall_ms"] = r.wall_ms;
    return j;
}

SolveRecord solve_record_from_json(const json& j) {
    SolveRecord r;
    r.timestamp = parse_iso8601_utc(j.at("timestamp").get<std::string>());
    r.cost = j.at("cost").get<double>();
    r.candidate_costs = j.at("candidate_costs").get<std::vector<double>>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.u_int = j.at("u_int").get<std::vector<int>>();
    r.predicted_energy = j.at("predicted_energy").get<std::vector<double>>();
    r.predicted_temps = j.at("predicted_temps").get<std::vector<std::vector<double>>>();
    r.eps = j.at("eps").get<std::vector<std::vector<double>>>();
    r.wall_ms = j.at("wall_ms").get<double>();
    return r;
}

} // namespace

void save_run(const std::string& dir, const RunArtifact& run) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create run directory '" + dir + "'");

    write_csv(run.frame, dir + "/frame.csv");

    std::ofstream solves(dir + "/solves.jsonl");
    if (!solves) throw Error(ErrorKind::io, "cannot write '" + dir + "/solves.jsonl'");
    for (const auto& rec : run.solves) solves << solve_record_to_json(rec).dump() << '\n';

    std::ofstream snap(dir + "/config.snapshot");
    if (!snap) throw Error(ErrorKind::io, "cannot write '" + dir + "/config.snapshot'");
    snap << run.config_snapshot;

    std::ofstream mj(dir + "/metrics.json");
    if (!mj) throw Error(ErrorKind::io, "cannot write '" + dir + "/metrics.json'");
    mj << metrics(run).to_json() << '\n';
}

RunArtifact load_run(const std::string& dir) {
    if (!fs::exists(dir + "/frame.csv")) {
        throw Error(ErrorKind::io, "'" + dir + "' is not a run directory (no frame.csv)");
    }
    RunArtifact run;
    run.frame = load_csv(dir + "/frame.csv");
    if (std::ifstream snap(dir + "/config.snapshot"); snap) {
        std::ostringstream ss;
        ss << snap.rdbuf();
        run.config_snapshot = ss.str();
    }
    if (std::ifstream solves(dir + "/solves.jsonl"); solves) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(solves, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                run.solves.push_back(solve_record_from_json(json::parse(line)));
            } catch (const json::exception& e) {
                throw Error(ErrorKind::ingestion, dir + "/solves.jsonl:" +
                                                      std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    // controller name is recorded in the snapshot's invocation when present
    run.controller = "unknown";
    const std::string key = "controller = ";
    if (auto pos = run.config_snapshot.find(key); pos != std::string::npos) {
        auto end = run.config_snapshot.find('\n', pos);
        run.controller = run.config_snapshot.substr(pos + key.size(), end - pos - key.size());
    }
    return run;
}

void write_comparison(const std::string& dir, const ComparisonReport& cmp, const RunArtifact& a,
                      const RunArtifact& b) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory '" + dir + "'");

    std::ofstream cj(dir + "/comparison.json");
    if (!cj) throw Error(ErrorKind::io, "cannot write comparison.json");
    cj << cmp.to_json() << '\n';

    std::ofstream diff(dir + "/cumulative_energy_diff.csv");
    diff << "timestamp,cumulative_diff_kwh\n";
    for (std::size_t i = 0; i < cmp.cumulative_diff_kwh.size(); ++i) {
        diff << format_iso8601_utc(a.frame[i].timestamp) << ',' << cmp.cumulative_diff_kwh[i]
             << '\n';
    }

    std::ofstream temps(dir + "/temperature_traces.csv");
    temps << "timestamp";
    for (int j = 1; j <= kZones; ++j) temps << ",a_t_zone_" << j;
    for (int j = 1; j <= kZones; ++j) temps << ",b_t_zone_" << j;
    temps << '\n';
    for (std::size_t i = 0; i < a.frame.size(); ++i) {
        temps << format_iso8601_utc(a.frame[i].timestamp);
        for (int j = 0; j < kZones; ++j) temps << ',' << a.frame[i].t_zone[static_cast<std::size_t>(j)];
        for (int j = 0; j < kZones; ++j) temps << ',' << b.frame[i].t_zone[static_cast<std::size_t>(j)];
        temps << '\n';
    }

    // binned weather distributions, run A vs run B
    std::ofstream wh(dir + "/weather_distributions.csv");
    wh << "signal,bin_lo,bin_hi,count_a,count_b\n";
    auto emit = [&](const char* name, auto getter) {
        std::vector<double> va, vb;
        for (std::size_t i = 0; i < a.frame.size(); ++i) va.push_back(getter(a.frame[i]));
        for (std::size_t i = 0; i < b.frame.size(); ++i) vb.push_back(getter(b.frame[i]));
        double lo = va[0], hi = va[0];
        for (double v : va) { lo = std::min(lo, v); hi = std::max(hi, v); }
        for (double v : vb) { lo = std::min(lo, v); hi = std::max(hi, v); }
        if (!(hi > lo)) hi = lo + 1.0;
        const int bins = 24;
        std::vector<std::int64_t> ca(bins, 0), cb(bins, 0);
        auto bucket = [&](double v) {
            int k = static_cast<int>((v - lo) / (hi - lo) * bins);
            return std::clamp(k, 0, bins - 1);
        };
        for (double v : va) ++ca[static_cast<std::size_t>(bucket(v))];
        for (double v : vb) ++cb[static_cast<std::size_t>(bucket(v))];
        for (int k = 0; k < bins; ++k) {
            wh << name << ',' << lo + (hi - lo) * k / bins << ',' << lo + (hi - lo) * (k + 1) / bins
               << ',' << ca[static_cast<std::size_t>(k)] << ',' << cb[static_cast<std::size_t>(k)]
               << '\n';
        }
    };
    emit("t_out", [](const FrameRow& r) { return r.t_out; });
    emit("humidity", [](const FrameRow& r) { return r.humidity; });
    emit("solar", [](const FrameRow& r) { return r.solar; });
}

} // namespace hvacmpc
