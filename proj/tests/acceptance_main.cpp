// Acceptance suite: one pass/fail line per criterion. Artifacts (dataset,
// models, runs) are cached under --work-dir so reruns are cheap.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <set>

#include "hvacmpc/config.hpp"
#include "hvacmpc/errors.hpp"
#include "hvacmpc/experiment.hpp"
#include "hvacmpc/mlp.hpp"
#include "hvacmpc/mpc.hpp"
#include "hvacmpc/pipeline.hpp"
#include "hvacmpc/plant.hpp"
#include "hvacmpc/rng.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace hvacmpc;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExcitationDays = 14;
constexpr std::uint64_t kDataSeed = 1234;
constexpr std::uint64_t kRunSeed = 77;

struct Harness {
    std::string work;
    AppConfig cfg = AppConfig::defaults();
    TimeSeriesFrame dataset;
    ModelBundle bundle;
    bool have_dataset = false;
    bool have_bundle = false;
    double train_validate_seconds = 0.0;

    // runs shared between criteria
    RunArtifact baseline3, tracking3, min3;
    bool have_baseline3 = false, have_tracking3 = false, have_min3 = false;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void ensure_dataset(Harness& h) {
    if (h.have_dataset) return;
    const std::string path = h.work + "/excitation.csv";
    if (fs::exists(path)) {
        h.dataset = load_csv(path);
    } else {
        const auto weather = synth_weather(h.cfg.weather, derive_seed(kDataSeed, 1),
                                           kExcitationDays, h.cfg.start_epoch());
        const auto sched = excitation_schedule(derive_seed(kDataSeed, 2), kExcitationDays);
        h.dataset = simulate(h.cfg.zones, h.cfg.power, weather, sched, h.cfg.dt_seconds,
                             h.cfg.start_epoch(), h.cfg.initial_temp_c);
        write_csv(h.dataset, path);
    }
    h.have_dataset = true;
}

MLPModel ensure_model(Harness& h, const TargetId& target) {
    const std::string path = h.work + "/models/" + model_filename(target);
    if (fs::exists(path)) return load_model(path);
    const LagSpec spec = target.is_energy ? energy_lagspec() : zone_lagspec();
    const auto ds = make_lagged_samples(h.dataset, spec, target);
    auto [train_set, val_set] = chronological_split(ds, 0.8);
    TrainConfig tc;
    tc.seed = derive_seed(9, target.is_energy ? 0 : static_cast<std::uint64_t>(target.zone));
    const TrainResult r = train(train_set, val_set, hidden_dims_for(target), tc);
    fs::create_directories(h.work + "/models");
    save_model(r.model, path);
    return r.model;
}

void ensure_bundle(Harness& h) {
    if (h.have_bundle) return;
    ensure_dataset(h);
    const auto t0 = Clock::now();
    h.bundle.energy = ensure_model(h, {true, 0});
    h.bundle.zone.clear();
    for (int j = 1; j <= kZones; ++j) h.bundle.zone.push_back(ensure_model(h, {false, j}));
    h.bundle.validate();
    h.train_validate_seconds = seconds_since(t0);
    h.have_bundle = true;
}

RunArtifact ensure_run(Harness& h, const std::string& name, const ControllerKind& controller,
                       int days, const ModelBundle* models) {
    const std::string dir = h.work + "/runs/" + name;
    if (fs::exists(dir + "/frame.csv")) {
        return load_run(dir);
    }
    RunArtifact run = run_experiment(h.cfg, controller, models, days, kRunSeed);
    run.config_snapshot = h.cfg.serialize("command = acceptance " + name);
    save_run(dir, run);
    return run;
}

void ensure_runs3(Harness& h) {
    ensure_bundle(h);
    const MPCConfig base = mpc_config_from_settings(h.cfg.mpc);
    if (!h.have_baseline3) {
        std::array<double, kZones> sp{};
        sp.fill(h.cfg.baseline_setpoint);
        h.baseline3 = ensure_run(h, "baseline3", ControllerKind::baseline(sp, base), 3, nullptr);
        h.have_baseline3 = true;
    }
    if (!h.have_tracking3) {
        h.tracking3 =
            ensure_run(h, "tracking3", ControllerKind::mpc_tracking(base), 3, &h.bundle);
        h.have_tracking3 = true;
    }
    if (!h.have_min3) {
        h.min3 = ensure_run(h, "min3", ControllerKind::mpc_min(base), 3, &h.bundle);
        h.have_min3 = true;
    }
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// 1. trained models beat persistence on held-out data within the time budget
Outcome criterion1(Harness& h) {
    const auto t0 = Clock::now();
    ensure_bundle(h);

    std::string detail;
    bool ok = true;
    {
        const auto ds = make_lagged_samples(h.dataset, energy_lagspec(), {true, 0});
        auto [tr, va] = chronological_split(ds, 0.8);
        const EvalReport r = evaluate(h.bundle.energy, va);
        const bool mae_ok = r.mae <= 0.7 * r.persistence_mae;
        const bool p95_ok = r.p95 < r.persistence_p95;
        ok = ok && mae_ok && p95_ok;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "energy mae %.3f vs 0.7*pers %.3f, p95 %.3f vs %.3f; ",
                      r.mae, 0.7 * r.persistence_mae, r.p95, r.persistence_p95);
        detail += buf;
    }
    double worst_ratio = 0.0;
    int worst_zone = 0;
    bool p95_all = true;
    for (int j = 1; j <= kZones; ++j) {
        const auto ds = make_lagged_samples(h.dataset, zone_lagspec(), {false, j});
        auto [tr, va] = chronological_split(ds, 0.8);
        const EvalReport r = evaluate(h.bundle.zone[static_cast<std::size_t>(j - 1)], va);
        const double ratio = r.mae / r.persistence_mae;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_zone = j;
        }
        p95_all = p95_all && r.p95 < r.persistence_p95;
    }
    ok = ok && worst_ratio <= 1.0 && p95_all;
    const double secs = seconds_since(t0) + h.train_validate_seconds;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "worst zone mae ratio %.3f (zone %d, limit 1.0), zone p95 all below: %s; "
                  "train+validate %.0f s (budget 600)",
                  worst_ratio, worst_zone, p95_all ? "yes" : "no", secs);
    detail += buf;
    ok = ok && secs <= 600.0;
    return {ok, detail};
}

// 2. reverse-mode gradient through a full N=10 rollout vs central differences
Outcome criterion2(Harness& h) {
    ensure_bundle(h);
    const auto t0 = Clock::now();

    MPCConfig cfg = mpc_config_from_settings(h.cfg.mpc);
    cfg.horizon = 10;
    const int depth = h.bundle.required_history_depth();

    Rng rng(4242);
    int tested = 0;
    double worst = 0.0;
    int attempts = 0;
    while (tested < 20 && attempts < 200) {
        ++attempts;
        const std::size_t t0_row = static_cast<std::size_t>(
            rng.uniform_int(depth, static_cast<std::int64_t>(h.dataset.size()) - 2));
        const auto hist = HorizonHistory::from_frame(h.dataset, t0_row, depth);

        std::vector<std::vector<double>> u(10, std::vector<double>(kZones));
        for (auto& row : u) {
            for (double& v : row) v = rng.uniform(23.5, 26.5);
        }
        std::vector<std::vector<double>> temps_probe(10, std::vector<double>(kZones));
        std::vector<int> comp;
        evaluate_sequence(cfg, h.bundle, hist, u, nullptr, &comp);

        std::vector<std::vector<double>> grad;
        const double c0 = rollout_cost_gradient(cfg, h.bundle, hist, u, comp, grad);
        if (!std::isfinite(c0)) continue;

        const double step = 1e-4;
        double point_worst = 0.0;
        bool kink = false;
        for (int s = 0; s < 10 && !kink; ++s) {
            for (int j = 0; j < kZones; ++j) {
                auto up = u, dn = u;
                up[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] += step;
                dn[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] -= step;
                std::vector<std::vector<double>> g_unused;
                const double cu = rollout_cost_gradient(cfg, h.bundle, hist, up, comp, g_unused);
                const double cd = rollout_cost_gradient(cfg, h.bundle, hist, dn, comp, g_unused);
                const double fd = (cu - cd) / (2 * step);
                // halved-step consistency flags a ReLU kink inside the stencil
                auto up2 = u, dn2 = u;
                up2[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] += step / 2;
                dn2[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] -= step / 2;
                const double cu2 = rollout_cost_gradient(cfg, h.bundle, hist, up2, comp, g_unused);
                const double cd2 = rollout_cost_gradient(cfg, h.bundle, hist, dn2, comp, g_unused);
                const double fd2 = (cu2 - cd2) / step;
                const double scale = std::max({1.0, std::abs(fd), std::abs(fd2)});
                if (std::abs(fd - fd2) / scale > 1e-5) {
                    kink = true;
                    break;
                }
                const double denom = std::max(
                    {1.0, std::abs(fd),
                     std::abs(grad[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)])});
                point_worst = std::max(
                    point_worst,
                    std::abs(grad[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] - fd) /
                        denom);
            }
        }
        if (kink) continue;
        worst = std::max(worst, point_worst);
        ++tested;
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%d kink-free points, worst relative error %.2e (tol 1e-4), %.0f s (budget 60)",
                  tested, worst, secs);
    return {tested >= 20 && worst <= 1e-4 && secs <= 60.0, buf};
}

// 3. projected solve + rounding vs exhaustive enumeration on the toy instance
Outcome criterion3(Harness&) {
    const auto t0 = Clock::now();
    const ModelBundle toy = hvacmpc::testing::toy_bundle(0.5, 10.0, 2.0);
    MPCConfig cfg;
    cfg.horizon = 2;
    cfg.lambda_energy = 1.0;
    cfg.lambda_tracking = 1.0;
    cfg.t_ref = {25.0};
    cfg.t_min = {23.0};
    cfg.t_max = {27.0};
    cfg.max_iters = 150;
    cfg.alternations = 2;

    Rng rng(555);
    double worst_ratio = 0.0;
    int fails = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto hist = hvacmpc::testing::constant_history(
            6, 1, rng.uniform(22.2, 27.8), static_cast<double>(rng.uniform_int(22, 28)), 30.0);
        for (auto& row : hist.rows) {
            for (int j = 0; j < kZones; ++j) {
                row.t_zone[static_cast<std::size_t>(j)] += rng.uniform(-0.4, 0.4);
            }
            row.comp_mode = static_cast<int>(rng.uniform_int(0, 1));
        }

        double best = std::numeric_limits<double>::infinity();
        for (int u0 = 22; u0 <= 28; ++u0) {
            for (int u1 = 22; u1 <= 28; ++u1) {
                best = std::min(best,
                                evaluate_sequence(cfg, toy, hist,
                                                  {{static_cast<double>(u0)},
                                                   {static_cast<double>(u1)}}));
            }
        }
        const MPCSolution sol = solve(cfg, toy, hist);
        std::vector<std::vector<double>> rounded;
        for (const auto& row : sol.u_cont) {
            const auto ints = round_setpoints(row, cfg.t_ref, cfg.u_min, cfg.u_max);
            rounded.push_back({static_cast<double>(ints[0])});
        }
        const double c = evaluate_sequence(cfg, toy, hist, rounded);
        worst_ratio = std::max(worst_ratio, c / best);
        if (c > 1.05 * best + 1e-9) ++fails;
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "20 histories, worst round/optimum ratio %.4f (limit 1.05), %d over, %.1f s "
                  "(budget 60)",
                  worst_ratio, fails, secs);
    return {fails == 0 && secs <= 60.0, buf};
}

// 4. MPC-tracking tightens comfort vs Baseline on identical weather
Outcome criterion4(Harness& h) {
    const auto t0 = Clock::now();
    ensure_runs3(h);
    const MetricsReport mb = metrics(h.baseline3);
    const MetricsReport mt = metrics(h.tracking3);
    const double secs = seconds_since(t0);

    const bool std_ok = mt.pooled.stddev <= 0.7 * mb.pooled.stddev;
    const bool mean_ok = std::abs(mt.pooled.mean - 25.0) < std::abs(mb.pooled.mean - 25.0);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "tracking std %.3f vs 0.7*baseline %.3f; |mean-25| %.3f vs baseline %.3f; "
                  "%.0f s (budget 900)",
                  mt.pooled.stddev, 0.7 * mb.pooled.stddev, std::abs(mt.pooled.mean - 25.0),
                  std::abs(mb.pooled.mean - 25.0), secs);
    return {std_ok && mean_ok && secs <= 900.0, buf};
}

// 5. MPC-min saves energy within the comfort budget on identical weather
Outcome criterion5(Harness& h) {
    const auto t0 = Clock::now();
    ensure_runs3(h);
    const MetricsReport mb = metrics(h.baseline3);
    const MetricsReport mm = metrics(h.min3);
    const double secs = seconds_since(t0);

    const bool energy_ok = mm.cumulative_energy_kwh <= 0.98 * mb.cumulative_energy_kwh;
    const bool comfort_ok = mm.degc_hours_below <= 2.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "mpc-min %.1f kWh vs 0.98*baseline %.1f kWh (%.1f%% saved); lower-bound "
                  "violations %.2f degC*h (budget 2); %.0f s (budget 900)",
                  mm.cumulative_energy_kwh, 0.98 * mb.cumulative_energy_kwh,
                  100.0 * (1.0 - mm.cumulative_energy_kwh / mb.cumulative_energy_kwh),
                  mm.degc_hours_below, secs);
    return {energy_ok && comfort_ok && secs <= 900.0, buf};
}

// 6. median wall time per solve at N=10 with 10 zones
Outcome criterion6(Harness& h) {
    ensure_runs3(h);
    std::vector<double> walls;
    for (const auto& rec : h.tracking3.solves) walls.push_back(rec.wall_ms);
    for (const auto& rec : h.min3.solves) walls.push_back(rec.wall_ms);
    if (walls.empty()) return {false, "no solve records"};
    std::sort(walls.begin(), walls.end());
    const double median = walls[walls.size() / 2];
    const double p95 = walls[static_cast<std::size_t>(0.95 * (walls.size() - 1))];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu solves, median %.0f ms (budget 5000), p95 %.0f ms",
                  walls.size(), median, p95);
    return {median <= 5000.0, buf};
}

// 7. serialization round-trips and bit-identical reruns
Outcome criterion7(Harness& h) {
    ensure_bundle(h);
    std::string detail;

    // model save/load prediction-exact
    const std::string mpath = h.work + "/roundtrip.model.json";
    save_model(h.bundle.energy, mpath);
    const MLPModel loaded = load_model(mpath);
    const auto ds = make_lagged_samples(h.dataset, energy_lagspec(), {true, 0});
    bool model_ok = true;
    Rng rng(31337);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Index row = static_cast<Eigen::Index>(
            rng.uniform_int(0, static_cast<std::int64_t>(ds.size()) - 1));
        const Eigen::VectorXd x = ds.X.row(row);
        model_ok = model_ok && h.bundle.energy.predict(x) == loaded.predict(x);
    }
    detail += std::string("model round-trip ") + (model_ok ? "exact" : "DIFFERS") + "; ";

    // frame csv round trip value-identical
    const std::string fpath = h.work + "/roundtrip.csv";
    write_csv(h.dataset, fpath);
    const bool frame_ok = load_csv(fpath) == h.dataset;
    detail += std::string("frame csv ") + (frame_ok ? "identical" : "DIFFERS") + "; ";

    // repeated seeded runs are bit-identical
    const MPCConfig base = mpc_config_from_settings(h.cfg.mpc);
    std::array<double, kZones> sp{};
    sp.fill(h.cfg.baseline_setpoint);
    const auto cb = ControllerKind::baseline(sp, base);
    const RunArtifact b1 = run_experiment(h.cfg, cb, nullptr, 3, kRunSeed);
    const RunArtifact b2 = run_experiment(h.cfg, cb, nullptr, 3, kRunSeed);
    const bool base_ok =
        b1.frame == b2.frame && metrics(b1).to_json() == metrics(b2).to_json();
    const auto ct = ControllerKind::mpc_tracking(base);
    const RunArtifact t1 = run_experiment(h.cfg, ct, &h.bundle, 1, kRunSeed);
    const RunArtifact t2 = run_experiment(h.cfg, ct, &h.bundle, 1, kRunSeed);
    const bool mpc_ok =
        t1.frame == t2.frame && metrics(t1).to_json() == metrics(t2).to_json();
    detail += std::string("baseline rerun ") + (base_ok ? "identical" : "DIFFERS") +
              ", mpc rerun " + (mpc_ok ? "identical" : "DIFFERS");
    return {model_ok && frame_ok && base_ok && mpc_ok, detail};
}

// 8. simulator invariants on 1000 randomized short simulations
Outcome criterion8(Harness& h) {
    const auto t0 = Clock::now();
    Rng rng(808);
    long hysteresis_bad = 0, comp_bad = 0, energy_bad = 0, passive_bad = 0;

    for (int trial = 0; trial < 1000; ++trial) {
        AppConfig cfg = h.cfg;
        for (auto& z : cfg.zones) {
            z.air_capacitance *= rng.uniform(0.7, 1.3);
            z.wall_capacitance *= rng.uniform(0.7, 1.3);
            z.r_outdoor *= rng.uniform(0.8, 1.25);
            z.r_wall *= rng.uniform(0.8, 1.25);
            z.heat_rate *= rng.uniform(0.7, 1.3);
        }
        if (euler_stability_bound(cfg.zones) <= cfg.dt_seconds) continue;
        const int rows = 60; // 2 h
        WeatherProfile prof = cfg.weather;
        prof.t_mean = rng.uniform(0.0, 12.0);
        auto weather = synth_weather(prof, rng.next_u64(), 1, cfg.start_epoch());
        weather.resize(rows);
        std::vector<std::array<double, kZones>> sched(rows);
        for (auto& s : sched) {
            for (int j = 0; j < kZones; ++j) s[j] = static_cast<double>(rng.uniform_int(22, 28));
        }

        // trace-level checks via the substep hook
        SimState init;
        init.clock = cfg.start_epoch() - kFramePeriodSec;
        const double start_t = rng.uniform(20.0, 27.0);
        init.t_zone.fill(start_t);
        init.t_wall.fill(start_t);
        Simulator sim(cfg.zones, cfg.power, cfg.dt_seconds, init);
        SimState prev = init;
        bool have_prev = false;
        std::array<double, kZones> cur_sp = sched[0];
        sim.on_substep = [&](const SimState& s) {
            bool any = false;
            for (int j = 0; j < kZones; ++j) any = any || s.split_on[j];
            if (s.comp_on != any) ++comp_bad;
            if (have_prev) {
                for (int j = 0; j < kZones; ++j) {
                    if (!prev.split_on[j] && s.split_on[j] &&
                        !(prev.t_zone[j] < cur_sp[j] - 1.5)) {
                        ++hysteresis_bad;
                    }
                    if (prev.split_on[j] && !s.split_on[j] &&
                        !(prev.t_zone[j] > cur_sp[j] + 0.5)) {
                        ++hysteresis_bad;
                    }
                }
            }
            prev = s;
            have_prev = true;
        };

        double total = 0.0;
        std::vector<double> per_window;
        cur_sp = sched[0];
        per_window.push_back(sim.run_window(sched[0], weather[0]));
        for (int k = 0; k + 1 < rows; ++k) {
            cur_sp = sched[static_cast<std::size_t>(k)];
            per_window.push_back(
                sim.run_window(sched[static_cast<std::size_t>(k)], weather[static_cast<std::size_t>(k)]));
        }
        for (double e : per_window) {
            if (e < 0.0) ++energy_bad;
            total += e;
        }
        double again = 0.0;
        for (double e : per_window) again += e;
        if (again != total) ++energy_bad;

        // passive convergence, heating off, constant weather
        auto zoff = cfg.zones;
        for (auto& z : zoff) z.heat_rate = 0.0;
        SimState st = init;
        const WeatherSample wconst{prof.t_mean, 60.0, 0.0};
        double prev_dev = 1e18;
        for (int stp = 0; stp < 120; ++stp) {
            double dev = 0.0;
            for (int j = 0; j < kZones; ++j) dev = std::max(dev, std::abs(st.t_zone[j] - wconst.t_out));
            if (dev > prev_dev + 1e-12) ++passive_bad;
            prev_dev = dev;
            st = thermal_step(st, zoff, wconst, cfg.dt_seconds);
        }
    }
    const double secs = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "violations: hysteresis %ld, compressor %ld, energy %ld, passive %ld over 1000 "
                  "sims, %.1f s (budget 120)",
                  hysteresis_bad, comp_bad, energy_bad, passive_bad, secs);
    return {hysteresis_bad + comp_bad + energy_bad + passive_bad == 0 && secs <= 120.0, buf};
}

} // namespace

int main(int argc, char** argv) {
    std::string work = "acceptance_work";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--work-dir") == 0 && i + 1 < argc) {
            work = argv[++i];
        } else if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--work-dir DIR] [--criterion N]...\n";
            return 2;
        }
    }
    fs::create_directories(work);

    Harness h;
    h.work = work;

    struct Entry {
        int id;
        const char* name;
        Outcome (*fn)(Harness&);
    };
    const Entry entries[] = {
        {1, "model skill vs persistence", criterion1},
        {2, "gradient fidelity through the rollout", criterion2},
        {3, "solver vs brute force on the toy instance", criterion3},
        {4, "comfort reproduction (tracking vs baseline)", criterion4},
        {5, "energy reproduction (mpc-min vs baseline)", criterion5},
        {6, "solve-time budget", criterion6},
        {7, "determinism and round-trips", criterion7},
        {8, "simulator invariants", criterion8},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (!only.empty() && !only.count(e.id)) continue;
        Outcome out;
        try {
            out = e.fn(h);
        } catch (const std::exception& ex) {
            out = {false, std::string("exception: ") + ex.what()};
        }
        std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << e.id << ": " << e.name
                  << " -- " << out.detail << "\n";
        std::cout.flush();
        failures += out.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
