#ifndef HVACMPC_EXPERIMENT_HPP
#define HVACMPC_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hvacmpc/config.hpp"
#include "hvacmpc/mpc.hpp"

namespace hvacmpc {

struct ControllerKind {
    enum class Kind { baseline, mpc_min, mpc_tracking } kind = Kind::baseline;
    std::array<double, kZones> baseline_setpoints{};
    MPCConfig mpc; // unused for baseline

    static ControllerKind baseline(const std::array<double, kZones>& setpoints,
                                   const MPCConfig& box_source);
    /// lambda_E = 1, lambda_T = 0 over the box/bounds of `base`.
    static ControllerKind mpc_min(MPCConfig base);
    /// lambda_E = 0, lambda_T = 1, t_ref = 25.
    static ControllerKind mpc_tracking(MPCConfig base);

    const char* name() const;
    void validate() const;
};

struct SolveRecord {
    std::int64_t timestamp = 0;
    double cost = 0.0;
    std::vector<double> candidate_costs;
    int iterations = 0;
    bool converged = false;
    std::vector<int> u_int;
    std::vector<double> predicted_energy;
    std::vector<std::vector<double>> predicted_temps;
    std::vector<std::vector<double>> eps;
    double wall_ms = 0.0;
};

struct RunArtifact {
    TimeSeriesFrame frame;
    std::vector<SolveRecord> solves;
    std::string controller;
    std::uint64_t seed = 0;
    std::string config_snapshot;
};

/// Closed-loop experiment: Baseline holds fixed setpoints through the plant
/// relay; MPC controllers re-solve every control_period_steps rows on
/// quantized measurements and actuate the rounded first input. Weather comes
/// from the seed, so runs with equal seeds see bit-identical weather.
RunArtifact run_experiment(const AppConfig& cfg, const ControllerKind& controller,
                           const ModelBundle* models, int days, std::uint64_t weather_seed);

struct SignalStats {
    double mean = 0.0;
    double stddev = 0.0; // population
};

struct MetricsReport {
    std::vector<SignalStats> per_zone;
    SignalStats pooled;
    double cumulative_energy_kwh = 0.0;
    std::int64_t count_below = 0;
    std::int64_t count_above = 0;
    double degc_hours_below = 0.0;
    double degc_hours_above = 0.0;
    double comfort_min = 0.0;
    double comfort_max = 0.0;
    SignalStats weather_t_out, weather_humidity, weather_solar;

    std::string to_json() const;
};

MetricsReport metrics(const RunArtifact& run, double comfort_min = 23.0,
                      double comfort_max = 27.0);
MetricsReport metrics_from_frame(const TimeSeriesFrame& frame, double comfort_min = 23.0,
                                 double comfort_max = 27.0);

struct ComparisonReport {
    MetricsReport a, b;
    std::string controller_a, controller_b;
    double energy_delta_kwh = 0.0; // B - A
    double energy_delta_pct = 0.0; // relative to A
    std::vector<double> cumulative_diff_kwh; // per row: cumsum(A) - cumsum(B)
    double t_out_mean_diff = 0.0;
    bool weather_dissimilar = false; // |mean t_out difference| > 1 degC

    std::string to_json() const;
};

/// Side-by-side comparison; runs must cover equal durations.
ComparisonReport compare(const RunArtifact& a, const RunArtifact& b);

/// Run directory layout: frame.csv, solves.jsonl, config.snapshot,
/// metrics.json.
void save_run(const std::string& dir, const RunArtifact& run);
RunArtifact load_run(const std::string& dir);

/// comparison.json plus plot-ready CSVs (temperature traces, cumulative
/// energy difference, weather histograms).
void write_comparison(const std::string& dir, const ComparisonReport& cmp,
                      const RunArtifact& a, const RunArtifact& b);

/// MPCConfig with kZones-wide bounds taken from the [mpc] settings.
MPCConfig mpc_config_from_settings(const MpcSettings& s);

/// Model-directory layout shared by the CLI and the harness:
/// <dir>/energy.model.json and <dir>/zone_<j>.model.json.
std::string model_filename(const TargetId& target);
ModelBundle load_bundle(const std::string& dir);

} // namespace hvacmpc

#endif
