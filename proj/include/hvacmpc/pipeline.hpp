#ifndef HVACMPC_PIPELINE_HPP
#define HVACMPC_PIPELINE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "hvacmpc/frame.hpp"

namespace hvacmpc {

/// A lag delta means offsets 0..delta (delta+1 terms); the energy target's
/// own history is the exception and starts at offset 1 (delta_y terms).
struct LagSpec {
    int delta_y = 0;
    int delta_d = 0;
    int delta_u = 0;
};

inline LagSpec energy_lagspec() { return {4, 3, 3}; }
inline LagSpec zone_lagspec() { return {3, 3, 3}; }

struct TargetId {
    bool is_energy = true;
    int zone = 0; // 1-based when is_energy == false

    std::string str() const { return is_energy ? "energy" : "zone_" + std::to_string(zone); }
    bool operator==(const TargetId&) const = default;
};

/// One regressor column: `signal` at `lag` steps behind the sample's time
/// index t (the paper's time axis). For every signal except `energy` the
/// value lives at frame row t - lag. The frame's energy column holds the
/// energy of the window *ending* at the row's timestamp, so the energy
/// consumed over the window starting at time s is frame.energy[s + 1]; an
/// energy column at lag k therefore reads frame row t - lag + 1, and the
/// energy target (lag 0) reads row t + 1, the same row as the zone models'
/// next-step temperature target.
struct LagFeature {
    std::string signal;
    int lag = 0;
};

struct LaggedDataset {
    Eigen::MatrixXd X;                  // sample rows x feature columns, raw units
    Eigen::VectorXd y;                  // raw units
    std::vector<LagFeature> manifest;   // one entry per column of X
    std::vector<std::int64_t> target_timestamps;
    TargetId target;
    LagSpec lagspec;

    std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t width() const { return static_cast<std::size_t>(X.cols()); }

    /// Column index of (signal, lag); throws Error(invalid_input) if absent.
    int column(const std::string& signal, int lag) const;

    /// Manifest CSV (column,signal,lag) for audit.
    void write_manifest_csv(const std::string& path) const;
};

/// Frame row holding (signal, lag) for the sample anchored at paper time t,
/// where t is itself a frame row index. Exposed for audit/property tests.
std::size_t manifest_frame_row(std::size_t t, const LagFeature& f);

/// The regressor layout for a target, in dataset column order. `zones` sets
/// how many zone temperatures/setpoints the energy model sees (10 for frames;
/// smaller bundles appear in tests).
std::vector<LagFeature> regressor_manifest(const LagSpec& spec, const TargetId& target,
                                           int zones);

/// Restructures a frame into regressor/target pairs per the NARX layout.
/// Energy target: E lags 1..delta_y, all 13 disturbances (t_out, humidity,
/// solar, 10 zone temperatures) at lags 0..delta_d, all 11 inputs (10
/// setpoints then comp_mode) at lags 0..delta_u. Zone target j: its own
/// temperature at lags 0..delta_y, the 3 weather signals at lags 0..delta_d,
/// its own setpoint at lags 0..delta_u; target is the next-step temperature.
LaggedDataset make_lagged_samples(const TimeSeriesFrame& frame, const LagSpec& lagspec,
                                  const TargetId& target);

/// Per-feature affine standardizer (fit on the training split only).
class Normalizer {
public:
    Normalizer() = default;

    /// Throws Error(invalid_input) naming the feature if any column has
    /// (near-)zero variance. `names` is optional and used for messages.
    static Normalizer fit(const Eigen::MatrixXd& X,
                          const std::vector<std::string>& names = {});

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& Xn) const;
    Eigen::VectorXd invert_row(const Eigen::VectorXd& xn) const;

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& stddev() const { return std_; }
    Eigen::Index width() const { return mean_.size(); }

    static Normalizer from_moments(Eigen::VectorXd mean, Eigen::VectorXd stddev);

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd std_;
};

/// Earliest floor(fraction*n) samples to train, remainder to validation; no
/// shuffling. fraction must be in (0, 1).
std::pair<LaggedDataset, LaggedDataset> chronological_split(const LaggedDataset& ds,
                                                            double fraction);

/// Random excitation: per zone, integer setpoints uniform on {22..28}, each
/// held 60-120 minutes (quantized to Ts); reproducible per seed.
std::vector<std::array<double, kZones>> excitation_schedule(std::uint64_t seed, int days);

} // namespace hvacmpc

#endif
