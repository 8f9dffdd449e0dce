#include "hvacmpc/pipeline.hpp"

#include <cmath>
#include <fstream>

#include "hvacmpc/errors.hpp"
#include "hvacmpc/rng.hpp"

namespace hvacmpc {

namespace {

double signal_value(const FrameRow& row, const std::string& signal) {
    if (signal == "energy") return row.energy;
    if (signal == "t_out") return row.t_out;
    if (signal == "humidity") return row.humidity;
    if (signal == "solar") return row.solar;
    if (signal == "comp_mode") return static_cast<double>(row.comp_mode);
    if (signal.rfind("t_zone_", 0) == 0) return row.t_zone[std::stoi(signal.substr(7)) - 1];
    if (signal.rfind("sp_zone_", 0) == 0) return row.sp_zone[std::stoi(signal.substr(8)) - 1];
    throw Error(ErrorKind::invalid_input, "unknown signal '" + signal + "'");
}

} // namespace

std::vector<LagFeature> regressor_manifest(const LagSpec& spec, const TargetId& target,
                                           int zones) {
    std::vector<LagFeature> m;
    if (target.is_energy) {
        for (int k = 1; k <= spec.delta_y; ++k) m.push_back({"energy", k});
        std::vector<std::string> d = {"t_out", "humidity", "solar"};
        for (int j = 1; j <= zones; ++j) d.push_back("t_zone_" + std::to_string(j));
        for (const auto& s : d) {
            for (int k = 0; k <= spec.delta_d; ++k) m.push_back({s, k});
        }
        std::vector<std::string> u;
        for (int j = 1; j <= zones; ++j) u.push_back("sp_zone_" + std::to_string(j));
        u.push_back("comp_mode");
        for (const auto& s : u) {
            for (int k = 0; k <= spec.delta_u; ++k) m.push_back({s, k});
        }
    } else {
        const std::string tz = "t_zone_" + std::to_string(target.zone);
        for (int k = 0; k <= spec.delta_y; ++k) m.push_back({tz, k});
        for (const auto& s : {"t_out", "humidity", "solar"}) {
            for (int k = 0; k <= spec.delta_d; ++k) m.push_back({s, k});
        }
        const std::string sp = "sp_zone_" + std::to_string(target.zone);
        for (int k = 0; k <= spec.delta_u; ++k) m.push_back({sp, k});
    }
    return m;
}

std::size_t manifest_frame_row(std::size_t t, const LagFeature& f) {
    const std::size_t row = t - static_cast<std::size_t>(f.lag);
    return f.signal == "energy" ? row + 1 : row;
}

int LaggedDataset::column(const std::string& signal, int lag) const {
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (manifest[i].signal == signal && manifest[i].lag == lag) {
            return static_cast<int>(i);
        }
    }
    throw Error(ErrorKind::invalid_input,
                "no column for (" + signal + ", lag " + std::to_string(lag) + ")");
}

void LaggedDataset::write_manifest_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << "column,signal,lag\n";
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        out << i << ',' << manifest[i].signal << ',' << manifest[i].lag << '\n';
    }
}

LaggedDataset make_lagged_samples(const TimeSeriesFrame& frame, const LagSpec& lagspec,
                                  const TargetId& target) {
    if (lagspec.delta_y < 0 || lagspec.delta_d < 0 || lagspec.delta_u < 0) {
        throw Error(ErrorKind::invalid_input, "lag deltas must be >= 0");
    }
    if (!target.is_energy && (target.zone < 1 || target.zone > kZones)) {
        throw Error(ErrorKind::invalid_input, "zone targets are 1..10");
    }

    LaggedDataset ds;
    ds.target = target;
    ds.lagspec = lagspec;
    ds.manifest = regressor_manifest(lagspec, target, kZones);

    // earliest paper-time anchor with all lagged frame rows in range
    const int own_lookback = target.is_energy ? lagspec.delta_y - 1 : lagspec.delta_y;
    const int t_min = std::max({own_lookback, lagspec.delta_d, lagspec.delta_u, 0});
    const std::int64_t n = static_cast<std::int64_t>(frame.size());
    const std::int64_t count = n - 1 - t_min; // targets live at row t+1
    if (count <= 0) {
        throw Error(ErrorKind::invalid_input,
                    "frame too short for the lag specification: need more than " +
                        std::to_string(t_min + 1) + " rows, have " + std::to_string(n));
    }

    const std::string target_signal =
        target.is_energy ? "energy" : "t_zone_" + std::to_string(target.zone);

    ds.X.resize(count, static_cast<Eigen::Index>(ds.manifest.size()));
    ds.y.resize(count);
    ds.target_timestamps.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const std::size_t t = static_cast<std::size_t>(t_min + i);
        for (std::size_t c = 0; c < ds.manifest.size(); ++c) {
            ds.X(i, static_cast<Eigen::Index>(c)) =
                signal_value(frame[manifest_frame_row(t, ds.manifest[c])], ds.manifest[c].signal);
        }
        ds.y(i) = signal_value(frame[t + 1], target_signal);
        ds.target_timestamps.push_back(frame[t + 1].timestamp);
    }
    return ds;
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    if (X.rows() == 0) throw Error(ErrorKind::invalid_input, "cannot fit normalizer on no data");
    Normalizer n;
    n.mean_ = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - n.mean_.transpose();
    n.std_ = (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index c = 0; c < n.std_.size(); ++c) {
        if (!(n.std_(c) > 1e-12)) {
            const std::string name = static_cast<std::size_t>(c) < names.size()
                                         ? names[static_cast<std::size_t>(c)]
                                         : "column " + std::to_string(c);
            throw Error(ErrorKind::invalid_input,
                        "feature '" + name + "' has (near-)zero variance on the training split");
        }
    }
    return n;
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean_.transpose()).array().rowwise() / std_.transpose().array();
}

Eigen::VectorXd Normalizer::apply_row(const Eigen::VectorXd& x) const {
    return (x - mean_).cwiseQuotient(std_);
}

Eigen::MatrixXd Normalizer::invert(const Eigen::MatrixXd& Xn) const {
    return (Xn.array().rowwise() * std_.transpose().array()).rowwise() + mean_.transpose().array();
}

Eigen::VectorXd Normalizer::invert_row(const Eigen::VectorXd& xn) const {
    return xn.cwiseProduct(std_) + mean_;
}

Normalizer Normalizer::from_moments(Eigen::VectorXd mean, Eigen::VectorXd stddev) {
    Normalizer n;
    n.mean_ = std::move(mean);
    n.std_ = std::move(stddev);
    return n;
}

std::pair<LaggedDataset, LaggedDataset> chronological_split(const LaggedDataset& ds,
                                                            double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw Error(ErrorKind::invalid_input, "split fraction must be in (0, 1)");
    }
    const Eigen::Index n = ds.X.rows();
    const Eigen::Index k = static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n)));
    LaggedDataset train = ds, val = ds;
    train.X = ds.X.topRows(k);
    train.y = ds.y.head(k);
    train.target_timestamps.assign(ds.target_timestamps.begin(), ds.target_timestamps.begin() + k);
    val.X = ds.X.bottomRows(n - k);
    val.y = ds.y.tail(n - k);
    val.target_timestamps.assign(ds.target_timestamps.begin() + k, ds.target_timestamps.end());
    return {std::move(train), std::move(val)};
}

std::vector<std::array<double, kZones>> excitation_schedule(std::uint64_t seed, int days) {
    if (days < 1) throw Error(ErrorKind::invalid_input, "excitation_schedule: days must be >= 1");
    const int rows = days * 86400 / static_cast<int>(kFramePeriodSec);
    std::vector<std::array<double, kZones>> sched(static_cast<std::size_t>(rows));
    const int hold_min = 60 * 60 / static_cast<int>(kFramePeriodSec);  // 1 h in steps
    const int hold_max = 120 * 60 / static_cast<int>(kFramePeriodSec); // 2 h in steps
    for (int j = 0; j < kZones; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
        int k = 0;
        double prev = -1.0;
        while (k < rows) {
            // successive levels differ so each hold is a visible segment
            double sp;
            do {
                sp = static_cast<double>(rng.uniform_int(22, 28));
            } while (sp == prev);
            prev = sp;
            const int hold = static_cast<int>(rng.uniform_int(hold_min, hold_max));
            for (int i = 0; i < hold && k < rows; ++i, ++k) sched[static_cast<std::size_t>(k)][j] = sp;
        }
    }
    return sched;
}

} // namespace hvacmpc
