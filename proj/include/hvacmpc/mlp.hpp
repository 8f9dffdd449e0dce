#ifndef HVACMPC_MLP_HPP
#define HVACMPC_MLP_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "hvacmpc/pipeline.hpp"

namespace hvacmpc {

/// Feed-forward ReLU network (identity output) plus the normalizers and lag
/// specification it was trained with. Both f_E and f_T models live here; the
/// energy architecture is two hidden layers of 50, zone models one.
struct MLPModel {
    std::vector<int> dims;                  // input, hidden..., 1
    std::vector<Eigen::MatrixXd> weights;   // weights[l]: dims[l+1] x dims[l]
    std::vector<Eigen::VectorXd> biases;
    Normalizer input_norm;                  // width dims.front()
    Normalizer target_norm;                 // width 1
    LagSpec lagspec;
    TargetId target_id;
    int format_version = 1;
    std::string training_meta;              // JSON text, provenance only

    int input_width() const { return dims.empty() ? 0 : dims.front(); }

    /// Chain-consistent dims, finite weights, and the per-target hidden
    /// structure (energy: 50-50, zone: 50). Throws Error(invalid_input).
    void validate() const;

    /// Normalized-space evaluation; x must have width dims[0].
    double forward(const Eigen::VectorXd& x_norm) const;

    /// Exact reverse-mode d(forward)/dx; subgradient 0 at ReLU kinks.
    Eigen::VectorXd grad_input(const Eigen::VectorXd& x_norm) const;

    /// Raw-space convenience: normalize, forward, denormalize.
    double predict(const Eigen::VectorXd& x_raw) const;
};

/// Activations cached by forward_tape for reuse in backward passes.
struct ForwardTape {
    std::vector<Eigen::VectorXd> act; // act[0] = input, act[l] = layer l output
};

double forward_tape(const MLPModel& m, const Eigen::VectorXd& x_norm, ForwardTape& tape);

/// d(output)/d(input) scaled by dy, reusing a tape from forward_tape.
Eigen::VectorXd backward_input(const MLPModel& m, const ForwardTape& tape, double dy);

struct ParamGrads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
};

/// d(output)/d(params) at one input, for gradient verification.
ParamGrads grad_params(const MLPModel& m, const Eigen::VectorXd& x_norm);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 256;
    int max_epochs = 500;
    int patience = 20;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0; // normalized space
    double val_mse = 0.0;
};

struct TrainResult {
    MLPModel model; // best-validation checkpoint
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_mse = 0.0;
};

/// Minibatch Adam on MSE in normalized space, He init, early stopping on
/// validation MSE. Normalizers are fit on the training split only.
/// Reproducible per seed. Throws Error(training) on non-finite loss.
TrainResult train(const LaggedDataset& train_set, const LaggedDataset& val_set,
                  const std::vector<int>& hidden_dims, const TrainConfig& cfg);

inline std::vector<int> hidden_dims_for(const TargetId& t) {
    return t.is_energy ? std::vector<int>{50, 50} : std::vector<int>{50};
}

struct Histogram {
    std::vector<double> edges;  // size bins + 1
    std::vector<std::int64_t> counts;
};

struct EvalReport {
    double mae = 0.0;
    double rmse = 0.0;
    double p95 = 0.0;
    double persistence_mae = 0.0;
    double persistence_rmse = 0.0;
    double persistence_p95 = 0.0;
    std::vector<double> abs_errors;             // physical units
    std::vector<double> persistence_abs_errors;
    Histogram model_hist;
    Histogram persistence_hist;
};

/// Physical-unit errors of the model and of the persistence baseline
/// (E_t := E_{t-1}, T_{t+1} := T_t) on the same samples.
EvalReport evaluate(const MLPModel& m, const LaggedDataset& ds);

void save_model(const MLPModel& m, const std::string& path);
MLPModel load_model(const std::string& path);

} // namespace hvacmpc

#endif
