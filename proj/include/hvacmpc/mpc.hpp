#ifndef HVACMPC_MPC_HPP
#define HVACMPC_MPC_HPP

#include <optional>
#include <vector>

#include "hvacmpc/frame.hpp"
#include "hvacmpc/mlp.hpp"
#include "hvacmpc/plant.hpp"

namespace hvacmpc {

/// Receding-horizon problem description. Zone count follows the length of
/// t_ref/t_min/t_max (10 in production, smaller in tests).
struct MPCConfig {
    int horizon = 10; // N
    double lambda_energy = 1.0;
    double lambda_tracking = 0.0;
    std::vector<double> t_ref;
    std::vector<double> t_min;
    std::vector<double> t_max;
    double u_min = 22.0;
    double u_max = 28.0;
    double slack_weight = 100.0;
    int control_period_steps = 3; // model steps between re-solves

    // projected first-order solver
    int max_iters = 200;
    enum class StepRule { adam, gd };
    StepRule step_rule = StepRule::adam;
    double step_size = 0.3;
    double tol_rel = 1e-4;
    int restarts = 3; // constant starts taken from {23, 25, 27}
    int alternations = 3;
    double softplus_beta = 20.0;

    int zones() const { return static_cast<int>(t_ref.size()); }
    void validate() const;
};

/// The learned plant: one energy network and one temperature network per
/// zone, sharing the regressor layout produced by make_lagged_samples.
struct ModelBundle {
    MLPModel energy;
    std::vector<MLPModel> zone;

    int zones() const { return static_cast<int>(zone.size()); }
    int required_history_depth() const;
    /// Checks input widths against the lag specifications and zone count.
    void validate() const;
};

/// The most recent frame rows an MPC solve conditions on. rows.back() is the
/// current time t0; its setpoint cell is never read (it is the decision).
struct HorizonHistory {
    std::vector<FrameRow> rows;

    static HorizonHistory from_frame(const TimeSeriesFrame& frame, std::size_t t0, int depth);

    int depth() const { return static_cast<int>(rows.size()); }
    /// Row at offset k <= 0 from the current time.
    const FrameRow& at(int k) const;
};

/// Persistence forecast: the last observed weather held constant for n steps.
std::vector<WeatherSample> forecast_weather(const HorizonHistory& history, int n);

/// One relay/compressor emulation step on predicted temperatures.
bool predict_comp_mode(const std::vector<double>& t_pred, const std::vector<double>& setpoints,
                       std::vector<bool>& split_state);

/// Exact slack eliminator: eps = max(0, t_min - T, T - t_max) per step/zone.
std::vector<std::vector<double>> slack_from_temps(const std::vector<std::vector<double>>& T,
                                                  const std::vector<double>& t_min,
                                                  const std::vector<double>& t_max);

/// sum_t [ lambda_E E_t + sum_j ( lambda_T (T - T_ref)^2 + slack_weight eps ) ]
double cost(const std::vector<double>& E, const std::vector<std::vector<double>>& T,
            const std::vector<std::vector<double>>& eps, const MPCConfig& cfg);

struct RolloutResult {
    std::vector<double> energy;               // Wh per step
    std::vector<std::vector<double>> temps;   // [step][zone], end-of-window degC
};

/// Single-shooting rollout of the learned models over the horizon.
/// comp_seq[s] is the compressor-mode feature for step s (comp_seq[0] should
/// be the measured current mode). Predictions feed subsequent lags.
RolloutResult rollout(const ModelBundle& models, const HorizonHistory& history,
                      const std::vector<WeatherSample>& forecast,
                      const std::vector<std::vector<double>>& u_seq,
                      const std::vector<int>& comp_seq);

/// Relay-consistent compressor sequence for a candidate input sequence:
/// splits are reconstructed from the buffered history, then stepped along the
/// predicted temperatures. comp_seq[0] is the measured current mode.
std::vector<int> emulate_comp_sequence(const ModelBundle& models, const HorizonHistory& history,
                                       const std::vector<std::vector<double>>& temps,
                                       const std::vector<std::vector<double>>& u_seq);

/// Nearest integer with ties toward t_ref, clamped to [u_min, u_max].
std::vector<int> round_setpoints(const std::vector<double>& u_first,
                                 const std::vector<double>& t_ref, double u_min, double u_max);

struct MPCSolution {
    std::vector<std::vector<double>> u_cont; // [step][zone]
    std::vector<int> u_int;                  // first step, actuated
    std::vector<std::vector<double>> eps;
    std::vector<double> predicted_energy;
    std::vector<std::vector<double>> predicted_temps;
    std::vector<int> comp_seq;
    double cost = 0.0; // exact-hinge objective of u_cont
    int iterations = 0;
    bool converged = false;
    int restarts_used = 0;
    std::vector<double> candidate_costs; // final exact cost per start
};

/// Projected first-order solve of the receding-horizon problem with exact
/// slack elimination, relay-emulated compressor (frozen during descent) and
/// multi-start. Deterministic given its arguments.
MPCSolution solve(const MPCConfig& cfg, const ModelBundle& models, const HorizonHistory& history,
                  const MPCSolution* warm_start = nullptr);

/// Exact-hinge objective of an input sequence through the full pipeline
/// (T rollout, relay-consistent compressor, E rollout, slack elimination).
/// This is the function solve() minimizes and tests enumerate against.
double evaluate_sequence(const MPCConfig& cfg, const ModelBundle& models,
                         const HorizonHistory& history,
                         const std::vector<std::vector<double>>& u_seq,
                         RolloutResult* out = nullptr, std::vector<int>* comp_out = nullptr);

/// d(smoothed cost)/d(u_seq) with the compressor sequence frozen; exposed for
/// gradient-fidelity tests. Returns the smoothed cost.
double rollout_cost_gradient(const MPCConfig& cfg, const ModelBundle& models,
                             const HorizonHistory& history,
                             const std::vector<std::vector<double>>& u_seq,
                             const std::vector<int>& comp_seq,
                             std::vector<std::vector<double>>& grad_u);

} // namespace hvacmpc

#endif
