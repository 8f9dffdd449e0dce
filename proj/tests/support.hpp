#ifndef HVACMPC_TESTS_SUPPORT_HPP
#define HVACMPC_TESTS_SUPPORT_HPP

#include <map>
#include <string>
#include <vector>

#include "hvacmpc/mlp.hpp"
#include "hvacmpc/mpc.hpp"
#include "hvacmpc/pipeline.hpp"

namespace hvacmpc::testing {

// Exact linear map g(x) = intercept + sum coeffs[signal,lag] * x through one
// ReLU pair: relu(a.x + C) - C with C big enough that the unit stays active
// on the whole operating box. Identity normalizers keep everything in raw
// units. Lets solver/rollout tests compute expected values by hand.
inline MLPModel linear_model(const TargetId& target, const LagSpec& spec, int zones,
                             const std::map<std::pair<std::string, int>, double>& coeffs,
                             double intercept, double active_offset = 1e4) {
    const auto manifest = regressor_manifest(spec, target, zones);
    const int width = static_cast<int>(manifest.size());
    const auto hidden = hidden_dims_for(target);

    MLPModel m;
    m.target_id = target;
    m.lagspec = spec;
    m.dims.push_back(width);
    for (int h : hidden) m.dims.push_back(h);
    m.dims.push_back(1);

    const std::size_t layers = m.dims.size() - 1;
    m.weights.resize(layers);
    m.biases.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        m.weights[l] = Eigen::MatrixXd::Zero(m.dims[l + 1], m.dims[l]);
        m.biases[l] = Eigen::VectorXd::Zero(m.dims[l + 1]);
    }
    // first hidden neuron carries the affine map, shifted into the active region
    for (int c = 0; c < width; ++c) {
        const auto key = std::make_pair(manifest[static_cast<std::size_t>(c)].signal,
                                        manifest[static_cast<std::size_t>(c)].lag);
        if (auto it = coeffs.find(key); it != coeffs.end()) {
            m.weights[0](0, c) = it->second;
        }
    }
    m.biases[0](0) = active_offset;
    // pass through any further hidden layers on neuron 0
    for (std::size_t l = 1; l + 1 < layers; ++l) m.weights[l](0, 0) = 1.0;
    m.weights[layers - 1](0, 0) = 1.0;
    m.biases[layers - 1](0) = intercept - active_offset;

    m.input_norm = Normalizer::from_moments(Eigen::VectorXd::Zero(width),
                                            Eigen::VectorXd::Ones(width));
    m.target_norm =
        Normalizer::from_moments(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
    return m;
}

// History whose rows are easy to reason about: constant temperatures and
// setpoints, fixed weather, constant per-window energy.
inline HorizonHistory constant_history(int depth, int zones, double temp, double setpoint,
                                       double energy_wh, double t_out = 5.0, int comp = 0) {
    HorizonHistory h;
    for (int i = 0; i < depth; ++i) {
        FrameRow r;
        r.timestamp = 1767571200 + static_cast<std::int64_t>(i) * kFramePeriodSec;
        r.t_out = t_out;
        r.humidity = 60.0;
        r.solar = 0.0;
        for (int j = 0; j < kZones; ++j) {
            r.t_zone[static_cast<std::size_t>(j)] = temp;
            r.sp_zone[static_cast<std::size_t>(j)] = setpoint;
        }
        r.comp_mode = comp;
        r.energy = energy_wh;
        h.rows.push_back(r);
    }
    (void)zones;
    return h;
}

// One-zone toy bundle with proportional setpoint response:
//   T_{t+1} = T_t + gain * (u_t - T_t)     (leaks toward the setpoint)
//   E_t     = e0 + e_u * u_t
inline ModelBundle toy_bundle(double gain = 0.5, double e0 = 10.0, double e_u = 2.0) {
    ModelBundle b;
    const LagSpec zspec = zone_lagspec();
    b.zone.push_back(linear_model({false, 1}, zspec, 1,
                                  {{{"t_zone_1", 0}, 1.0 - gain}, {{"sp_zone_1", 0}, gain}},
                                  0.0));
    const LagSpec espec = energy_lagspec();
    b.energy = linear_model({true, 0}, espec, 1, {{{"sp_zone_1", 0}, e_u}}, e0);
    return b;
}

} // namespace hvacmpc::testing

#endif
