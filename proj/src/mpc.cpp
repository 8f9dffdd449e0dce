#include "hvacmpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hvacmpc/errors.hpp"

namespace hvacmpc {

void MPCConfig::validate() const {
    if (horizon < 1) throw Error(ErrorKind::config, "mpc: horizon must be >= 1");
    if (lambda_energy < 0.0 || lambda_tracking < 0.0) {
        throw Error(ErrorKind::config, "mpc: lambda weights must be >= 0");
    }
    const std::size_t z = t_ref.size();
    if (z == 0 || t_min.size() != z || t_max.size() != z) {
        throw Error(ErrorKind::config, "mpc: t_ref/t_min/t_max must share a nonzero length");
    }
    for (std::size_t j = 0; j < z; ++j) {
        if (!(t_min[j] < t_max[j])) throw Error(ErrorKind::config, "mpc: need t_min < t_max");
    }
    if (!(u_min < u_max)) throw Error(ErrorKind::config, "mpc: need u_min < u_max");
    if (!(slack_weight > 0.0)) throw Error(ErrorKind::config, "mpc: slack_weight must be > 0");
    if (control_period_steps < 1 || max_iters < 1 || alternations < 1 || restarts < 0) {
        throw Error(ErrorKind::config, "mpc: bad solver counts");
    }
    if (!(step_size > 0.0) || !(tol_rel >= 0.0) || !(softplus_beta > 0.0)) {
        throw Error(ErrorKind::config, "mpc: bad solver parameters");
    }
}

int ModelBundle::required_history_depth() const {
    int d = 0;
    auto bump = [&](const LagSpec& s) {
        d = std::max({d, s.delta_y, s.delta_d, s.delta_u});
    };
    bump(energy.lagspec);
    for (const MLPModel& m : zone) bump(m.lagspec);
    return d + 1;
}

void ModelBundle::validate() const {
    if (zone.empty()) throw Error(ErrorKind::invalid_input, "model bundle has no zone models");
    if (!energy.target_id.is_energy) {
        throw Error(ErrorKind::invalid_input, "bundle energy slot holds a non-energy model");
    }
    energy.validate();
    const int z = zones();
    const auto e_manifest = regressor_manifest(energy.lagspec, energy.target_id, z);
    if (static_cast<int>(e_manifest.size()) != energy.input_width()) {
        throw Error(ErrorKind::invalid_input,
                    "energy model width " + std::to_string(energy.input_width()) +
                        " does not match its lag specification for " + std::to_string(z) +
                        " zones (" + std::to_string(e_manifest.size()) + ")");
    }
    for (int j = 0; j < z; ++j) {
        const MLPModel& m = zone[static_cast<std::size_t>(j)];
        if (m.target_id.is_energy || m.target_id.zone != j + 1) {
            throw Error(ErrorKind::invalid_input,
                        "zone model slot " + std::to_string(j + 1) + " holds " + m.target_id.str());
        }
        m.validate();
        const auto manifest = regressor_manifest(m.lagspec, m.target_id, z);
        if (static_cast<int>(manifest.size()) != m.input_width()) {
            throw Error(ErrorKind::invalid_input,
                        "zone model " + std::to_string(j + 1) + " width mismatch");
        }
    }
}

HorizonHistory HorizonHistory::from_frame(const TimeSeriesFrame& frame, std::size_t t0,
                                          int depth) {
    if (depth < 1 || t0 >= frame.size() || static_cast<std::size_t>(depth) > t0 + 1) {
        throw Error(ErrorKind::invalid_input,
                    "history buffer underflow: need " + std::to_string(depth) +
                        " rows ending at row " + std::to_string(t0));
    }
    HorizonHistory h;
    h.rows.assign(frame.rows().begin() + static_cast<std::ptrdiff_t>(t0 + 1 - depth),
                  frame.rows().begin() + static_cast<std::ptrdiff_t>(t0 + 1));
    return h;
}

const FrameRow& HorizonHistory::at(int k) const {
    const int idx = static_cast<int>(rows.size()) - 1 + k;
    if (k > 0 || idx < 0) {
        throw Error(ErrorKind::invalid_input,
                    "history buffer underflow at offset " + std::to_string(k));
    }
    return rows[static_cast<std::size_t>(idx)];
}

std::vector<WeatherSample> forecast_weather(const HorizonHistory& history, int n) {
    if (history.rows.empty()) {
        throw Error(ErrorKind::invalid_input, "forecast_weather: empty history");
    }
    const FrameRow& last = history.at(0);
    return std::vector<WeatherSample>(static_cast<std::size_t>(std::max(0, n)),
                                      WeatherSample{last.t_out, last.humidity, last.solar});
}

bool predict_comp_mode(const std::vector<double>& t_pred, const std::vector<double>& setpoints,
                       std::vector<bool>& split_state) {
    if (t_pred.size() != setpoints.size() || t_pred.size() != split_state.size()) {
        throw Error(ErrorKind::invalid_input, "predict_comp_mode: length mismatch");
    }
    bool any = false;
    for (std::size_t j = 0; j < t_pred.size(); ++j) {
        split_state[j] = relay_step(setpoints[j], t_pred[j], split_state[j]);
        any = any || split_state[j];
    }
    return any;
}

std::vector<std::vector<double>> slack_from_temps(const std::vector<std::vector<double>>& T,
                                                  const std::vector<double>& t_min,
                                                  const std::vector<double>& t_max) {
    std::vector<std::vector<double>> eps(T.size(), std::vector<double>(t_min.size(), 0.0));
    for (std::size_t s = 0; s < T.size(); ++s) {
        for (std::size_t j = 0; j < t_min.size(); ++j) {
            eps[s][j] = std::max({0.0, t_min[j] - T[s][j], T[s][j] - t_max[j]});
        }
    }
    return eps;
}

double cost(const std::vector<double>& E, const std::vector<std::vector<double>>& T,
            const std::vector<std::vector<double>>& eps, const MPCConfig& cfg) {
    double c = 0.0;
    for (std::size_t s = 0; s < E.size(); ++s) {
        c += cfg.lambda_energy * E[s];
        for (std::size_t j = 0; j < cfg.t_ref.size(); ++j) {
            const double dev = T[s][j] - cfg.t_ref[j];
            c += cfg.lambda_tracking * dev * dev + cfg.slack_weight * eps[s][j];
        }
    }
    return c;
}

namespace {

struct Source {
    enum class Kind { constant, input_u, pred_energy, pred_temp, comp } kind;
    double value = 0.0; // Kind::constant
    int step = 0;
    int zone = 0;
};

Source map_feature(const LagFeature& f, int step, const HorizonHistory& hist,
                   const std::vector<WeatherSample>& forecast) {
    const int q = step - f.lag; // paper-time offset from t0
    auto hist_row = [&](int k) -> const FrameRow& { return hist.at(k); };
    Source s;
    if (f.signal == "energy") {
        if (q >= 0) return {Source::Kind::pred_energy, 0.0, q, 0};
        s.kind = Source::Kind::constant;
        s.value = hist_row(q + 1).energy;
        return s;
    }
    if (f.signal == "t_out" || f.signal == "humidity" || f.signal == "solar") {
        s.kind = Source::Kind::constant;
        if (q <= 0) {
            const FrameRow& r = hist_row(q);
            s.value = f.signal == "t_out" ? r.t_out
                                          : (f.signal == "humidity" ? r.humidity : r.solar);
        } else {
            if (static_cast<std::size_t>(q - 1) >= forecast.size()) {
                throw Error(ErrorKind::invalid_input, "rollout: forecast shorter than horizon");
            }
            const WeatherSample& w = forecast[static_cast<std::size_t>(q - 1)];
            s.value = f.signal == "t_out" ? w.t_out : (f.signal == "humidity" ? w.humidity : w.solar);
        }
        return s;
    }
    if (f.signal.rfind("t_zone_", 0) == 0) {
        const int j = std::stoi(f.signal.substr(7)) - 1;
        if (q >= 1) return {Source::Kind::pred_temp, 0.0, q - 1, j};
        s.kind = Source::Kind::constant;
        s.value = hist_row(q).t_zone[static_cast<std::size_t>(j)];
        return s;
    }
    if (f.signal.rfind("sp_zone_", 0) == 0) {
        const int j = std::stoi(f.signal.substr(8)) - 1;
        if (q >= 0) return {Source::Kind::input_u, 0.0, q, j};
        s.kind = Source::Kind::constant;
        s.value = hist_row(q).sp_zone[static_cast<std::size_t>(j)];
        return s;
    }
    if (f.signal == "comp_mode") {
        if (q >= 0) return {Source::Kind::comp, 0.0, q, 0};
        s.kind = Source::Kind::constant;
        s.value = static_cast<double>(hist_row(q).comp_mode);
        return s;
    }
    throw Error(ErrorKind::invalid_input, "rollout: unknown signal '" + f.signal + "'");
}

// Per-solve plumbing: precomputed regressor sources for every step/model so
// the descent loop never touches strings or history lookups.
class RolloutEngine {
public:
    RolloutEngine(const ModelBundle& models, const HorizonHistory& history,
                  const std::vector<WeatherSample>& forecast, int horizon)
        : models_(models), horizon_(horizon), zones_(models.zones()) {
        if (history.depth() < models.required_history_depth()) {
            throw Error(ErrorKind::invalid_input,
                        "history depth " + std::to_string(history.depth()) +
                            " below required " + std::to_string(models.required_history_depth()));
        }
        const auto e_manifest =
            regressor_manifest(models.energy.lagspec, models.energy.target_id, zones_);
        energy_wiring_.resize(static_cast<std::size_t>(horizon_));
        zone_wiring_.resize(static_cast<std::size_t>(horizon_));
        for (int s = 0; s < horizon_; ++s) {
            auto& ew = energy_wiring_[static_cast<std::size_t>(s)];
            ew.reserve(e_manifest.size());
            for (const auto& f : e_manifest) ew.push_back(map_feature(f, s, history, forecast));
            auto& zw = zone_wiring_[static_cast<std::size_t>(s)];
            zw.resize(static_cast<std::size_t>(zones_));
            for (int j = 0; j < zones_; ++j) {
                const MLPModel& zm = models.zone[static_cast<std::size_t>(j)];
                const auto manifest = regressor_manifest(zm.lagspec, zm.target_id, zones_);
                auto& w = zw[static_cast<std::size_t>(j)];
                w.reserve(manifest.size());
                for (const auto& f : manifest) w.push_back(map_feature(f, s, history, forecast));
            }
        }
        zone_tapes_.resize(static_cast<std::size_t>(horizon_ * zones_));
        energy_tapes_.resize(static_cast<std::size_t>(horizon_));
        zone_inputs_.resize(static_cast<std::size_t>(horizon_ * zones_));
        energy_inputs_.resize(static_cast<std::size_t>(horizon_));
    }

    // Zone models never reference energy or compressor features, so the
    // temperature rollout stands alone.
    void forward_temps(const std::vector<std::vector<double>>& u, bool with_tapes,
                       std::vector<std::vector<double>>& temps) {
        temps.assign(static_cast<std::size_t>(horizon_), std::vector<double>(zones_, 0.0));
        Eigen::VectorXd x;
        for (int s = 0; s < horizon_; ++s) {
            for (int j = 0; j < zones_; ++j) {
                const MLPModel& zm = models_.zone[static_cast<std::size_t>(j)];
                assemble(zone_wiring_[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)], u,
                         nullptr, temps, nullptr, x);
                const std::size_t slot = static_cast<std::size_t>(s * zones_ + j);
                zone_inputs_[slot] = zm.input_norm.apply_row(x);
                double yn;
                if (with_tapes) {
                    yn = forward_tape(zm, zone_inputs_[slot], zone_tapes_[slot]);
                } else {
                    yn = zm.forward(zone_inputs_[slot]);
                }
                temps[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] =
                    yn * zm.target_norm.stddev()(0) + zm.target_norm.mean()(0);
            }
        }
    }

    void forward_energy(const std::vector<std::vector<double>>& u, const std::vector<int>& comp,
                        const std::vector<std::vector<double>>& temps, bool with_tapes,
                        std::vector<double>& energy) {
        energy.assign(static_cast<std::size_t>(horizon_), 0.0);
        Eigen::VectorXd x;
        for (int s = 0; s < horizon_; ++s) {
            assemble(energy_wiring_[static_cast<std::size_t>(s)], u, &energy, temps, &comp, x);
            const std::size_t slot = static_cast<std::size_t>(s);
            energy_inputs_[slot] = models_.energy.input_norm.apply_row(x);
            double yn;
            if (with_tapes) {
                yn = forward_tape(models_.energy, energy_inputs_[slot], energy_tapes_[slot]);
            } else {
                yn = models_.energy.forward(energy_inputs_[slot]);
            }
            energy[slot] = yn * models_.energy.target_norm.stddev()(0) +
                           models_.energy.target_norm.mean()(0);
        }
    }

    // Reverse pass over the recorded tapes. a_energy/a_temps are the cost
    // adjoints in physical units and are consumed in place.
    void backward(std::vector<double>& a_energy, std::vector<std::vector<double>>& a_temps,
                  std::vector<std::vector<double>>& grad_u) {
        grad_u.assign(static_cast<std::size_t>(horizon_), std::vector<double>(zones_, 0.0));
        for (int s = horizon_ - 1; s >= 0; --s) {
            const std::size_t ss = static_cast<std::size_t>(s);
            const double seed_e =
                a_energy[ss] * models_.energy.target_norm.stddev()(0);
            if (seed_e != 0.0) {
                Eigen::VectorXd g =
                    backward_input(models_.energy, energy_tapes_[ss], seed_e);
                g = g.cwiseQuotient(models_.energy.input_norm.stddev());
                scatter(energy_wiring_[ss], g, a_energy, a_temps, grad_u);
            }
            for (int j = zones_ - 1; j >= 0; --j) {
                const double aj = a_temps[ss][static_cast<std::size_t>(j)];
                if (aj == 0.0) continue;
                const MLPModel& zm = models_.zone[static_cast<std::size_t>(j)];
                const std::size_t slot = static_cast<std::size_t>(s * zones_ + j);
                Eigen::VectorXd g =
                    backward_input(zm, zone_tapes_[slot], aj * zm.target_norm.stddev()(0));
                g = g.cwiseQuotient(zm.input_norm.stddev());
                scatter(zone_wiring_[ss][static_cast<std::size_t>(j)], g, a_energy, a_temps,
                        grad_u);
            }
        }
    }

private:
    void assemble(const std::vector<Source>& wiring, const std::vector<std::vector<double>>& u,
                  const std::vector<double>* energy, const std::vector<std::vector<double>>& temps,
                  const std::vector<int>* comp, Eigen::VectorXd& x) const {
        x.resize(static_cast<Eigen::Index>(wiring.size()));
        for (std::size_t i = 0; i < wiring.size(); ++i) {
            const Source& src = wiring[i];
            switch (src.kind) {
            case Source::Kind::constant:
                x(static_cast<Eigen::Index>(i)) = src.value;
                break;
            case Source::Kind::input_u:
                x(static_cast<Eigen::Index>(i)) =
                    u[static_cast<std::size_t>(src.step)][static_cast<std::size_t>(src.zone)];
                break;
            case Source::Kind::pred_energy:
                x(static_cast<Eigen::Index>(i)) = (*energy)[static_cast<std::size_t>(src.step)];
                break;
            case Source::Kind::pred_temp:
                x(static_cast<Eigen::Index>(i)) =
                    temps[static_cast<std::size_t>(src.step)][static_cast<std::size_t>(src.zone)];
                break;
            case Source::Kind::comp:
                x(static_cast<Eigen::Index>(i)) =
                    static_cast<double>((*comp)[static_cast<std::size_t>(src.step)]);
                break;
            }
        }
    }

    static void scatter(const std::vector<Source>& wiring, const Eigen::VectorXd& g,
                        std::vector<double>& a_energy, std::vector<std::vector<double>>& a_temps,
                        std::vector<std::vector<double>>& grad_u) {
        for (std::size_t i = 0; i < wiring.size(); ++i) {
            const Source& src = wiring[i];
            const double gi = g(static_cast<Eigen::Index>(i));
            switch (src.kind) {
            case Source::Kind::input_u:
                grad_u[static_cast<std::size_t>(src.step)][static_cast<std::size_t>(src.zone)] += gi;
                break;
            case Source::Kind::pred_energy:
                a_energy[static_cast<std::size_t>(src.step)] += gi;
                break;
            case Source::Kind::pred_temp:
                a_temps[static_cast<std::size_t>(src.step)][static_cast<std::size_t>(src.zone)] += gi;
                break;
            case Source::Kind::constant:
            case Source::Kind::comp:
                break; // not decision variables
            }
        }
    }

    const ModelBundle& models_;
    int horizon_;
    int zones_;
    std::vector<std::vector<Source>> energy_wiring_;              // [step][col]
    std::vector<std::vector<std::vector<Source>>> zone_wiring_;   // [step][zone][col]
    std::vector<ForwardTape> zone_tapes_;
    std::vector<ForwardTape> energy_tapes_;
    std::vector<Eigen::VectorXd> zone_inputs_;
    std::vector<Eigen::VectorXd> energy_inputs_;
};

double softplus(double x, double beta) {
    const double bx = beta * x;
    if (bx > 30.0) return x;
    if (bx < -30.0) return std::exp(bx) / beta;
    return std::log1p(std::exp(bx)) / beta;
}

double sigmoid(double x) {
    if (x > 30.0) return 1.0;
    if (x < -30.0) return std::exp(x);
    return 1.0 / (1.0 + std::exp(-x));
}

std::vector<bool> reconstruct_splits(const HorizonHistory& history) {
    const int depth = history.depth();
    const std::size_t z = history.rows.front().t_zone.size();
    std::vector<bool> split(z, false);
    const FrameRow& oldest = history.at(-(depth - 1));
    for (std::size_t j = 0; j < z; ++j) {
        split[j] = oldest.t_zone[j] < oldest.sp_zone[j] - 0.5;
    }
    for (int k = -(depth - 2); k <= 0; ++k) {
        const FrameRow& prev = history.at(k - 1);
        const FrameRow& cur = history.at(k);
        for (std::size_t j = 0; j < z; ++j) {
            split[j] = relay_step(prev.sp_zone[j], cur.t_zone[j], split[j]);
        }
    }
    return split;
}

} // namespace

std::vector<int> emulate_comp_sequence(const ModelBundle& models, const HorizonHistory& history,
                                       const std::vector<std::vector<double>>& temps,
                                       const std::vector<std::vector<double>>& u_seq) {
    const int n = static_cast<int>(u_seq.size());
    const int z = models.zones();
    std::vector<bool> split_full = reconstruct_splits(history);
    // keep only the modeled zones (a 10-zone frame may back a smaller bundle)
    std::vector<bool> split(split_full.begin(), split_full.begin() + z);
    std::vector<int> comp(static_cast<std::size_t>(n), 0);
    comp[0] = history.at(0).comp_mode;
    for (int q = 1; q < n; ++q) {
        std::vector<double> t(temps[static_cast<std::size_t>(q - 1)].begin(),
                              temps[static_cast<std::size_t>(q - 1)].end());
        const bool on = predict_comp_mode(t, u_seq[static_cast<std::size_t>(q - 1)], split);
        comp[static_cast<std::size_t>(q)] = on ? 1 : 0;
    }
    return comp;
}

RolloutResult rollout(const ModelBundle& models, const HorizonHistory& history,
                      const std::vector<WeatherSample>& forecast,
                      const std::vector<std::vector<double>>& u_seq,
                      const std::vector<int>& comp_seq) {
    const int n = static_cast<int>(u_seq.size());
    if (comp_seq.size() != u_seq.size()) {
        throw Error(ErrorKind::invalid_input, "rollout: comp_seq length mismatch");
    }
    RolloutResult r;
    RolloutEngine engine(models, history, forecast, n);
    engine.forward_temps(u_seq, false, r.temps);
    engine.forward_energy(u_seq, comp_seq, r.temps, false, r.energy);
    return r;
}

double evaluate_sequence(const MPCConfig& cfg, const ModelBundle& models,
                         const HorizonHistory& history,
                         const std::vector<std::vector<double>>& u_seq, RolloutResult* out,
                         std::vector<int>* comp_out) {
    const int n = static_cast<int>(u_seq.size());
    const auto forecast = forecast_weather(history, n);
    RolloutEngine engine(models, history, forecast, n);
    RolloutResult r;
    engine.forward_temps(u_seq, false, r.temps);
    const auto comp = emulate_comp_sequence(models, history, r.temps, u_seq);
    engine.forward_energy(u_seq, comp, r.temps, false, r.energy);
    const auto eps = slack_from_temps(r.temps, cfg.t_min, cfg.t_max);
    const double c = cost(r.energy, r.temps, eps, cfg);
    if (out) *out = std::move(r);
    if (comp_out) *comp_out = comp;
    return c;
}

namespace {

// Smoothed objective and its gradient with a frozen compressor sequence.
double smoothed_cost_and_grad(const MPCConfig& cfg, const ModelBundle& models,
                              RolloutEngine& engine, const std::vector<std::vector<double>>& u,
                              const std::vector<int>& comp_frozen,
                              std::vector<std::vector<double>>& temps, std::vector<double>& energy,
                              std::vector<std::vector<double>>& grad_u) {
    engine.forward_temps(u, true, temps);
    engine.forward_energy(u, comp_frozen, temps, true, energy);

    const int n = static_cast<int>(u.size());
    const int z = models.zones();
    const double beta = cfg.softplus_beta;
    double c = 0.0;
    std::vector<double> a_energy(static_cast<std::size_t>(n), cfg.lambda_energy);
    std::vector<std::vector<double>> a_temps(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(z), 0.0));
    for (int s = 0; s < n; ++s) {
        c += cfg.lambda_energy * energy[static_cast<std::size_t>(s)];
        for (int j = 0; j < z; ++j) {
            const double t = temps[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
            const double dev = t - cfg.t_ref[static_cast<std::size_t>(j)];
            const double lo = cfg.t_min[static_cast<std::size_t>(j)] - t;
            const double hi = t - cfg.t_max[static_cast<std::size_t>(j)];
            c += cfg.lambda_tracking * dev * dev +
                 cfg.slack_weight * (softplus(lo, beta) + softplus(hi, beta));
            a_temps[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] =
                2.0 * cfg.lambda_tracking * dev +
                cfg.slack_weight * (sigmoid(beta * hi) - sigmoid(beta * lo));
        }
    }
    engine.backward(a_energy, a_temps, grad_u);
    return c;
}

struct BoxAdam {
    std::vector<std::vector<double>> m, v;
    long step = 0;

    void reset(int n, int z) {
        m.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(z), 0.0));
        v = m;
        step = 0;
    }
};

} // namespace

double rollout_cost_gradient(const MPCConfig& cfg, const ModelBundle& models,
                             const HorizonHistory& history,
                             const std::vector<std::vector<double>>& u_seq,
                             const std::vector<int>& comp_seq,
                             std::vector<std::vector<double>>& grad_u) {
    const int n = static_cast<int>(u_seq.size());
    const auto forecast = forecast_weather(history, n);
    RolloutEngine engine(models, history, forecast, n);
    std::vector<std::vector<double>> temps;
    std::vector<double> energy;
    return smoothed_cost_and_grad(cfg, models, engine, u_seq, comp_seq, temps, energy, grad_u);
}

std::vector<int> round_setpoints(const std::vector<double>& u_first,
                                 const std::vector<double>& t_ref, double u_min, double u_max) {
    const int lo = static_cast<int>(std::ceil(u_min - 1e-9));
    const int hi = static_cast<int>(std::floor(u_max + 1e-9));
    std::vector<int> out(u_first.size(), 0);
    for (std::size_t j = 0; j < u_first.size(); ++j) {
        const double u = u_first[j];
        const double fl = std::floor(u);
        double frac = u - fl;
        int n;
        if (frac > 0.5) {
            n = static_cast<int>(fl) + 1;
        } else if (frac < 0.5) {
            n = static_cast<int>(fl);
        } else {
            const double ref = j < t_ref.size() ? t_ref[j] : u;
            const int a = static_cast<int>(fl), b = a + 1;
            // tie: pick the integer nearer the reference, lower on a dead tie
            n = std::abs(ref - b) < std::abs(ref - a) ? b : a;
        }
        out[j] = std::clamp(n, lo, hi);
    }
    return out;
}

MPCSolution solve(const MPCConfig& cfg, const ModelBundle& models, const HorizonHistory& history,
                  const MPCSolution* warm_start) {
    cfg.validate();
    models.validate();
    const int n = cfg.horizon;
    const int z = cfg.zones();
    if (models.zones() != z) {
        throw Error(ErrorKind::invalid_input, "solve: config zone count != model bundle");
    }

    auto clamp_seq = [&](std::vector<std::vector<double>> u) {
        for (auto& row : u) {
            for (double& v : row) v = std::clamp(v, cfg.u_min, cfg.u_max);
        }
        return u;
    };

    // multi-start candidates: shifted warm start plus constant sequences
    std::vector<std::vector<std::vector<double>>> candidates;
    if (warm_start && static_cast<int>(warm_start->u_cont.size()) == n) {
        std::vector<std::vector<double>> shifted(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            const int src = std::min(s + cfg.control_period_steps, n - 1);
            shifted[static_cast<std::size_t>(s)] = warm_start->u_cont[static_cast<std::size_t>(src)];
        }
        candidates.push_back(clamp_seq(std::move(shifted)));
    }
    const double constants[3] = {23.0, 25.0, 27.0};
    for (int i = 0; i < std::min(cfg.restarts, 3); ++i) {
        candidates.push_back(clamp_seq(std::vector<std::vector<double>>(
            static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(z),
                                                             constants[i]))));
    }
    if (candidates.empty()) {
        candidates.push_back(clamp_seq(std::vector<std::vector<double>>(
            static_cast<std::size_t>(n),
            std::vector<double>(static_cast<std::size_t>(z), 25.0))));
    }

    const auto forecast = forecast_weather(history, n);
    RolloutEngine engine(models, history, forecast, n);

    MPCSolution best;
    double best_cost = std::numeric_limits<double>::infinity();
    int best_candidate = -1;
    std::vector<int> candidate_iters;
    std::vector<bool> candidate_converged;
    std::vector<double> candidate_costs;

    std::vector<std::vector<double>> temps, grad_u;
    std::vector<double> energy;

    auto consider = [&](const std::vector<std::vector<double>>& u_try, int candidate_idx,
                        double* out_cost) {
        RolloutResult rr;
        std::vector<int> comp;
        const double c = evaluate_sequence(cfg, models, history, u_try, &rr, &comp);
        if (out_cost) *out_cost = c;
        if (std::isfinite(c) && c < best_cost) {
            best_cost = c;
            best.u_cont = u_try;
            best.predicted_energy = std::move(rr.energy);
            best.predicted_temps = std::move(rr.temps);
            best.comp_seq = std::move(comp);
            best_candidate = candidate_idx;
        }
    };

    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        std::vector<std::vector<double>> u = candidates[ci];
        double c_init = 0.0;
        consider(u, static_cast<int>(ci), &c_init);
        if (!std::isfinite(c_init)) {
            candidate_iters.push_back(0);
            candidate_converged.push_back(false);
            candidate_costs.push_back(c_init);
            continue;
        }

        int iters = 0;
        bool converged = false;
        BoxAdam adam;
        for (int phase = 0; phase < cfg.alternations; ++phase) {
            engine.forward_temps(u, false, temps);
            const auto comp_frozen = emulate_comp_sequence(models, history, temps, u);
            adam.reset(n, z);
            converged = false;
            double c_prev = std::numeric_limits<double>::infinity();
            for (int it = 0; it < cfg.max_iters; ++it) {
                const double c_s = smoothed_cost_and_grad(cfg, models, engine, u, comp_frozen,
                                                          temps, energy, grad_u);
                ++iters;
                if (!std::isfinite(c_s)) break;

                // exact-hinge tracking of the iterate, reusing the rollout
                {
                    const auto comp_x = emulate_comp_sequence(models, history, temps, u);
                    std::vector<double> e_x = energy;
                    if (comp_x != comp_frozen) {
                        engine.forward_energy(u, comp_x, temps, false, e_x);
                    }
                    const auto eps = slack_from_temps(temps, cfg.t_min, cfg.t_max);
                    const double c_exact = cost(e_x, temps, eps, cfg);
                    if (std::isfinite(c_exact) && c_exact < best_cost) {
                        best_cost = c_exact;
                        best.u_cont = u;
                        best.predicted_energy = e_x;
                        best.predicted_temps = temps;
                        best.comp_seq = comp_x;
                        best_candidate = static_cast<int>(ci);
                    }
                }

                if (std::abs(c_prev - c_s) < cfg.tol_rel * std::max(1.0, std::abs(c_prev))) {
                    converged = true;
                    break;
                }
                c_prev = c_s;

                ++adam.step;
                const double cor1 = 1.0 - std::pow(0.9, static_cast<double>(adam.step));
                const double cor2 = 1.0 - std::pow(0.999, static_cast<double>(adam.step));
                for (int s = 0; s < n; ++s) {
                    for (int j = 0; j < z; ++j) {
                        const std::size_t ss = static_cast<std::size_t>(s);
                        const std::size_t jj = static_cast<std::size_t>(j);
                        const double g = grad_u[ss][jj];
                        double step;
                        if (cfg.step_rule == MPCConfig::StepRule::adam) {
                            adam.m[ss][jj] = 0.9 * adam.m[ss][jj] + 0.1 * g;
                            adam.v[ss][jj] = 0.999 * adam.v[ss][jj] + 0.001 * g * g;
                            step = cfg.step_size * (adam.m[ss][jj] / cor1) /
                                   (std::sqrt(adam.v[ss][jj] / cor2) + 1e-8);
                        } else {
                            step = cfg.step_size * g;
                        }
                        u[ss][jj] = std::clamp(u[ss][jj] - step, cfg.u_min, cfg.u_max);
                    }
                }
            }
        }
        double c_final = 0.0;
        consider(u, static_cast<int>(ci), &c_final);
        candidate_iters.push_back(iters);
        candidate_converged.push_back(converged);
        candidate_costs.push_back(std::min(c_init, c_final));
    }

    if (best_candidate < 0) {
        throw Error(ErrorKind::solver,
                    "MPC solve failed: non-finite cost at every start (" +
                        std::to_string(candidates.size()) + " candidates)");
    }

    best.cost = best_cost;
    best.eps = slack_from_temps(best.predicted_temps, cfg.t_min, cfg.t_max);
    best.u_int = round_setpoints(best.u_cont[0], cfg.t_ref, cfg.u_min, cfg.u_max);
    best.iterations = candidate_iters[static_cast<std::size_t>(best_candidate)];
    best.converged = candidate_converged[static_cast<std::size_t>(best_candidate)];
    best.restarts_used = static_cast<int>(candidates.size());
    best.candidate_costs = candidate_costs;
    return best;
}

} // namespace hvacmpc
