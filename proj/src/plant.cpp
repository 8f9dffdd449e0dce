#include "hvacmpc/plant.hpp"

#include <cmath>
#include <string>

#include "hvacmpc/errors.hpp"
#include "hvacmpc/rng.hpp"
#include "hvacmpc/timeutil.hpp"

namespace hvacmpc {

void validate_zone_params(const std::array<ZoneParams, kZones>& zones) {
    for (int j = 0; j < kZones; ++j) {
        const ZoneParams& z = zones[j];
        auto fail = [&](const std::string& msg) {
            throw Error(ErrorKind::config, "zone " + std::to_string(j + 1) + ": " + msg);
        };
        if (!(z.air_capacitance > 0.0)) fail("air_capacitance must be > 0");
        if (!(z.wall_capacitance > 0.0)) fail("wall_capacitance must be > 0");
        if (!(z.r_outdoor > 0.0)) fail("r_outdoor must be > 0");
        if (!(z.r_wall > 0.0)) fail("r_wall must be > 0");
        if (z.heat_rate < 0.0) fail("heat_rate must be >= 0");
        if (z.solar_aperture < 0.0) fail("solar_aperture must be >= 0");
        for (const auto& [k, r] : z.adjacent) {
            if (k < 0 || k >= kZones || k == j) fail("bad adjacent zone index");
            if (!(r > 0.0)) fail("adjacent resistance must be > 0");
            bool mirrored = false;
            for (const auto& [back, rb] : zones[k].adjacent) {
                if (back == j && rb == r) mirrored = true;
            }
            if (!mirrored) {
                fail("adjacency to zone " + std::to_string(k + 1) +
                     " is not mirrored with equal resistance");
            }
        }
    }
}

double euler_stability_bound(const std::array<ZoneParams, kZones>& zones) {
    double bound = 1e300;
    for (const ZoneParams& z : zones) {
        double g_air = 1.0 / z.r_outdoor + 1.0 / z.r_wall;
        for (const auto& [k, r] : z.adjacent) g_air += 1.0 / r;
        bound = std::min(bound, z.air_capacitance / g_air);
        bound = std::min(bound, z.wall_capacitance * z.r_wall);
    }
    return bound;
}

bool relay_step(double setpoint, double t_meas, bool split_on) {
    if (!std::isfinite(setpoint) || !std::isfinite(t_meas)) {
        throw Error(ErrorKind::invalid_input, "relay_step: non-finite input");
    }
    if (t_meas < setpoint - 1.5) return true;
    if (t_meas > setpoint + 0.5) return false;
    return split_on;
}

bool compressor_logic(const std::array<bool, kZones>& split_on) {
    for (bool s : split_on) {
        if (s) return true;
    }
    return false;
}

SimState thermal_step(const SimState& state, const std::array<ZoneParams, kZones>& params,
                      const WeatherSample& weather, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::config, "thermal_step: dt must be > 0");
    const double bound = euler_stability_bound(params);
    if (dt > bound) {
        throw Error(ErrorKind::config,
                    "thermal_step: dt " + std::to_string(dt) +
                        " exceeds the Euler stability bound " + std::to_string(bound));
    }

    SimState next = state;
    for (int j = 0; j < kZones; ++j) {
        const ZoneParams& z = params[j];
        const double t = state.t_zone[j];
        double flux = (weather.t_out - t) / z.r_outdoor + (state.t_wall[j] - t) / z.r_wall;
        for (const auto& [k, r] : z.adjacent) flux += (state.t_zone[k] - t) / r;
        if (state.split_on[j] && state.comp_on) flux += z.heat_rate;
        flux += z.solar_aperture * weather.solar;
        next.t_zone[j] = t + dt / z.air_capacitance * flux;
        next.t_wall[j] =
            state.t_wall[j] + dt / z.wall_capacitance * (t - state.t_wall[j]) / z.r_wall;
    }
    next.clock = state.clock + static_cast<std::int64_t>(dt);
    return next;
}

double energy_step(const SimState& state, const PowerParams& power, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::invalid_input, "energy_step: dt must be > 0");
    int active = 0;
    for (bool s : state.split_on) active += s ? 1 : 0;
    const double watts = power.standby_power + (state.comp_on ? power.comp_power : 0.0) +
                         power.split_power * active;
    return watts * dt / 3600.0;
}

double quantize_temperature(double t) { return std::round(t * 10.0) / 10.0; }

std::vector<WeatherSample> synth_weather(const WeatherProfile& profile,
                                         std::uint64_t seed, int days,
                                         std::int64_t start_time) {
    if (days < 1) throw Error(ErrorKind::invalid_input, "synth_weather: days must be >= 1");
    const int n = days * 86400 / static_cast<int>(kFramePeriodSec);
    std::vector<WeatherSample> out;
    out.reserve(n);
    Rng rng(seed);
    const double two_pi = 6.283185307179586;
    double t_noise = 0.0;
    double h_noise = 0.0;
    // stationary AR(1): scale innovations so the marginal std matches
    const double innov = std::sqrt(std::max(0.0, 1.0 - profile.noise_corr * profile.noise_corr));
    for (int k = 0; k < n; ++k) {
        const std::int64_t ts = start_time + k * kFramePeriodSec;
        const double hour = static_cast<double>(seconds_of_day(ts)) / 3600.0;
        t_noise = profile.noise_corr * t_noise + innov * rng.gauss();
        h_noise = profile.noise_corr * h_noise + innov * rng.gauss();
        WeatherSample w;
        w.t_out = profile.t_mean +
                  profile.t_amplitude * std::cos(two_pi * (hour - profile.t_phase_hours) / 24.0) +
                  profile.noise_std * t_noise;
        w.solar = profile.solar_peak * std::max(0.0, std::sin(two_pi * (hour - 6.0) / 24.0));
        w.humidity = profile.humidity_mean -
                     profile.humidity_amplitude *
                         std::cos(two_pi * (hour - profile.t_phase_hours) / 24.0) +
                     profile.humidity_noise_std * h_noise;
        w.humidity = std::min(100.0, std::max(0.0, w.humidity));
        out.push_back(w);
    }
    return out;
}

Simulator::Simulator(const std::array<ZoneParams, kZones>& zones, const PowerParams& power,
                     double dt, const SimState& initial)
    : zones_(zones), power_(power), dt_(dt), state_(initial) {
    validate_zone_params(zones_);
    if (!(dt > 0.0)) throw Error(ErrorKind::config, "Simulator: dt must be > 0");
    if (static_cast<std::int64_t>(kFramePeriodSec) % static_cast<std::int64_t>(dt) != 0) {
        throw Error(ErrorKind::config, "Simulator: dt must divide the frame period");
    }
    if (dt > euler_stability_bound(zones_)) {
        throw Error(ErrorKind::config, "Simulator: dt exceeds the Euler stability bound");
    }
    substeps_ = static_cast<int>(kFramePeriodSec / static_cast<std::int64_t>(dt));
}

double Simulator::run_window(const std::array<double, kZones>& setpoints,
                             const WeatherSample& weather) {
    double wh = 0.0;
    for (int s = 0; s < substeps_; ++s) {
        for (int j = 0; j < kZones; ++j) {
            state_.split_on[j] = relay_step(setpoints[j], state_.t_zone[j], state_.split_on[j]);
        }
        state_.comp_on = compressor_logic(state_.split_on);
        wh += energy_step(state_, power_, dt_);
        state_ = thermal_step(state_, zones_, weather, dt_);
        if (on_substep) on_substep(state_);
    }
    return wh;
}

std::array<double, kZones> Simulator::measure() const {
    std::array<double, kZones> out{};
    for (int j = 0; j < kZones; ++j) out[j] = quantize_temperature(state_.t_zone[j]);
    return out;
}

TimeSeriesFrame simulate(const std::array<ZoneParams, kZones>& zones,
                         const PowerParams& power,
                         const std::vector<WeatherSample>& weather,
                         const std::vector<std::array<double, kZones>>& schedule,
                         double dt, std::int64_t start_time, double initial_temp,
                         const std::function<void(const SimState&)>& on_substep) {
    if (schedule.empty() || weather.size() < schedule.size()) {
        throw Error(ErrorKind::ingestion,
                    "simulate: weather/setpoint series do not cover the requested duration");
    }
    const std::size_t rows = schedule.size();

    SimState init;
    init.clock = start_time - kFramePeriodSec;
    init.t_zone.fill(initial_temp);
    init.t_wall.fill(initial_temp);
    Simulator sim(zones, power, dt, init);
    sim.on_substep = on_substep;

    TimeSeriesFrame frame;
    frame.reserve(rows);
    // pre-roll (tau_-1, tau_0] so row 0 carries real consumed energy
    double wh = sim.run_window(schedule[0], weather[0]);
    for (std::size_t k = 0;; ++k) {
        FrameRow r;
        r.timestamp = sim.state().clock;
        r.t_out = weather[k].t_out;
        r.humidity = weather[k].humidity;
        r.solar = weather[k].solar;
        r.t_zone = sim.measure();
        r.sp_zone = schedule[k];
        r.comp_mode = sim.state().comp_on ? 1 : 0;
        r.energy = wh;
        frame.push_back(r);
        if (k + 1 == rows) break;
        wh = sim.run_window(schedule[k], weather[k]);
    }
    return frame;
}

} // namespace hvacmpc
