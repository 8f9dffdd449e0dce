#ifndef HVACMPC_PLANT_HPP
#define HVACMPC_PLANT_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hvacmpc/frame.hpp"

namespace hvacmpc {

/// Lumped 2R2C zone: an air node coupled to outdoors (r_outdoor), to an
/// interior mass node (r_wall) and to adjacent zone air nodes (r_adjacent).
struct ZoneParams {
    double air_capacitance = 0.0;  // J/K
    double wall_capacitance = 0.0; // J/K
    double r_outdoor = 0.0;        // K/W
    double r_wall = 0.0;           // K/W
    double heat_rate = 0.0;        // W delivered while split and compressor are on
    double solar_aperture = 0.0;   // m^2; gain = solar_aperture * irradiance
    std::vector<std::pair<int, double>> adjacent; // (zone index 0-based, K/W)
};

struct WeatherSample {
    double t_out = 0.0;    // degC
    double humidity = 0.0; // % relative, 0..100
    double solar = 0.0;    // W/m^2
};

struct PowerParams {
    double comp_power = 0.0;    // W while the compressor runs
    double split_power = 0.0;   // W per active split
    double standby_power = 0.0; // W always
};

struct SimState {
    std::int64_t clock = 0; // s since epoch
    std::array<double, kZones> t_zone{};
    std::array<double, kZones> t_wall{};
    std::array<bool, kZones> split_on{};
    bool comp_on = false;
};

/// Throws Error(config) if capacitances/resistances are non-positive,
/// heat_rate negative, or adjacency is asymmetric across the set.
void validate_zone_params(const std::array<ZoneParams, kZones>& zones);

/// Largest forward-Euler step that is provably stable for these zones:
/// min over nodes of capacitance / total conductance.
double euler_stability_bound(const std::array<ZoneParams, kZones>& zones);

/// Asymmetric relay: ON below setpoint - 1.5, OFF above setpoint + 0.5,
/// previous state inside the band.
bool relay_step(double setpoint, double t_meas, bool split_on);

/// Shared outdoor unit runs iff any split demands heat.
bool compressor_logic(const std::array<bool, kZones>& split_on);

/// One forward-Euler step of the thermal network. Relay/compressor states are
/// left untouched. Throws Error(config) if dt exceeds the stability bound.
SimState thermal_step(const SimState& state, const std::array<ZoneParams, kZones>& params,
                      const WeatherSample& weather, double dt);

/// Wh consumed over dt seconds at the current actuation states.
double energy_step(const SimState& state, const PowerParams& power, double dt);

double quantize_temperature(double t); // 0.1 degC sensor precision

struct WeatherProfile {
    double t_mean = 8.0;            // degC
    double t_amplitude = 4.0;       // degC, diurnal swing
    double t_phase_hours = 15.0;    // hour of day of the temperature maximum
    double noise_std = 0.6;         // degC, AR(1) noise
    double noise_corr = 0.95;       // AR(1) coefficient per Ts sample
    double solar_peak = 450.0;      // W/m^2 at solar noon
    double humidity_mean = 70.0;    // %
    double humidity_amplitude = 10.0;
    double humidity_noise_std = 1.5;
};

/// One sample per Ts row, days*720 samples, reproducible per seed.
/// Solar is max(0, sinusoid): zero at night; humidity clamped to [0, 100].
std::vector<WeatherSample> synth_weather(const WeatherProfile& profile,
                                         std::uint64_t seed, int days,
                                         std::int64_t start_time = 0);

/// Steps the plant one Ts window at a time. Construction runs no dynamics;
/// the caller drives windows and assembles frame rows (see simulate()).
class Simulator {
public:
    Simulator(const std::array<ZoneParams, kZones>& zones, const PowerParams& power,
              double dt, const SimState& initial);

    /// Advances one window of Ts seconds under ZOH setpoints/weather.
    /// Relays and the compressor update every dt from internal (unquantized)
    /// temperatures. Returns the Wh consumed over the window.
    double run_window(const std::array<double, kZones>& setpoints,
                      const WeatherSample& weather);

    const SimState& state() const { return state_; }

    /// Measured zone temperatures (0.1 degC quantized).
    std::array<double, kZones> measure() const;

    /// Test hook: called after every dt substep with the internal state.
    std::function<void(const SimState&)> on_substep;

private:
    std::array<ZoneParams, kZones> zones_;
    PowerParams power_;
    double dt_;
    int substeps_;
    SimState state_;
};

/// Open-loop simulation over a setpoint schedule. weather and schedule must
/// both cover `rows` entries (one per Ts); row k gets schedule[k] as its
/// commanded setpoint. A pre-roll window driven by schedule[0]/weather[0]
/// fills row 0's energy cell, so every recorded energy is real plant energy.
TimeSeriesFrame simulate(const std::array<ZoneParams, kZones>& zones,
                         const PowerParams& power,
                         const std::vector<WeatherSample>& weather,
                         const std::vector<std::array<double, kZones>>& schedule,
                         double dt, std::int64_t start_time, double initial_temp,
                         const std::function<void(const SimState&)>& on_substep = {});

} // namespace hvacmpc

#endif
