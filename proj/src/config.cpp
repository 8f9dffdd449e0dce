#include "hvacmpc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "hvacmpc/errors.hpp"
#include "hvacmpc/timeutil.hpp"

namespace hvacmpc {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

struct Parsed {
    // section -> key -> value, with file order irrelevant
    std::map<std::string, std::map<std::string, std::string>> sections;
};

Parsed parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config file '" + path + "'");
    Parsed p;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw Error(ErrorKind::config,
                            path + ":" + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            p.sections[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos || section.empty()) {
            throw Error(ErrorKind::config,
                        path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        p.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return p;
}

class SectionReader {
public:
    SectionReader(const std::string& name, const std::map<std::string, std::string>& kv)
        : name_(name), kv_(kv) {}

    double num(const std::string& key, double& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return out;
        const std::string& v = it->second;
        double x = 0.0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
            throw Error(ErrorKind::config,
                        "[" + name_ + "] " + key + ": cannot parse '" + v + "' as a number");
        }
        seen_.push_back(key);
        return out = x;
    }

    void integer(const std::string& key, int& out) {
        double x = out;
        num(key, x);
        out = static_cast<int>(std::llround(x));
    }

    void u64(const std::string& key, std::uint64_t& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        const std::string& v = it->second;
        std::uint64_t x = 0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
            throw Error(ErrorKind::config,
                        "[" + name_ + "] " + key + ": cannot parse '" + v + "' as an integer");
        }
        seen_.push_back(key);
        out = x;
    }

    void str(const std::string& key, std::string& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        seen_.push_back(key);
        out = it->second;
    }

    void finish() const {
        for (const auto& [k, v] : kv_) {
            bool known = false;
            for (const auto& s : seen_) {
                if (s == k) known = true;
            }
            if (!known) {
                throw Error(ErrorKind::config, "[" + name_ + "] unknown key '" + k + "'");
            }
        }
    }

private:
    std::string name_;
    const std::map<std::string, std::string>& kv_;
    std::vector<std::string> seen_;
};

std::vector<std::pair<int, double>> parse_adjacency(const std::string& spec,
                                                    const std::string& where) {
    std::vector<std::pair<int, double>> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw Error(ErrorKind::config, where + ": adjacency entries are '<zone>:<K/W>'");
        }
        int zone = 0;
        double r = 0.0;
        try {
            zone = std::stoi(item.substr(0, colon));
            r = std::stod(item.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, where + ": cannot parse adjacency '" + item + "'");
        }
        if (zone < 1 || zone > kZones) {
            throw Error(ErrorKind::config, where + ": adjacent zone out of range 1..10");
        }
        out.emplace_back(zone - 1, r);
    }
    return out;
}

std::string adjacency_to_string(const std::vector<std::pair<int, double>>& adj) {
    std::string s;
    for (std::size_t i = 0; i < adj.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(adj[i].first + 1) + ":" + fmt(adj[i].second);
    }
    return s;
}

} // namespace

std::int64_t AppConfig::start_epoch() const {
    try {
        return parse_iso8601_utc(start_time);
    } catch (const Error& e) {
        throw Error(ErrorKind::config, std::string("[sim] start_time: ") + e.what());
    }
}

AppConfig AppConfig::defaults() {
    AppConfig c;

    ZoneParams room;
    room.air_capacitance = 7.0e5;
    room.wall_capacitance = 6.0e6;
    room.r_outdoor = 0.055;
    room.r_wall = 0.010;
    room.heat_rate = 1400.0;
    room.solar_aperture = 0.5;

    ZoneParams lobby; // zones 5 and 10: smaller volume, less envelope
    lobby.air_capacitance = 4.0e5;
    lobby.wall_capacitance = 3.5e6;
    lobby.r_outdoor = 0.075;
    lobby.r_wall = 0.012;
    lobby.heat_rate = 1000.0;
    lobby.solar_aperture = 0.25;

    for (int j = 0; j < kZones; ++j) c.zones[j] = room;
    c.zones[4] = lobby;
    c.zones[9] = lobby;

    // per floor: rooms 1-2 and 3-4 share a partition, every room opens on the
    // lobby; matching zones couple floor-to-floor through the slab
    auto link = [&](int a, int b, double r) {
        c.zones[a - 1].adjacent.emplace_back(b - 1, r);
        c.zones[b - 1].adjacent.emplace_back(a - 1, r);
    };
    for (int base : {0, 5}) {
        link(base + 1, base + 2, 0.05);
        link(base + 3, base + 4, 0.05);
        for (int r = 1; r <= 4; ++r) link(base + r, base + 5, 0.04);
    }
    for (int j = 1; j <= 5; ++j) link(j, j + 5, 0.03);

    c.power.comp_power = 800.0;
    c.power.split_power = 250.0;
    c.power.standby_power = 100.0;

    return c;
}

AppConfig AppConfig::load(const std::string& path) {
    AppConfig c = defaults();
    Parsed p = parse_file(path);

    for (const auto& [name, kv] : p.sections) {
        if (name == "invocation") continue; // snapshot metadata, not configuration
        if (name == "sim") {
            SectionReader r(name, kv);
            r.num("dt_seconds", c.dt_seconds);
            r.num("initial_temp_c", c.initial_temp_c);
            r.str("start_time", c.start_time);
            r.finish();
        } else if (name == "weather") {
            SectionReader r(name, kv);
            r.num("t_mean_c", c.weather.t_mean);
            r.num("t_amplitude_c", c.weather.t_amplitude);
            r.num("t_phase_hours", c.weather.t_phase_hours);
            r.num("noise_std_c", c.weather.noise_std);
            r.num("noise_corr", c.weather.noise_corr);
            r.num("solar_peak_wm2", c.weather.solar_peak);
            r.num("humidity_mean_pct", c.weather.humidity_mean);
            r.num("humidity_amplitude_pct", c.weather.humidity_amplitude);
            r.num("humidity_noise_std_pct", c.weather.humidity_noise_std);
            r.finish();
        } else if (name == "power") {
            SectionReader r(name, kv);
            r.num("comp_power_w", c.power.comp_power);
            r.num("split_power_w", c.power.split_power);
            r.num("standby_power_w", c.power.standby_power);
            r.finish();
        } else if (name == "seeds") {
            SectionReader r(name, kv);
            r.u64("weather", c.weather_seed);
            r.u64("excitation", c.excitation_seed);
            r.finish();
        } else if (name == "excite") {
            SectionReader r(name, kv);
            r.integer("days", c.excite_days);
            r.finish();
        } else if (name == "train") {
            SectionReader r(name, kv);
            r.str("target", c.train.target);
            r.u64("seed", c.train.seed);
            r.num("learning_rate", c.train.learning_rate);
            r.integer("batch_size", c.train.batch_size);
            r.integer("max_epochs", c.train.max_epochs);
            r.integer("patience", c.train.patience);
            r.finish();
        } else if (name == "run") {
            SectionReader r(name, kv);
            r.str("controller", c.run_controller);
            r.integer("days", c.run_days);
            r.num("baseline_setpoint_c", c.baseline_setpoint);
            r.finish();
        } else if (name == "mpc") {
            SectionReader r(name, kv);
            r.integer("horizon", c.mpc.horizon);
            r.num("lambda_energy", c.mpc.lambda_energy);
            r.num("lambda_tracking", c.mpc.lambda_tracking);
            r.num("t_ref_c", c.mpc.t_ref);
            r.num("t_min_c", c.mpc.t_min);
            r.num("t_max_c", c.mpc.t_max);
            r.num("u_min_c", c.mpc.u_min);
            r.num("u_max_c", c.mpc.u_max);
            r.num("slack_weight", c.mpc.slack_weight);
            r.integer("control_period_steps", c.mpc.control_period_steps);
            r.integer("max_iters", c.mpc.max_iters);
            r.str("step_rule", c.mpc.step_rule);
            r.num("step_size", c.mpc.step_size);
            r.num("tol_rel", c.mpc.tol_rel);
            r.integer("restarts", c.mpc.restarts);
            r.integer("alternations", c.mpc.alternations);
            r.num("softplus_beta", c.mpc.softplus_beta);
            r.finish();
        } else if (name.rfind("zone.", 0) == 0) {
            int j = 0;
            try {
                j = std::stoi(name.substr(5));
            } catch (const std::exception&) {
                j = 0;
            }
            if (j < 1 || j > kZones) {
                throw Error(ErrorKind::config, "bad zone section [" + name + "], zones are 1..10");
            }
            ZoneParams& z = c.zones[j - 1];
            SectionReader r(name, kv);
            r.num("air_capacitance_j_per_k", z.air_capacitance);
            r.num("wall_capacitance_j_per_k", z.wall_capacitance);
            r.num("r_outdoor_k_per_w", z.r_outdoor);
            r.num("r_wall_k_per_w", z.r_wall);
            r.num("heat_rate_w", z.heat_rate);
            r.num("solar_aperture_m2", z.solar_aperture);
            std::string adj;
            r.str("adjacent", adj);
            if (!adj.empty() || kv.count("adjacent")) {
                z.adjacent = parse_adjacency(adj, "[" + name + "]");
            }
            r.finish();
        } else {
            throw Error(ErrorKind::config, "unknown config section [" + name + "]");
        }
    }

    validate_zone_params(c.zones);
    if (c.dt_seconds > euler_stability_bound(c.zones)) {
        throw Error(ErrorKind::config,
                    "[sim] dt_seconds exceeds the Euler stability bound " +
                        fmt(euler_stability_bound(c.zones)) + " s for these zone parameters");
    }
    if (!(c.weather.noise_corr >= 0.0 && c.weather.noise_corr < 1.0)) {
        throw Error(ErrorKind::config, "[weather] noise_corr must be in [0, 1)");
    }
    c.start_epoch(); // validates start_time
    return c;
}

std::string AppConfig::serialize(const std::string& invocation) const {
    std::ostringstream o;
    o << "# hvacmpc configuration (resolved)\n";
    o << "# capacitances J/K, resistances K/W, powers W, temperatures degC\n\n";
    if (!invocation.empty()) {
        o << "[invocation]\n" << invocation << "\n\n";
    }
    o << "[sim]\n";
    o << "dt_seconds = " << fmt(dt_seconds) << "\n";
    o << "initial_temp_c = " << fmt(initial_temp_c) << "\n";
    o << "start_time = " << start_time << "\n\n";

    o << "[weather]\n";
    o << "t_mean_c = " << fmt(weather.t_mean) << "\n";
    o << "t_amplitude_c = " << fmt(weather.t_amplitude) << "\n";
    o << "t_phase_hours = " << fmt(weather.t_phase_hours) << "\n";
    o << "noise_std_c = " << fmt(weather.noise_std) << "\n";
    o << "noise_corr = " << fmt(weather.noise_corr) << "\n";
    o << "solar_peak_wm2 = " << fmt(weather.solar_peak) << "\n";
    o << "humidity_mean_pct = " << fmt(weather.humidity_mean) << "\n";
    o << "humidity_amplitude_pct = " << fmt(weather.humidity_amplitude) << "\n";
    o << "humidity_noise_std_pct = " << fmt(weather.humidity_noise_std) << "\n\n";

    o << "[power]\n";
    o << "comp_power_w = " << fmt(power.comp_power) << "\n";
    o << "split_power_w = " << fmt(power.split_power) << "\n";
    o << "standby_power_w = " << fmt(power.standby_power) << "\n\n";

    for (int j = 0; j < kZones; ++j) {
        const ZoneParams& z = zones[j];
        o << "[zone." << (j + 1) << "]\n";
        o << "air_capacitance_j_per_k = " << fmt(z.air_capacitance) << "\n";
        o << "wall_capacitance_j_per_k = " << fmt(z.wall_capacitance) << "\n";
        o << "r_outdoor_k_per_w = " << fmt(z.r_outdoor) << "\n";
        o << "r_wall_k_per_w = " << fmt(z.r_wall) << "\n";
        o << "heat_rate_w = " << fmt(z.heat_rate) << "\n";
        o << "solar_aperture_m2 = " << fmt(z.solar_aperture) << "\n";
        o << "adjacent = " << adjacency_to_string(z.adjacent) << "\n\n";
    }

    o << "[seeds]\n";
    o << "weather = " << weather_seed << "\n";
    o << "excitation = " << excitation_seed << "\n\n";

    o << "[excite]\n";
    o << "days = " << excite_days << "\n\n";

    o << "[train]\n";
    o << "target = " << train.target << "\n";
    o << "seed = " << train.seed << "\n";
    o << "learning_rate = " << fmt(train.learning_rate) << "\n";
    o << "batch_size = " << train.batch_size << "\n";
    o << "max_epochs = " << train.max_epochs << "\n";
    o << "patience = " << train.patience << "\n\n";

    o << "[run]\n";
    o << "controller = " << run_controller << "\n";
    o << "days = " << run_days << "\n";
    o << "baseline_setpoint_c = " << fmt(baseline_setpoint) << "\n\n";

    o << "[mpc]\n";
    o << "horizon = " << mpc.horizon << "\n";
    o << "lambda_energy = " << fmt(mpc.lambda_energy) << "\n";
    o << "lambda_tracking = " << fmt(mpc.lambda_tracking) << "\n";
    o << "t_ref_c = " << fmt(mpc.t_ref) << "\n";
    o << "t_min_c = " << fmt(mpc.t_min) << "\n";
    o << "t_max_c = " << fmt(mpc.t_max) << "\n";
    o << "u_min_c = " << fmt(mpc.u_min) << "\n";
    o << "u_max_c = " << fmt(mpc.u_max) << "\n";
    o << "slack_weight = " << fmt(mpc.slack_weight) << "\n";
    o << "control_period_steps = " << mpc.control_period_steps << "\n";
    o << "max_iters = " << mpc.max_iters << "\n";
    o << "step_rule = " << mpc.step_rule << "\n";
    o << "step_size = " << fmt(mpc.step_size) << "\n";
    o << "tol_rel = " << fmt(mpc.tol_rel) << "\n";
    o << "restarts = " << mpc.restarts << "\n";
    o << "alternations = " << mpc.alternations << "\n";
    o << "softplus_beta = " << fmt(mpc.softplus_beta) << "\n";
    return o.str();
}

} // namespace hvacmpc
