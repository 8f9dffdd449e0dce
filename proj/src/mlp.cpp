#include "hvacmpc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hvacmpc/errors.hpp"
#include "hvacmpc/rng.hpp"

using json = nlohmann::json;

namespace hvacmpc {

void MLPModel::validate() const {
    if (dims.size() < 2 || dims.back() != 1) {
        throw Error(ErrorKind::invalid_input, "model dims must end in a single output");
    }
    const std::size_t layers = dims.size() - 1;
    if (weights.size() != layers || biases.size() != layers) {
        throw Error(ErrorKind::invalid_input, "layer count does not match dims");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        if (weights[l].rows() != dims[l + 1] || weights[l].cols() != dims[l] ||
            biases[l].size() != dims[l + 1]) {
            throw Error(ErrorKind::invalid_input,
                        "layer " + std::to_string(l) + " shape does not chain with dims");
        }
        if (!weights[l].allFinite() || !biases[l].allFinite()) {
            throw Error(ErrorKind::invalid_input, "non-finite weights in layer " + std::to_string(l));
        }
    }
    const std::vector<int> expect = hidden_dims_for(target_id);
    if (static_cast<std::size_t>(dims.size()) != expect.size() + 2) {
        throw Error(ErrorKind::invalid_input,
                    target_id.str() + " models need " + std::to_string(expect.size()) +
                        " hidden layer(s)");
    }
    for (std::size_t h = 0; h < expect.size(); ++h) {
        if (dims[h + 1] != expect[h]) {
            throw Error(ErrorKind::invalid_input,
                        target_id.str() + " models need hidden width " + std::to_string(expect[h]));
        }
    }
}

double MLPModel::forward(const Eigen::VectorXd& x_norm) const {
    if (x_norm.size() != dims.front()) {
        throw Error(ErrorKind::invalid_input,
                    "forward: input width " + std::to_string(x_norm.size()) + " != " +
                        std::to_string(dims.front()));
    }
    Eigen::VectorXd a = x_norm;
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
        a = ((weights[l] * a + biases[l]).array().max(0.0)).matrix();
    }
    return (weights.back() * a + biases.back())(0);
}

double forward_tape(const MLPModel& m, const Eigen::VectorXd& x_norm, ForwardTape& tape) {
    if (x_norm.size() != m.dims.front()) {
        throw Error(ErrorKind::invalid_input, "forward: input width mismatch");
    }
    tape.act.resize(m.weights.size() + 1);
    tape.act[0] = x_norm;
    for (std::size_t l = 0; l + 1 < m.weights.size(); ++l) {
        tape.act[l + 1] = ((m.weights[l] * tape.act[l] + m.biases[l]).array().max(0.0)).matrix();
    }
    const double y = (m.weights.back() * tape.act[m.weights.size() - 1] + m.biases.back())(0);
    tape.act[m.weights.size()] = Eigen::VectorXd::Constant(1, y);
    return y;
}

Eigen::VectorXd backward_input(const MLPModel& m, const ForwardTape& tape, double dy) {
    Eigen::VectorXd grad = m.weights.back().transpose() * Eigen::VectorXd::Constant(1, dy);
    for (std::size_t l = m.weights.size() - 1; l-- > 0;) {
        // ReLU subgradient: 0 at the kink, so strictly-positive activations pass
        grad = (tape.act[l + 1].array() > 0.0).select(grad, 0.0);
        grad = m.weights[l].transpose() * grad;
    }
    return grad;
}

Eigen::VectorXd MLPModel::grad_input(const Eigen::VectorXd& x_norm) const {
    ForwardTape tape;
    forward_tape(*this, x_norm, tape);
    return backward_input(*this, tape, 1.0);
}

double MLPModel::predict(const Eigen::VectorXd& x_raw) const {
    const double yn = forward(input_norm.apply_row(x_raw));
    return yn * target_norm.stddev()(0) + target_norm.mean()(0);
}

ParamGrads grad_params(const MLPModel& m, const Eigen::VectorXd& x_norm) {
    ForwardTape tape;
    forward_tape(m, x_norm, tape);
    ParamGrads g;
    g.dW.resize(m.weights.size());
    g.db.resize(m.weights.size());
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, 1.0);
    for (std::size_t l = m.weights.size(); l-- > 0;) {
        g.dW[l] = delta * tape.act[l].transpose();
        g.db[l] = delta;
        if (l > 0) {
            delta = m.weights[l].transpose() * delta;
            delta = (tape.act[l].array() > 0.0).select(delta, 0.0);
        }
    }
    return g;
}

namespace {

// Forward over samples-as-columns; returns 1 x B outputs.
Eigen::RowVectorXd forward_columns(const std::vector<Eigen::MatrixXd>& W,
                                   const std::vector<Eigen::VectorXd>& b,
                                   const Eigen::MatrixXd& X) {
    Eigen::MatrixXd a = X;
    for (std::size_t l = 0; l + 1 < W.size(); ++l) {
        a = (((W[l] * a).colwise() + b[l]).array().max(0.0)).matrix();
    }
    return ((W.back() * a).colwise() + b.back()).row(0);
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;
};

} // namespace

TrainResult train(const LaggedDataset& train_set, const LaggedDataset& val_set,
                  const std::vector<int>& hidden_dims, const TrainConfig& cfg) {
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw Error(ErrorKind::invalid_input, "train: empty dataset");
    }
    if (cfg.learning_rate < 0.0 || cfg.batch_size < 1 || cfg.patience < 1) {
        throw Error(ErrorKind::invalid_input, "train: bad configuration");
    }

    MLPModel model;
    model.target_id = train_set.target;
    model.lagspec = train_set.lagspec;
    model.dims.push_back(static_cast<int>(train_set.width()));
    for (int h : hidden_dims) model.dims.push_back(h);
    model.dims.push_back(1);

    std::vector<std::string> names;
    names.reserve(train_set.manifest.size());
    for (const auto& f : train_set.manifest) {
        names.push_back(f.signal + "@" + std::to_string(f.lag));
    }
    model.input_norm = Normalizer::fit(train_set.X, names);
    model.target_norm = Normalizer::fit(train_set.y, {train_set.target.str()});

    // He initialization, seeded per layer
    const std::size_t layers = model.dims.size() - 1;
    model.weights.resize(layers);
    model.biases.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        Rng rng(derive_seed(cfg.seed, l));
        const double scale = std::sqrt(2.0 / model.dims[l]);
        model.weights[l].resize(model.dims[l + 1], model.dims[l]);
        for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) {
                model.weights[l](r, c) = scale * rng.gauss();
            }
        }
        model.biases[l] = Eigen::VectorXd::Zero(model.dims[l + 1]);
    }

    // samples as columns for batched passes
    const Eigen::MatrixXd Xtr = model.input_norm.apply(train_set.X).transpose();
    const Eigen::MatrixXd Xva = model.input_norm.apply(val_set.X).transpose();
    auto norm_y = [&](const Eigen::VectorXd& y) {
        return ((y.array() - model.target_norm.mean()(0)) / model.target_norm.stddev()(0)).matrix();
    };
    const Eigen::VectorXd ytr = norm_y(train_set.y);
    const Eigen::VectorXd yva = norm_y(val_set.y);

    AdamState adam;
    adam.mW.resize(layers);
    adam.vW.resize(layers);
    adam.mb.resize(layers);
    adam.vb.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        adam.mW[l] = Eigen::MatrixXd::Zero(model.dims[l + 1], model.dims[l]);
        adam.vW[l] = adam.mW[l];
        adam.mb[l] = Eigen::VectorXd::Zero(model.dims[l + 1]);
        adam.vb[l] = adam.mb[l];
    }

    Rng shuffle_rng(derive_seed(cfg.seed, 1000));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(Xtr.cols()));
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    std::vector<Eigen::MatrixXd> best_W = model.weights;
    std::vector<Eigen::VectorXd> best_b = model.biases;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int since_best = 0;

    std::vector<Eigen::MatrixXd> acts(layers + 1);
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double sse = 0.0;
        for (Eigen::Index start = 0; start < Xtr.cols(); start += cfg.batch_size) {
            const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, Xtr.cols() - start);
            Eigen::MatrixXd Xb(Xtr.rows(), bs);
            Eigen::RowVectorXd yb(bs);
            for (Eigen::Index i = 0; i < bs; ++i) {
                Xb.col(i) = Xtr.col(order[static_cast<std::size_t>(start + i)]);
                yb(i) = ytr(order[static_cast<std::size_t>(start + i)]);
            }

            acts[0] = Xb;
            for (std::size_t l = 0; l + 1 < layers; ++l) {
                acts[l + 1] =
                    (((model.weights[l] * acts[l]).colwise() + model.biases[l]).array().max(0.0))
                        .matrix();
            }
            acts[layers] =
                ((model.weights[layers - 1] * acts[layers - 1]).colwise() + model.biases[layers - 1]);

            Eigen::MatrixXd delta = acts[layers].row(0) - yb; // 1 x bs
            sse += delta.squaredNorm();
            delta *= 2.0 / static_cast<double>(bs); // d(mean sq err)/d(pred)

            ++adam.step;
            const double cor1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
            const double cor2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
            for (std::size_t l = layers; l-- > 0;) {
                const Eigen::MatrixXd dW = delta * acts[l].transpose();
                const Eigen::VectorXd db = delta.rowwise().sum();
                if (l > 0) {
                    delta = model.weights[l].transpose() * delta;
                    delta = (acts[l].array() > 0.0).select(delta, 0.0);
                }
                adam.mW[l] = cfg.beta1 * adam.mW[l] + (1.0 - cfg.beta1) * dW;
                adam.vW[l] = cfg.beta2 * adam.vW[l] + (1.0 - cfg.beta2) * dW.array().square().matrix();
                adam.mb[l] = cfg.beta1 * adam.mb[l] + (1.0 - cfg.beta1) * db;
                adam.vb[l] = cfg.beta2 * adam.vb[l] + (1.0 - cfg.beta2) * db.array().square().matrix();
                model.weights[l].array() -=
                    cfg.learning_rate * (adam.mW[l].array() / cor1) /
                    ((adam.vW[l].array() / cor2).sqrt() + cfg.eps_adam);
                model.biases[l].array() -=
                    cfg.learning_rate * (adam.mb[l].array() / cor1) /
                    ((adam.vb[l].array() / cor2).sqrt() + cfg.eps_adam);
            }
        }
        const double train_mse = sse / static_cast<double>(Xtr.cols());
        const double val_mse =
            (forward_columns(model.weights, model.biases, Xva).transpose() - yva).squaredNorm() /
            static_cast<double>(Xva.cols());
        if (!std::isfinite(train_mse) || !std::isfinite(val_mse)) {
            throw Error(ErrorKind::training,
                        "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
        }
        result.history.push_back({epoch, train_mse, val_mse});

        if (val_mse < best_val) {
            best_val = val_mse;
            best_epoch = epoch;
            best_W = model.weights;
            best_b = model.biases;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    model.weights = std::move(best_W);
    model.biases = std::move(best_b);
    result.best_epoch = best_epoch;
    result.best_val_mse = best_val;

    json meta;
    meta["seed"] = cfg.seed;
    meta["learning_rate"] = cfg.learning_rate;
    meta["batch_size"] = cfg.batch_size;
    meta["max_epochs"] = cfg.max_epochs;
    meta["patience"] = cfg.patience;
    meta["beta1"] = cfg.beta1;
    meta["beta2"] = cfg.beta2;
    meta["eps_adam"] = cfg.eps_adam;
    meta["epochs_run"] = result.history.size();
    meta["best_epoch"] = best_epoch;
    meta["best_val_mse"] = best_val;
    model.training_meta = meta.dump();

    result.model = std::move(model);
    return result;
}

namespace {

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
    Histogram h;
    if (!(hi > lo)) hi = lo + 1.0;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) {
        h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    }
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

} // namespace

EvalReport evaluate(const MLPModel& m, const LaggedDataset& ds) {
    if (static_cast<int>(ds.width()) != m.input_width() || !(ds.target == m.target_id) ||
        ds.lagspec.delta_y != m.lagspec.delta_y || ds.lagspec.delta_d != m.lagspec.delta_d ||
        ds.lagspec.delta_u != m.lagspec.delta_u) {
        throw Error(ErrorKind::invalid_input,
                    "evaluate: dataset does not match the model's lag specification/target");
    }

    const Eigen::MatrixXd Xn = m.input_norm.apply(ds.X).transpose();
    const Eigen::RowVectorXd yn = forward_columns(m.weights, m.biases, Xn);
    const double mu = m.target_norm.mean()(0);
    const double sd = m.target_norm.stddev()(0);

    const int pers_col = ds.target.is_energy
                             ? ds.column("energy", 1)
                             : ds.column("t_zone_" + std::to_string(ds.target.zone), 0);

    EvalReport r;
    const std::size_t n = ds.size();
    r.abs_errors.resize(n);
    r.persistence_abs_errors.resize(n);
    double se = 0.0, se_p = 0.0, ae = 0.0, ae_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = yn(static_cast<Eigen::Index>(i)) * sd + mu;
        const double err = pred - ds.y(static_cast<Eigen::Index>(i));
        const double err_p =
            ds.X(static_cast<Eigen::Index>(i), pers_col) - ds.y(static_cast<Eigen::Index>(i));
        r.abs_errors[i] = std::abs(err);
        r.persistence_abs_errors[i] = std::abs(err_p);
        se += err * err;
        se_p += err_p * err_p;
        ae += r.abs_errors[i];
        ae_p += r.persistence_abs_errors[i];
    }
    r.mae = ae / static_cast<double>(n);
    r.rmse = std::sqrt(se / static_cast<double>(n));
    r.persistence_mae = ae_p / static_cast<double>(n);
    r.persistence_rmse = std::sqrt(se_p / static_cast<double>(n));
    r.p95 = percentile(r.abs_errors, 0.95);
    r.persistence_p95 = percentile(r.persistence_abs_errors, 0.95);

    const double hi = std::max(*std::max_element(r.abs_errors.begin(), r.abs_errors.end()),
                               *std::max_element(r.persistence_abs_errors.begin(),
                                                 r.persistence_abs_errors.end()));
    r.model_hist = make_histogram(r.abs_errors, 0.0, hi, 40);
    r.persistence_hist = make_histogram(r.persistence_abs_errors, 0.0, hi, 40);
    return r;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json normalizer_to_json(const Normalizer& n) {
    json j;
    j["mean"] = std::vector<double>(n.mean().data(), n.mean().data() + n.mean().size());
    j["std"] = std::vector<double>(n.stddev().data(), n.stddev().data() + n.stddev().size());
    return j;
}

Normalizer normalizer_from_json(const json& j) {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto stdv = j.at("std").get<std::vector<double>>();
    return Normalizer::from_moments(
        Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
        Eigen::Map<const Eigen::VectorXd>(stdv.data(), static_cast<Eigen::Index>(stdv.size())));
}

} // namespace

void save_model(const MLPModel& m, const std::string& path) {
    json payload;
    payload["format_version"] = m.format_version;
    payload["target_id"] = m.target_id.str();
    payload["lagspec"] = {{"delta_y", m.lagspec.delta_y},
                          {"delta_d", m.lagspec.delta_d},
                          {"delta_u", m.lagspec.delta_u}};
    payload["dims"] = m.dims;
    payload["input_normalizer"] = normalizer_to_json(m.input_norm);
    payload["target_normalizer"] = normalizer_to_json(m.target_norm);
    json layers = json::array();
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        json layer;
        layer["rows"] = m.weights[l].rows();
        layer["cols"] = m.weights[l].cols();
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(m.weights[l].size()));
        for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) {
                w.push_back(m.weights[l](r, c)); // row-major
            }
        }
        layer["weights_row_major"] = w;
        layer["bias"] =
            std::vector<double>(m.biases[l].data(), m.biases[l].data() + m.biases[l].size());
        layers.push_back(layer);
    }
    payload["layers"] = layers;
    payload["training"] = m.training_meta.empty() ? json::object() : json::parse(m.training_meta);

    json file;
    file["payload"] = payload;
    file["checksum"] = hex64(fnv1a64(payload.dump()));

    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << file.dump(1) << '\n';
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

MLPModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    json file;
    try {
        in >> file;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::serialization, "'" + path + "': not a valid model file: " + e.what());
    }
    try {
        const json& payload = file.at("payload");
        const int version = payload.at("format_version").get<int>();
        if (version != 1) {
            throw Error(ErrorKind::serialization,
                        "'" + path + "': unsupported format_version " + std::to_string(version));
        }
        if (file.at("checksum").get<std::string>() != hex64(fnv1a64(payload.dump()))) {
            throw Error(ErrorKind::serialization, "'" + path + "': checksum mismatch");
        }

        MLPModel m;
        m.format_version = version;
        const std::string target = payload.at("target_id").get<std::string>();
        if (target == "energy") {
            m.target_id = {true, 0};
        } else if (target.rfind("zone_", 0) == 0) {
            m.target_id = {false, std::stoi(target.substr(5))};
        } else {
            throw Error(ErrorKind::serialization, "'" + path + "': bad target_id '" + target + "'");
        }
        m.lagspec.delta_y = payload.at("lagspec").at("delta_y").get<int>();
        m.lagspec.delta_d = payload.at("lagspec").at("delta_d").get<int>();
        m.lagspec.delta_u = payload.at("lagspec").at("delta_u").get<int>();
        m.dims = payload.at("dims").get<std::vector<int>>();
        m.input_norm = normalizer_from_json(payload.at("input_normalizer"));
        m.target_norm = normalizer_from_json(payload.at("target_normalizer"));
        for (const json& layer : payload.at("layers")) {
            const Eigen::Index rows = layer.at("rows").get<Eigen::Index>();
            const Eigen::Index cols = layer.at("cols").get<Eigen::Index>();
            const auto w = layer.at("weights_row_major").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
                throw Error(ErrorKind::serialization, "'" + path + "': layer size mismatch");
            }
            Eigen::MatrixXd W(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
                }
            }
            m.weights.push_back(std::move(W));
            const auto b = layer.at("bias").get<std::vector<double>>();
            m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(
                b.data(), static_cast<Eigen::Index>(b.size())));
        }
        m.training_meta = payload.at("training").dump();
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::serialization, "'" + path + "': malformed model file: " + e.what());
    }
}

} // namespace hvacmpc
