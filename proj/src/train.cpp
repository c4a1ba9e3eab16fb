#include "mktcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mktcn/metrics.hpp"

namespace mktcn {

double cross_entropy(const std::vector<double>& probs, int label,
                     const std::vector<double>& class_weights) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(probs.size()) +
                                    " classes");
    const double w = class_weights.empty() ? 1.0 : class_weights.at(label);
    return -w * std::log(std::max(probs[label], 1e-12));
}

void adam_step(std::vector<ParamRef>& params, TrainState& state, double lr, double beta1,
               double beta2, double eps) {
    if (state.adam_m.size() != params.size()) {
        state.adam_m.resize(params.size());
        state.adam_v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.adam_m[i].assign(params[i].size, 0.0);
            state.adam_v[i].assign(params[i].size, 0.0);
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double corr1 = 1.0 - std::pow(beta1, t);
    const double corr2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamRef& p = params[i];
        if (state.adam_m[i].size() != p.size)
            throw std::invalid_argument("adam_step: moment shape mismatch for " + p.name);
        double* m = state.adam_m[i].data();
        double* v = state.adam_v[i].data();
        for (std::size_t j = 0; j < p.size; ++j) {
            const double g = p.grad[j];
            if (std::isnan(g))
                throw std::runtime_error("adam_step: NaN gradient in parameter " + p.name +
                                         " at index " + std::to_string(j));
            m[j] = beta1 * m[j] + (1.0 - beta1) * g;
            v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
            const double mhat = m[j] / corr1;
            const double vhat = v[j] / corr2;
            p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

std::vector<Prediction> predict(MktcnModel& model, const SerialDataset& ds,
                                const std::vector<std::size_t>& indices) {
    std::vector<Prediction> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) {
        Prediction p;
        p.probs = model.predict_probs(ds.sample(idx));
        p.cls = static_cast<int>(argmax(p.probs));
        out.push_back(std::move(p));
    }
    return out;
}

double validation_macro_f1(MktcnModel& model, const SerialDataset& ds, Split split) {
    const auto indices = ds.indices_of(split);
    if (indices.empty()) return 0.0;
    std::vector<int> truth, preds;
    truth.reserve(indices.size());
    preds.reserve(indices.size());
    for (std::size_t idx : indices) {
        truth.push_back(ds.labels[idx]);
        preds.push_back(static_cast<int>(argmax(model.predict_probs(ds.sample(idx)))));
    }
    return macro_metrics(confusion(truth, preds, ds.n_classes())).f1;
}

namespace {

// Fits the head-input standardization from TCN outputs over (a subsample of)
// the training windows, before any optimizer step.
void fit_head_norm(MktcnModel& model, const SerialDataset& ds,
                   const std::vector<std::size_t>& train_idx) {
    const std::size_t len = model.config().input_len;
    const std::size_t n = std::min<std::size_t>(train_idx.size(), 1024);
    std::vector<double> mean(len, 0.0), sq(len, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto h = model.tcn.forward(ds.sample(train_idx[i]), false, nullptr);
        for (std::size_t j = 0; j < len; ++j) {
            mean[j] += h[j];
            sq[j] += h[j] * h[j];
        }
    }
    std::vector<double> scale(len);
    for (std::size_t j = 0; j < len; ++j) {
        mean[j] /= static_cast<double>(n);
        const double var = std::max(sq[j] / static_cast<double>(n) - mean[j] * mean[j], 0.0);
        // Two standard deviations to the spline domain edge; clamping handles
        // the tail.
        scale[j] = std::max(2.0 * std::sqrt(var), 1e-6);
    }
    model.set_head_norm(std::move(mean), std::move(scale));
}

std::vector<std::vector<double>> snapshot_params(std::vector<ParamRef>& params) {
    std::vector<std::vector<double>> snap(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        snap[i].assign(params[i].data, params[i].data + params[i].size);
    return snap;
}

void restore_params(std::vector<ParamRef>& params,
                    const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i)
        std::copy(snap[i].begin(), snap[i].end(), params[i].data);
}

}  // namespace

TrainResult train_model(const SerialDataset& ds, const TrainConfig& cfg) {
    if (ds.split.size() != ds.size())
        throw std::invalid_argument("train_model: dataset has no split assignment");
    const auto train_idx = ds.indices_of(Split::train);
    const auto val_idx = ds.indices_of(Split::val);
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train_model: empty train or validation split");
    {
        const int first = ds.labels[train_idx.front()];
        bool multi = false;
        for (std::size_t idx : train_idx)
            if (ds.labels[idx] != first) { multi = true; break; }
        if (!multi)
            throw std::invalid_argument(
                "train_model: training data is single-class, nothing to learn");
    }

    ModelConfig mc;
    mc.input_len = ds.sample_len();
    mc.n_classes = ds.n_classes();
    mc.hidden = cfg.hidden;
    mc.kernel = cfg.kernel;
    mc.dropout = cfg.dropout;
    mc.head = cfg.head;
    mc.grid_size = cfg.grid_size;
    mc.spline_order = cfg.spline_order;
    mc.head_input_norm = cfg.head_input_norm;

    TrainResult result{MktcnModel(mc, Rng::derive(cfg.seed, 1)), TrainState{}};
    MktcnModel& model = result.model;
    TrainState& state = result.state;
    if (cfg.head_input_norm) fit_head_norm(model, ds, train_idx);

    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) throw std::runtime_error("train_model: cannot open log " + cfg.log_path);
    }

    auto params = model.params();
    Rng shuffle_rng(Rng::derive(cfg.seed, 2));
    Rng dropout_rng(Rng::derive(cfg.seed, 3));

    state.best_val_macro_f1 = validation_macro_f1(model, ds, Split::val);
    auto best_params = snapshot_params(params);

    const std::size_t c = mc.n_classes;
    std::vector<std::size_t> perm = train_idx;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = perm.size() - 1; i > 0; --i)
            std::swap(perm[i], perm[shuffle_rng.below(i + 1)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, perm.size());
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            model.zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = perm[i];
                const int label = ds.labels[idx];
                const auto logits =
                    model.forward_logits(ds.sample(idx), true, &dropout_rng);
                const auto probs = softmax(logits);
                epoch_loss += cross_entropy(probs, label, cfg.class_weights);
                // Fused softmax/cross-entropy gradient: probs - onehot.
                const double w =
                    cfg.class_weights.empty() ? 1.0 : cfg.class_weights.at(label);
                std::vector<double> dlogits(c);
                for (std::size_t k = 0; k < c; ++k)
                    dlogits[k] =
                        (probs[k] - (static_cast<int>(k) == label ? 1.0 : 0.0)) * w *
                        inv_batch;
                model.backward_from_logits(dlogits);
            }
            adam_step(params, state, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        }
        epoch_loss /= static_cast<double>(perm.size());
        state.loss_history.push_back(epoch_loss);

        const double val_f1 = validation_macro_f1(model, ds, Split::val);
        if (val_f1 > state.best_val_macro_f1) {
            state.best_val_macro_f1 = val_f1;
            best_params = snapshot_params(params);
        }
        if (log) {
            const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            nlohmann::json line{{"epoch", epoch},
                                {"train_loss", epoch_loss},
                                {"val_macro_f1", val_f1},
                                {"wall_ms", wall}};
            log << line.dump() << "\n";
        }
    }

    restore_params(params, best_params);
    return result;
}

uint64_t config_hash(const TrainConfig& train, const PreprocessConfig& prep) {
    nlohmann::json j;
    j["batch_size"] = train.batch_size;
    j["dropout"] = train.dropout;
    j["kernel"] = train.kernel;
    j["lr"] = train.lr;
    j["epochs"] = train.epochs;
    j["hidden"] = train.hidden;
    j["grid_size"] = train.grid_size;
    j["spline_order"] = train.spline_order;
    j["seed"] = train.seed;
    j["class_weights"] = train.class_weights;
    j["head"] = head_type_name(train.head);
    j["head_input_norm"] = train.head_input_norm;
    j["omega"] = prep.omega;
    j["stride"] = prep.stride;
    j["pca_target"] = prep.pca_target;
    j["standardize"] = prep.standardize;
    j["ratios"] = prep.ratios;
    j["split_seed"] = prep.split_seed;
    const std::string s = j.dump();
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace mktcn
