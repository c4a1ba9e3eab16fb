#include "mktcn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mktcn/rng.hpp"

namespace mktcn {

namespace {

// Cyclic Jacobi eigendecomposition for small symmetric matrices. Returns
// eigenvalues (descending) and matching eigenvectors as rows.
void jacobi_eigh(Tensor a, std::vector<double>& eigenvalues, Tensor& eigenvectors) {
    const std::size_t n = a.dim(0);
    Tensor v({n, n});
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
        if (off < 1e-28) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a.at(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });
    eigenvalues.resize(n);
    eigenvectors = Tensor({n, n});
    for (std::size_t r = 0; r < n; ++r) {
        eigenvalues[r] = diag[order[r]];
        for (std::size_t k = 0; k < n; ++k) eigenvectors.at(r, k) = v.at(k, order[r]);
    }
}

}  // namespace

std::size_t SerialDataset::n_classes() const {
    int mx = -1;
    for (int l : labels) mx = std::max(mx, l);
    return static_cast<std::size_t>(mx + 1);
}

std::vector<std::size_t> SerialDataset::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(i);
    return out;
}

PcaModel fit_pca(const TimeSeriesFrame& frame, const std::vector<char>& train_mask,
                 double target_ratio, bool standardize) {
    const std::size_t n = frame.n_channels();
    const std::size_t T = frame.rows();
    if (train_mask.size() != T) throw std::invalid_argument("fit_pca: mask/frame mismatch");
    if (!(target_ratio > 0.0 && target_ratio <= 1.0))
        throw std::invalid_argument("fit_pca: target_ratio must be in (0, 1]");
    std::size_t n_train = 0;
    for (char m : train_mask) n_train += m ? 1 : 0;
    if (n_train < 2) throw std::invalid_argument("fit_pca: need at least 2 training rows");

    PcaModel model;
    model.mean.assign(n, 0.0);
    model.scale.assign(n, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
        if (!train_mask[t]) continue;
        for (std::size_t c = 0; c < n; ++c) model.mean[c] += frame.at(t, c);
    }
    for (auto& m : model.mean) m /= static_cast<double>(n_train);

    std::vector<double> var(n, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        if (!train_mask[t]) continue;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = frame.at(t, c) - model.mean[c];
            var[c] += d * d;
        }
    }
    for (auto& s : var) s /= static_cast<double>(n_train - 1);

    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < n; ++c) {
        if (var[c] == 0.0) {
            std::fprintf(stderr, "fit_pca: dropping zero-variance channel %zu (%s)\n", c,
                         frame.channel_names[c].c_str());
            model.dropped_channels.push_back(c);
        } else {
            kept.push_back(c);
            if (standardize) model.scale[c] = std::sqrt(var[c]);
        }
    }
    if (kept.empty()) throw std::invalid_argument("fit_pca: all channels have zero variance");

    // Covariance of the standardized kept channels over training rows.
    const std::size_t nk = kept.size();
    Tensor cov({nk, nk});
    std::vector<double> z(nk);
    for (std::size_t t = 0; t < T; ++t) {
        if (!train_mask[t]) continue;
        for (std::size_t a = 0; a < nk; ++a)
            z[a] = (frame.at(t, kept[a]) - model.mean[kept[a]]) / model.scale[kept[a]];
        for (std::size_t a = 0; a < nk; ++a)
            for (std::size_t b = a; b < nk; ++b) cov.at(a, b) += z[a] * z[b];
    }
    for (std::size_t a = 0; a < nk; ++a)
        for (std::size_t b = a; b < nk; ++b) {
            cov.at(a, b) /= static_cast<double>(n_train - 1);
            cov.at(b, a) = cov.at(a, b);
        }

    std::vector<double> eig;
    Tensor vecs;
    jacobi_eigh(cov, eig, vecs);

    double total = 0.0;
    for (auto& e : eig) {
        if (e < 0.0) e = 0.0;  // numerical noise
        total += e;
    }
    const std::size_t rank = std::min<std::size_t>(nk, n_train - 1);
    if (n_train < nk + 1)
        std::fprintf(stderr, "fit_pca: %zu training rows < %zu channels, rank-deficient "
                             "covariance; retaining at most %zu components\n",
                     n_train, nk, rank);

    std::size_t m = 0;
    double cum = 0.0;
    for (std::size_t i = 0; i < rank; ++i) {
        cum += eig[i] / total;
        ++m;
        if (cum >= target_ratio - 1e-12) break;
    }

    model.components = Tensor({m, n});
    model.explained_ratio.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
        model.explained_ratio[r] = eig[r] / total;
        // Sign convention: largest-magnitude entry positive.
        std::size_t arg = 0;
        for (std::size_t a = 1; a < nk; ++a)
            if (std::abs(vecs.at(r, a)) > std::abs(vecs.at(r, arg))) arg = a;
        const double flip = vecs.at(r, arg) < 0.0 ? -1.0 : 1.0;
        for (std::size_t a = 0; a < nk; ++a)
            model.components.at(r, kept[a]) = flip * vecs.at(r, a);
    }
    return model;
}

Tensor pca_transform(const PcaModel& pca, const TimeSeriesFrame& frame) {
    const std::size_t n = pca.n_channels();
    if (frame.n_channels() != n)
        throw std::invalid_argument("pca_transform: frame has " +
                                    std::to_string(frame.n_channels()) +
                                    " channels, model expects " + std::to_string(n));
    const std::size_t T = frame.rows();
    const std::size_t m = pca.n_components();
    Tensor out({T, m});
    std::vector<double> z(n);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < n; ++c)
            z[c] = (frame.at(t, c) - pca.mean[c]) / pca.scale[c];
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += z[c] * pca.components.at(r, c);
            out.at(t, r) = s;
        }
    }
    return out;
}

SerialDataset windowize(const Tensor& reduced, const std::vector<int>& labels,
                        const std::vector<int64_t>& timestamps, std::size_t omega,
                        std::size_t stride) {
    if (reduced.ndim() != 2) throw std::invalid_argument("windowize: expects T x m scores");
    const std::size_t T = reduced.dim(0);
    const std::size_t m = reduced.dim(1);
    if (labels.size() != T || timestamps.size() != T)
        throw std::invalid_argument("windowize: labels/timestamps length mismatch");
    if (stride < 1) throw std::invalid_argument("windowize: stride must be >= 1");
    if (omega < 1 || T < omega)
        throw std::invalid_argument("windowize: need at least omega=" + std::to_string(omega) +
                                    " rows, got " + std::to_string(T));

    SerialDataset ds;
    ds.window = omega;
    ds.stride = stride;
    ds.feat_dim = m;
    const std::size_t count = (T - omega) / stride + 1;
    ds.data.reserve(count * omega * m);
    ds.labels.reserve(count);
    ds.timestamps.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t start = j * stride;
        // Time-major flatten: oldest row first, features contiguous per row.
        ds.data.insert(ds.data.end(), reduced.data() + start * m,
                       reduced.data() + (start + omega) * m);
        ds.labels.push_back(labels[start + omega - 1]);
        ds.timestamps.push_back(timestamps[start + omega - 1]);
    }
    return ds;
}

std::vector<Split> split_assign(const std::vector<int>& labels, std::array<double, 3> ratios,
                                uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split_assign: ratios must sum to 1");
    const std::size_t n = labels.size();
    if (n == 0) throw std::invalid_argument("split_assign: empty dataset");

    std::vector<int> present;
    for (int l : labels)
        if (std::find(present.begin(), present.end(), l) == present.end()) present.push_back(l);

    const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
    const auto n_trainval = static_cast<std::size_t>(std::llround((ratios[0] + ratios[1]) * n));

    for (uint64_t attempt = 0; attempt < 100; ++attempt) {
        Rng rng(Rng::derive(seed, 0x5117 + attempt));
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.below(i + 1)]);
        std::vector<Split> assign(n);
        for (std::size_t r = 0; r < n; ++r)
            assign[perm[r]] = r < n_train ? Split::train
                             : r < n_trainval ? Split::val
                                              : Split::test;
        std::vector<char> seen(present.size(), 0);
        for (std::size_t i = 0; i < n; ++i)
            if (assign[i] == Split::train)
                for (std::size_t k = 0; k < present.size(); ++k)
                    if (labels[i] == present[k]) seen[k] = 1;
        if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }))
            return assign;
        // When nothing lands in train at all (ratio 0) retrying cannot help.
        if (n_train == 0) break;
    }
    throw std::runtime_error(
        "split_assign: a class present overall is absent from train after 100 seeds");
}

void split_dataset(SerialDataset& ds, std::array<double, 3> ratios, uint64_t seed) {
    ds.split = split_assign(ds.labels, ratios, seed);
}

Preprocessed run_preprocess(const TimeSeriesFrame& frame, const PreprocessConfig& cfg) {
    const std::size_t T = frame.rows();
    if (T < cfg.omega) throw std::invalid_argument("run_preprocess: fewer rows than omega");
    const std::size_t count = (T - cfg.omega) / cfg.stride + 1;

    // Window labels are known before any transform, so the split can be
    // assigned first and PCA restricted to rows under training windows.
    std::vector<int> window_labels(count);
    for (std::size_t j = 0; j < count; ++j)
        window_labels[j] = frame.labels[j * cfg.stride + cfg.omega - 1];
    std::vector<Split> assign = split_assign(window_labels, cfg.ratios, cfg.split_seed);

    std::vector<char> train_rows(T, 0);
    for (std::size_t j = 0; j < count; ++j) {
        if (assign[j] != Split::train) continue;
        const std::size_t start = j * cfg.stride;
        std::fill(train_rows.begin() + start, train_rows.begin() + start + cfg.omega, 1);
    }

    Preprocessed out;
    out.pca = fit_pca(frame, train_rows, cfg.pca_target, cfg.standardize);
    Tensor reduced = pca_transform(out.pca, frame);
    out.dataset = windowize(reduced, frame.labels, frame.timestamps, cfg.omega, cfg.stride);
    out.dataset.split = std::move(assign);
    return out;
}

SerialDataset apply_preprocess(const TimeSeriesFrame& frame, const PcaModel& pca,
                               const PreprocessConfig& cfg) {
    Tensor reduced = pca_transform(pca, frame);
    SerialDataset ds = windowize(reduced, frame.labels, frame.timestamps, cfg.omega, cfg.stride);
    ds.split = split_assign(ds.labels, cfg.ratios, cfg.split_seed);
    return ds;
}

std::string PcaModel::to_json() const {
    nlohmann::json j;
    j["mean"] = mean;
    j["scale"] = scale;
    j["ratios"] = explained_ratio;
    j["dropped_channels"] = dropped_channels;
    std::vector<std::vector<double>> comps(n_components());
    for (std::size_t r = 0; r < n_components(); ++r)
        comps[r].assign(components.data() + r * n_channels(),
                        components.data() + (r + 1) * n_channels());
    j["components"] = comps;
    return j.dump(2);
}

PcaModel PcaModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PcaModel model;
    model.mean = j.at("mean").get<std::vector<double>>();
    model.scale = j.at("scale").get<std::vector<double>>();
    model.explained_ratio = j.at("ratios").get<std::vector<double>>();
    model.dropped_channels = j.at("dropped_channels").get<std::vector<std::size_t>>();
    auto comps = j.at("components").get<std::vector<std::vector<double>>>();
    const std::size_t m = comps.size();
    const std::size_t n = model.mean.size();
    model.components = Tensor({m, n});
    for (std::size_t r = 0; r < m; ++r) {
        if (comps[r].size() != n) throw std::runtime_error("PcaModel: ragged components");
        std::copy(comps[r].begin(), comps[r].end(), model.components.data() + r * n);
    }
    return model;
}

void PcaModel::save_json(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("PcaModel::save_json: cannot open " + path);
    out << to_json() << "\n";
}

PcaModel PcaModel::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("PcaModel::load_json: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace mktcn
