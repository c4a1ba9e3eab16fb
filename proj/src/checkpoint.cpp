#include "mktcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace mktcn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace {

constexpr char kMagic[8] = {'M', 'K', 'T', 'C', 'N', 'C', 'P', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointError("checkpoint truncated");
    return v;
}

void write_section(std::ostream& out, const std::string& name,
                   const std::vector<std::size_t>& shape, const double* data,
                   std::size_t size) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(shape.size()));
    for (auto d : shape) write_pod<uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(size * sizeof(double)));
}

struct Section {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

Section read_section(std::istream& in) {
    Section s;
    const auto name_len = read_pod<uint32_t>(in);
    if (name_len > 4096) throw CheckpointError("checkpoint corrupt: section name too long");
    s.name.resize(name_len);
    in.read(s.name.data(), name_len);
    if (!in) throw CheckpointError("checkpoint truncated");
    const auto ndim = read_pod<uint32_t>(in);
    if (ndim > 8) throw CheckpointError("checkpoint corrupt: bad rank");
    std::size_t total = 1;
    for (uint32_t i = 0; i < ndim; ++i) {
        s.shape.push_back(static_cast<std::size_t>(read_pod<uint64_t>(in)));
        total *= s.shape.back();
    }
    s.data.resize(total);
    in.read(reinterpret_cast<char*>(s.data.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw CheckpointError("checkpoint truncated");
    return s;
}

nlohmann::json train_cfg_to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size}, {"dropout", c.dropout},
            {"kernel", c.kernel},         {"lr", c.lr},
            {"epochs", c.epochs},         {"hidden", c.hidden},
            {"grid_size", c.grid_size},   {"spline_order", c.spline_order},
            {"seed", c.seed},             {"class_weights", c.class_weights},
            {"head", head_type_name(c.head)},
            {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps},     {"head_input_norm", c.head_input_norm}};
}

TrainConfig train_cfg_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.batch_size = j.at("batch_size");
    c.dropout = j.at("dropout");
    c.kernel = j.at("kernel");
    c.lr = j.at("lr");
    c.epochs = j.at("epochs");
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.grid_size = j.at("grid_size");
    c.spline_order = j.at("spline_order");
    c.seed = j.at("seed");
    c.class_weights = j.at("class_weights").get<std::vector<double>>();
    c.head = head_type_from_name(j.at("head"));
    c.adam_beta1 = j.at("adam_beta1");
    c.adam_beta2 = j.at("adam_beta2");
    c.adam_eps = j.at("adam_eps");
    c.head_input_norm = j.at("head_input_norm");
    return c;
}

nlohmann::json prep_cfg_to_json(const PreprocessConfig& c) {
    return {{"omega", c.omega},           {"stride", c.stride},
            {"pca_target", c.pca_target}, {"standardize", c.standardize},
            {"ratios", c.ratios},         {"split_seed", c.split_seed}};
}

PreprocessConfig prep_cfg_from_json(const nlohmann::json& j) {
    PreprocessConfig c;
    c.omega = j.at("omega");
    c.stride = j.at("stride");
    c.pca_target = j.at("pca_target");
    c.standardize = j.at("standardize");
    c.ratios = j.at("ratios");
    c.split_seed = j.at("split_seed");
    return c;
}

}  // namespace

void save_checkpoint(MktcnModel& model, const TrainState& state, const PcaModel& pca,
                     const TrainConfig& train_cfg, const PreprocessConfig& prep_cfg,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open " + path + " for writing");

    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, kVersion);
    write_pod<uint64_t>(out, config_hash(train_cfg, prep_cfg));

    const ModelConfig& mc = model.config();
    nlohmann::json meta;
    meta["model"] = {{"input_len", mc.input_len},     {"n_classes", mc.n_classes},
                     {"hidden", mc.hidden},           {"kernel", mc.kernel},
                     {"dropout", mc.dropout},         {"head", head_type_name(mc.head)},
                     {"grid_size", mc.grid_size},     {"spline_order", mc.spline_order},
                     {"kan_domain", mc.kan_domain},   {"head_input_norm", mc.head_input_norm}};
    meta["train"] = train_cfg_to_json(train_cfg);
    meta["prep"] = prep_cfg_to_json(prep_cfg);
    meta["pca"] = nlohmann::json::parse(pca.to_json());
    meta["state"] = {{"step", state.step},
                     {"best_val_macro_f1", state.best_val_macro_f1},
                     {"loss_history", state.loss_history},
                     {"has_adam", !state.adam_m.empty()}};
    const std::string meta_str = meta.dump();
    write_pod<uint32_t>(out, static_cast<uint32_t>(meta_str.size()));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

    auto params = model.params();
    uint32_t n_sections = static_cast<uint32_t>(params.size()) + 2;
    if (!state.adam_m.empty()) n_sections += static_cast<uint32_t>(2 * params.size());
    write_pod<uint32_t>(out, n_sections);
    write_section(out, "norm.mean", {model.head_norm_mean().size()},
                  model.head_norm_mean().data(), model.head_norm_mean().size());
    write_section(out, "norm.scale", {model.head_norm_scale().size()},
                  model.head_norm_scale().data(), model.head_norm_scale().size());
    for (const auto& p : params) write_section(out, p.name, p.shape, p.data, p.size);
    if (!state.adam_m.empty()) {
        if (state.adam_m.size() != params.size())
            throw CheckpointError("optimizer state does not match parameter list");
        for (std::size_t i = 0; i < params.size(); ++i) {
            write_section(out, "adam.m." + params[i].name, {params[i].size},
                          state.adam_m[i].data(), state.adam_m[i].size());
            write_section(out, "adam.v." + params[i].name, {params[i].size},
                          state.adam_v[i].data(), state.adam_v[i].size());
        }
    }
    if (!out) throw CheckpointError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError(path + " is not a model checkpoint");
    const auto version = read_pod<uint32_t>(in);
    if (version != kVersion)
        throw CheckpointError("checkpoint version " + std::to_string(version) +
                              " unsupported (expected " + std::to_string(kVersion) + ")");
    const auto hash = read_pod<uint64_t>(in);

    const auto meta_len = read_pod<uint32_t>(in);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), meta_len);
    if (!in) throw CheckpointError("checkpoint truncated");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception&) {
        throw CheckpointError("checkpoint corrupt: bad metadata");
    }

    ModelConfig mc;
    const auto& jm = meta.at("model");
    mc.input_len = jm.at("input_len");
    mc.n_classes = jm.at("n_classes");
    mc.hidden = jm.at("hidden").get<std::vector<std::size_t>>();
    mc.kernel = jm.at("kernel");
    mc.dropout = jm.at("dropout");
    mc.head = head_type_from_name(jm.at("head"));
    mc.grid_size = jm.at("grid_size");
    mc.spline_order = jm.at("spline_order");
    mc.kan_domain = jm.at("kan_domain");
    mc.head_input_norm = jm.at("head_input_norm");

    Checkpoint ckpt{MktcnModel(mc, 0), TrainState{}, PcaModel{},
                    train_cfg_from_json(meta.at("train")),
                    prep_cfg_from_json(meta.at("prep")), hash};
    ckpt.pca = PcaModel::from_json(meta.at("pca").dump());
    ckpt.state.step = meta.at("state").at("step");
    ckpt.state.best_val_macro_f1 = meta.at("state").at("best_val_macro_f1");
    ckpt.state.loss_history =
        meta.at("state").at("loss_history").get<std::vector<double>>();

    auto params = ckpt.model.params();
    const bool has_adam = meta.at("state").at("has_adam");
    if (has_adam) {
        ckpt.state.adam_m.resize(params.size());
        ckpt.state.adam_v.resize(params.size());
    }

    const auto n_sections = read_pod<uint32_t>(in);
    std::vector<double> norm_mean, norm_scale;
    std::size_t loaded = 0;
    for (uint32_t s = 0; s < n_sections; ++s) {
        Section sec = read_section(in);
        if (sec.name == "norm.mean") {
            norm_mean = std::move(sec.data);
            continue;
        }
        if (sec.name == "norm.scale") {
            norm_scale = std::move(sec.data);
            continue;
        }
        if (sec.name.starts_with("adam.m.") || sec.name.starts_with("adam.v.")) {
            const bool is_m = sec.name.starts_with("adam.m.");
            const std::string pname = sec.name.substr(7);
            bool found = false;
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (params[i].name != pname) continue;
                if (sec.data.size() != params[i].size)
                    throw CheckpointError("checkpoint corrupt: size mismatch in " + sec.name);
                (is_m ? ckpt.state.adam_m : ckpt.state.adam_v)[i] = std::move(sec.data);
                found = true;
                break;
            }
            if (!found)
                throw CheckpointError("checkpoint corrupt: unknown optimizer section " +
                                      sec.name);
            continue;
        }
        bool found = false;
        for (auto& p : params) {
            if (p.name != sec.name) continue;
            if (sec.data.size() != p.size)
                throw CheckpointError("checkpoint corrupt: parameter " + sec.name +
                                      " has wrong size");
            std::copy(sec.data.begin(), sec.data.end(), p.data);
            found = true;
            ++loaded;
            break;
        }
        if (!found)
            throw CheckpointError("checkpoint corrupt: unknown parameter section " + sec.name);
    }
    if (loaded != params.size())
        throw CheckpointError("checkpoint corrupt: missing parameter sections");
    if (mc.head_input_norm) {
        if (norm_mean.size() != mc.input_len || norm_scale.size() != mc.input_len)
            throw CheckpointError("checkpoint corrupt: missing head normalization");
        ckpt.model.set_head_norm(std::move(norm_mean), std::move(norm_scale));
    }
    return ckpt;
}

}  // namespace mktcn
