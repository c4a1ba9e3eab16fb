#include "mktcn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace mktcn {

const char* kToolVersion = "0.1.0";

namespace {

class ManifestWriter {
public:
    ManifestWriter(std::string command, std::string dir)
        : command_(std::move(command)), dir_(std::move(dir)),
          t0_(std::chrono::steady_clock::now()) {}

    nlohmann::json& config() { return config_; }
    void add_input(const std::string& p) { inputs_.push_back(p); }
    void add_output(const std::string& p) { outputs_.push_back(p); }

    void write() {
        const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t0_)
                              .count();
        nlohmann::json j;
        j["command"] = command_;
        j["tool_version"] = kToolVersion;
        j["config"] = config_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        j["wall_ms"] = wall;
        const std::string path = (fs::path(dir_) / "manifest.json").string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write manifest " + path);
        out << j.dump(2) << "\n";
    }

private:
    std::string command_, dir_;
    nlohmann::json config_;
    std::vector<std::string> inputs_, outputs_;
    std::chrono::steady_clock::time_point t0_;
};

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw UsageError("output directory not set");
    fs::create_directories(dir);
}

nlohmann::json gen_args_json(const GenArgs& a) {
    return {{"preset", a.preset},
            {"steps", a.steps},
            {"leak_events", a.leak_events},
            {"horizon_n", a.horizon_n},
            {"event_duration", a.event_duration},
            {"noise_std", a.noise_std},
            {"seed", a.seed},
            {"n_classes", a.n_classes},
            {"segments_per_class", a.segments_per_class},
            {"segment_length", a.segment_length}};
}

nlohmann::json prep_json(const PreprocessConfig& c) {
    return {{"omega", c.omega},           {"stride", c.stride},
            {"pca_target", c.pca_target}, {"standardize", c.standardize},
            {"ratios", c.ratios},         {"split_seed", c.split_seed}};
}

nlohmann::json train_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},
            {"dropout", c.dropout},
            {"kernel", c.kernel},
            {"lr", c.lr},
            {"epochs", c.epochs},
            {"hidden", c.hidden},
            {"grid_size", c.grid_size},
            {"spline_order", c.spline_order},
            {"seed", c.seed},
            {"class_weights", c.class_weights},
            {"head", head_type_name(c.head)},
            {"head_input_norm", c.head_input_norm}};
}

PipelineConfig pipeline_config_from(const GenArgs& args) {
    PipelineConfig cfg = PipelineConfig::ngpod_like(args.seed, args.steps, args.leak_events,
                                                    args.horizon_n);
    cfg.noise_std = args.noise_std;
    if (args.event_duration > 0) cfg.event_duration = args.event_duration;
    return cfg;
}

}  // namespace

void cmd_gen_data(const GenArgs& args) {
    if (args.out.empty()) throw UsageError("gen-data: --out is required");
    if (args.preset != "ngpod-like" && args.preset != "multiclass")
        throw UsageError("gen-data: unknown preset '" + args.preset + "'");

    TimeSeriesFrame frame;
    if (args.preset == "ngpod-like") {
        frame = generate_pipeline(pipeline_config_from(args));
    } else {
        if (args.n_classes < 2) throw UsageError("gen-data: need at least 2 classes");
        std::vector<std::size_t> segs(args.n_classes, args.segments_per_class);
        frame = generate_multiclass(args.seed, args.n_classes, segs, args.segment_length);
    }

    const fs::path out_path(args.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_csv(frame, args.out);

    ManifestWriter manifest("gen-data", out_path.has_parent_path()
                                            ? out_path.parent_path().string()
                                            : ".");
    manifest.config() = gen_args_json(args);
    manifest.config()["out"] = args.out;
    manifest.add_output(args.out);
    manifest.write();
}

void cmd_train(const TrainArgs& args) {
    if (args.data.empty()) throw UsageError("train: --data is required");
    ensure_dir(args.out_dir);
    if (!fs::exists(args.data))
        throw std::runtime_error("train: dataset not found: " + args.data);

    ManifestWriter manifest("train", args.out_dir);
    manifest.config()["data"] = args.data;
    manifest.config()["prep"] = prep_json(args.prep);
    manifest.config()["train"] = train_json(args.train);
    manifest.add_input(args.data);

    TimeSeriesFrame frame = read_csv(args.data);
    Preprocessed pre = run_preprocess(frame, args.prep);

    TrainConfig cfg = args.train;
    const std::string log_path = (fs::path(args.out_dir) / "train_log.jsonl").string();
    cfg.log_path = log_path;
    TrainResult result = train_model(pre.dataset, cfg);

    const std::string ckpt_path = (fs::path(args.out_dir) / "checkpoint.bin").string();
    save_checkpoint(result.model, result.state, pre.pca, args.train, args.prep, ckpt_path);

    manifest.add_output(ckpt_path);
    manifest.add_output(log_path);
    manifest.write();
}

MetricsReport evaluate_split(MktcnModel& model, const SerialDataset& ds, Split split,
                             const std::string& aunp_mode) {
    const auto indices = ds.indices_of(split);
    if (indices.empty()) throw std::runtime_error("evaluate_split: split is empty");
    const std::size_t c = ds.n_classes();

    std::vector<int> truth, preds;
    std::vector<std::vector<double>> scores(c);  // scores[k][i]
    truth.reserve(indices.size());
    preds.reserve(indices.size());
    for (std::size_t idx : indices) {
        const auto probs = model.predict_probs(ds.sample(idx));
        truth.push_back(ds.labels[idx]);
        preds.push_back(static_cast<int>(argmax(probs)));
        for (std::size_t k = 0; k < c; ++k) scores[k].push_back(probs[k]);
    }

    MetricsReport rep = macro_metrics(confusion(truth, preds, c));
    if (aunp_mode == "curve") {
        rep.aunp = aunp_curve(truth, scores);
    } else if (aunp_mode != "standard") {
        throw UsageError("unknown --aunp-mode '" + aunp_mode + "'");
    }
    rep.pr_curves.resize(c);
    rep.ap.assign(c, std::nan(""));
    for (std::size_t k = 0; k < c; ++k) {
        if (std::find(truth.begin(), truth.end(), static_cast<int>(k)) == truth.end()) {
            rep.degenerate.push_back("ap[" + std::to_string(k) + "]");
            continue;
        }
        PrCurve curve = pr_curve(truth, scores[k], static_cast<int>(k));
        rep.pr_curves[k] = std::move(curve.points);
        rep.ap[k] = curve.ap;
    }
    return rep;
}

MetricsReport cmd_eval(const EvalArgs& args) {
    if (args.checkpoint.empty() || args.data.empty())
        throw UsageError("eval: --checkpoint and --data are required");
    ensure_dir(args.out_dir);

    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    PreprocessConfig prep = ckpt.prep_cfg;
    if (args.omega) prep.omega = *args.omega;
    if (args.stride) prep.stride = *args.stride;
    if (args.split_seed) prep.split_seed = *args.split_seed;
    if (args.pca_target) prep.pca_target = *args.pca_target;

    const uint64_t effective = config_hash(ckpt.train_cfg, prep);
    if (effective != ckpt.hash) {
        std::fprintf(stderr,
                     "eval: warning: configuration hash mismatch (checkpoint %016llx vs "
                     "effective %016llx)\n",
                     static_cast<unsigned long long>(ckpt.hash),
                     static_cast<unsigned long long>(effective));
        if (!args.force)
            throw std::runtime_error("eval: config mismatch; pass --force to proceed");
    }

    ManifestWriter manifest("eval", args.out_dir);
    manifest.config()["checkpoint"] = args.checkpoint;
    manifest.config()["data"] = args.data;
    manifest.config()["aunp_mode"] = args.aunp_mode;
    manifest.config()["force"] = args.force;
    manifest.config()["prep"] = prep_json(prep);
    manifest.add_input(args.checkpoint);
    manifest.add_input(args.data);

    TimeSeriesFrame frame = read_csv(args.data);
    SerialDataset ds = apply_preprocess(frame, ckpt.pca, prep);
    MetricsReport rep = evaluate_split(ckpt.model, ds, Split::test, args.aunp_mode);

    const std::string metrics_path = (fs::path(args.out_dir) / "metrics.json").string();
    report_json(rep, metrics_path);
    manifest.add_output(metrics_path);
    for (std::size_t k = 0; k < rep.pr_curves.size(); ++k) {
        if (rep.pr_curves[k].empty()) continue;
        PrCurve curve{rep.pr_curves[k], rep.ap[k]};
        const std::string path =
            (fs::path(args.out_dir) / ("pr_class_" + std::to_string(k) + ".csv")).string();
        pr_curve_csv(curve, path);
        manifest.add_output(path);
    }
    manifest.write();
    return rep;
}

void cmd_sweep_n(const SweepArgs& args) {
    if (args.n_list.empty()) throw UsageError("sweep-n: empty N list");
    if (args.gen.preset != "ngpod-like")
        throw UsageError("sweep-n: only the ngpod-like preset can be relabeled");
    ensure_dir(args.out_dir);

    ManifestWriter manifest("sweep-n", args.out_dir);
    manifest.config()["n_list"] = args.n_list;
    manifest.config()["gen"] = gen_args_json(args.gen);
    manifest.config()["prep"] = prep_json(args.prep);
    manifest.config()["train"] = train_json(args.train);

    // One signal, relabeled per N: the horizon only moves the doubtful
    // window, so runs stay comparable.
    const PipelineConfig base_cfg = pipeline_config_from(args.gen);
    TimeSeriesFrame frame = generate_pipeline(base_cfg);

    const std::string sweep_path = (fs::path(args.out_dir) / "sweep.csv").string();
    std::ofstream sweep(sweep_path);
    if (!sweep) throw std::runtime_error("sweep-n: cannot write " + sweep_path);
    sweep << "n,horizon_seconds";
    for (const auto& name : kMetricNames) sweep << "," << name;
    sweep << ",radar_area\n";

    for (std::size_t horizon : args.n_list) {
        relabel(frame, base_cfg.leak_events, base_cfg.event_duration, horizon);
        const std::string run_dir =
            (fs::path(args.out_dir) / ("n_" + std::to_string(horizon))).string();
        ensure_dir(run_dir);
        const std::string data_path = (fs::path(run_dir) / "data.csv").string();
        write_csv(frame, data_path);

        TrainArgs train_args{data_path, run_dir, args.prep, args.train};
        cmd_train(train_args);

        EvalArgs eval_args;
        eval_args.checkpoint = (fs::path(run_dir) / "checkpoint.bin").string();
        eval_args.data = data_path;
        eval_args.out_dir = run_dir;
        MetricsReport rep = cmd_eval(eval_args);

        const auto values = rep.scalar_values();
        char buf[64];
        sweep << horizon << "," << static_cast<int64_t>(horizon) * base_cfg.sample_interval;
        for (double v : values) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            sweep << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", radar_area(values));
        sweep << buf;
        manifest.add_output(run_dir);
    }
    sweep.close();
    manifest.add_output(sweep_path);
    manifest.write();
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty sweep csv " + path);
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        SweepRow row;
        std::getline(ss, field, ',');
        row.horizon = std::stoul(field);
        std::getline(ss, field, ',');
        row.horizon_seconds = std::stoll(field);
        for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
            std::getline(ss, field, ',');
            row.metrics.push_back(std::stod(field));
        }
        std::getline(ss, field, ',');
        row.radar = std::stod(field);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mktcn
