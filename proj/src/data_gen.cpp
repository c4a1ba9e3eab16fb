#include "mktcn/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mktcn/rng.hpp"

namespace mktcn {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kArCoeff = 0.9;        // AR(1) temporal correlation
constexpr double kPressureDrop = 0.45;  // full-severity downstream pressure drop
constexpr double kFlowDivergence = 6.0; // full-severity meter divergence
}  // namespace

PipelineConfig PipelineConfig::ngpod_like(uint64_t seed, std::size_t steps,
                                          std::size_t n_events, std::size_t horizon) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.total_steps = steps;
    cfg.precursor_horizon = horizon;
    // Abnormal fraction ~3.4%, split across the events.
    cfg.event_duration = std::max<std::size_t>(1, static_cast<std::size_t>(
        0.034 * static_cast<double>(steps) / static_cast<double>(n_events)));
    const double severities[] = {0.8, 0.6, 1.0, 0.7, 0.9, 0.5};
    const std::size_t spacing = steps / (n_events + 1);
    cfg.leak_events.clear();
    for (std::size_t e = 0; e < n_events; ++e)
        cfg.leak_events.push_back({spacing * (e + 1), severities[e % 6]});
    return cfg;
}

std::vector<std::string> pipeline_channel_names(std::size_t n_stations) {
    std::vector<std::string> names;
    for (std::size_t s = 1; s <= n_stations; ++s) {
        if (s > 1) {
            names.push_back("s" + std::to_string(s) + "_in_temp");
            names.push_back("s" + std::to_string(s) + "_in_pres");
        }
        if (s < n_stations) {
            names.push_back("s" + std::to_string(s) + "_out_temp");
            names.push_back("s" + std::to_string(s) + "_out_pres");
        }
    }
    names.push_back("flow_s1_out");
    names.push_back("flow_s" + std::to_string(n_stations) + "_in");
    return names;
}

std::vector<int> make_labels(std::size_t total_steps, const std::vector<LeakEvent>& events,
                             std::size_t event_duration, std::size_t horizon) {
    std::vector<int> labels(total_steps, 0);
    std::size_t prev_onset = 0;
    std::size_t prev_end = 0;  // end of previous abnormal segment (exclusive)
    for (std::size_t e = 0; e < events.size(); ++e) {
        const std::size_t onset = events[e].onset_step;
        if (e > 0 && onset <= prev_onset)
            throw std::invalid_argument("make_labels: leak onsets must be strictly increasing");
        if (onset < horizon)
            throw std::invalid_argument("make_labels: precursor window before step 0");
        if (e > 0 && onset - horizon < prev_onset)
            throw std::invalid_argument("make_labels: overlapping precursor windows");
        // Doubtful steps, truncated at the previous event's end.
        const std::size_t doubt_begin = std::max(onset - horizon, prev_end);
        for (std::size_t t = doubt_begin; t < onset && t < total_steps; ++t) labels[t] = 2;
        const std::size_t end = std::min(onset + event_duration, total_steps);
        for (std::size_t t = onset; t < end; ++t) labels[t] = 1;
        prev_onset = onset;
        prev_end = onset + event_duration;
    }
    return labels;
}

void relabel(TimeSeriesFrame& frame, const std::vector<LeakEvent>& events,
             std::size_t event_duration, std::size_t horizon) {
    frame.labels = make_labels(frame.rows(), events, event_duration, horizon);
}

TimeSeriesFrame generate_pipeline(const PipelineConfig& config) {
    if (config.n_stations < 2)
        throw std::invalid_argument("generate_pipeline: need at least 2 stations");
    if (config.total_steps == 0)
        throw std::invalid_argument("generate_pipeline: total_steps must be positive");
    const auto names = pipeline_channel_names(config.n_stations);
    const std::size_t n = names.size();
    const std::size_t T = config.total_steps;

    // Validates onsets/precursors up front.
    std::vector<int> labels =
        make_labels(T, config.leak_events, config.event_duration, config.precursor_horizon);

    TimeSeriesFrame frame;
    frame.channel_names = names;
    frame.timestamps.resize(T);
    for (std::size_t t = 0; t < T; ++t)
        frame.timestamps[t] = static_cast<int64_t>(t) * config.sample_interval;
    frame.labels = std::move(labels);
    frame.channels.assign(T * n, 0.0);

    enum class Kind { temp, pres, flow };
    struct ChannelSpec {
        Kind kind;
        std::size_t station;
        double base;
        double demand_amp, diurnal_amp, load_amp;
        double noise;      // AR(1) innovation std before the global multiplier
        bool downstream;   // pressure affected by a mid-pipe leak
        bool flow_first;   // flow meter at the first station outlet
    };
    std::vector<ChannelSpec> specs;
    const std::size_t leak_after_station = config.n_stations / 2;  // leak sits mid-pipe
    for (const auto& name : names) {
        ChannelSpec sp{};
        if (name[0] == 's') sp.station = std::stoul(name.substr(1));
        if (name.find("temp") != std::string::npos) {
            sp.kind = Kind::temp;
            sp.base = 295.0 + 1.5 * static_cast<double>(sp.station);
            sp.demand_amp = 0.4;
            sp.diurnal_amp = 3.0;
            sp.load_amp = 0.2;
            sp.noise = 0.06;
        } else if (name.find("pres") != std::string::npos) {
            sp.kind = Kind::pres;
            sp.base = 6.4 - 0.8 * static_cast<double>(sp.station);
            sp.demand_amp = 0.30;
            sp.diurnal_amp = 0.05;
            sp.load_amp = 0.10;
            sp.noise = 0.012;
            sp.downstream = sp.station > leak_after_station;
        } else {
            sp.kind = Kind::flow;
            sp.flow_first = name.find("s1_out") != std::string::npos;
            sp.base = sp.flow_first ? 96.0 : 92.0;
            sp.demand_amp = 4.0;
            sp.diurnal_amp = 0.8;
            sp.load_amp = 1.5;
            sp.noise = 0.25;
            sp.station = sp.flow_first ? 1 : config.n_stations;
        }
        specs.push_back(sp);
    }

    // Event deviation lookup per step: ramp during the precursor, full drop
    // while abnormal. severity == 0 leaves the signal untouched.
    std::vector<double> drop_frac(T, 0.0);     // fraction of the full pressure drop
    std::vector<double> noise_boost(T, 0.0);   // extra innovation variance fraction
    std::vector<double> flow_div(T, 0.0);
    const std::size_t N = config.precursor_horizon;
    for (const auto& ev : config.leak_events) {
        const std::size_t end = std::min(ev.onset_step + config.event_duration, T);
        for (std::size_t t = ev.onset_step >= N ? ev.onset_step - N : 0; t < ev.onset_step;
             ++t) {
            const double ramp =
                static_cast<double>(t - (ev.onset_step - N) + 1) / static_cast<double>(N);
            drop_frac[t] = 0.5 * ev.severity * ramp;
            noise_boost[t] = ev.severity;  // variance doubles at full severity
        }
        for (std::size_t t = ev.onset_step; t < end; ++t) {
            drop_frac[t] = ev.severity;
            flow_div[t] = ev.severity;
        }
    }

    Rng rng(Rng::derive(config.seed, 0x1EAC));
    const double dt = static_cast<double>(config.sample_interval);
    std::vector<double> ar(n, 0.0);
    // Burn-in so the AR state starts at its stationary distribution.
    for (int warm = 0; warm < 64; ++warm)
        for (std::size_t c = 0; c < n; ++c)
            ar[c] = kArCoeff * ar[c] + rng.normal() * specs[c].noise * config.noise_std;

    for (std::size_t t = 0; t < T; ++t) {
        const double secs = static_cast<double>(t) * dt;
        const double demand = std::sin(2.0 * kPi * secs / 60000.0 + 0.7);
        const double diurnal = std::sin(2.0 * kPi * secs / 86400.0);
        const double load = std::sin(2.0 * kPi * secs / 19540.0 + 1.3);
        for (std::size_t c = 0; c < n; ++c) {
            const ChannelSpec& sp = specs[c];
            double boost = 1.0;
            if (sp.kind == Kind::pres && sp.downstream && noise_boost[t] > 0.0)
                boost = std::sqrt(1.0 + noise_boost[t]);
            ar[c] = kArCoeff * ar[c] + rng.normal() * specs[c].noise * config.noise_std * boost;
            double v = sp.base + sp.demand_amp * demand + sp.diurnal_amp * diurnal +
                       sp.load_amp * load + ar[c];
            if (sp.kind == Kind::pres && sp.downstream) v -= drop_frac[t] * kPressureDrop;
            if (sp.kind == Kind::flow && flow_div[t] > 0.0)
                v += (sp.flow_first ? 0.5 : -0.5) * flow_div[t] * kFlowDivergence;
            frame.at(t, c) = v;
        }
    }
    return frame;
}

TimeSeriesFrame generate_multiclass(uint64_t seed, std::size_t n_classes,
                                    const std::vector<std::size_t>& segments_per_class,
                                    std::size_t segment_length) {
    if (n_classes < 2)
        throw std::invalid_argument("generate_multiclass: need at least 2 classes");
    if (segments_per_class.empty())
        throw std::invalid_argument("generate_multiclass: empty class list");
    if (segments_per_class.size() != n_classes)
        throw std::invalid_argument("generate_multiclass: one segment count per class");
    if (segment_length == 0)
        throw std::invalid_argument("generate_multiclass: segment_length must be positive");

    const std::size_t n_ch = 3;
    TimeSeriesFrame frame;
    frame.channel_names = {"sensor_a", "sensor_b", "sensor_c"};

    Rng rng(Rng::derive(seed, 0xC1A5));
    // Round-robin over classes until every class has emitted its segments.
    std::vector<std::size_t> remaining = segments_per_class;
    std::size_t left = 0;
    for (auto r : remaining) left += r;
    int64_t step = 0;
    while (left > 0) {
        for (std::size_t k = 0; k < n_classes && left > 0; ++k) {
            if (remaining[k] == 0) continue;
            --remaining[k];
            --left;
            const double freq = 0.04 * (1.0 + 0.37 * static_cast<double>(k));
            const double amp = 1.0 + 0.15 * static_cast<double>(k % 3);
            for (std::size_t i = 0; i < segment_length; ++i, ++step) {
                const double ph = 2.0 * kPi * freq * static_cast<double>(i);
                for (std::size_t c = 0; c < n_ch; ++c) {
                    const double chase = 0.9 * static_cast<double>(c);
                    const double v = amp * std::sin(ph + chase) +
                                     0.5 * amp * std::sin(2.3 * ph + chase + 0.4) +
                                     0.1 * rng.normal();
                    frame.channels.push_back(v);
                }
                frame.timestamps.push_back(step);
                frame.labels.push_back(static_cast<int>(k));
            }
        }
    }
    return frame;
}

void write_csv(const TimeSeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "t";
    for (const auto& name : frame.channel_names) out << "," << name;
    out << ",label\n";
    char buf[40];
    const std::size_t n = frame.n_channels();
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        out << frame.timestamps[t];
        for (std::size_t c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", frame.channels[t * n + c]);
            out << ',' << buf;
        }
        out << ',' << frame.labels[t] << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

TimeSeriesFrame read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
    TimeSeriesFrame frame;
    {
        std::stringstream header(line);
        std::string field;
        std::vector<std::string> cols;
        while (std::getline(header, field, ',')) cols.push_back(field);
        if (cols.size() < 2 || cols.front() != "t" || cols.back() != "label")
            throw std::runtime_error("read_csv: malformed header in " + path);
        frame.channel_names.assign(cols.begin() + 1, cols.end() - 1);
    }
    const std::size_t n = frame.n_channels();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string field;
        if (!std::getline(row, field, ','))
            throw std::runtime_error("read_csv: truncated row in " + path);
        frame.timestamps.push_back(std::stoll(field));
        for (std::size_t c = 0; c < n; ++c) {
            if (!std::getline(row, field, ','))
                throw std::runtime_error("read_csv: truncated row in " + path);
            frame.channels.push_back(std::stod(field));
        }
        if (!std::getline(row, field, ','))
            throw std::runtime_error("read_csv: missing label in " + path);
        frame.labels.push_back(std::stoi(field));
    }
    return frame;
}

}  // namespace mktcn
