#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mktcn {

// Labeled multivariate telemetry: T timestamps x n channels plus a class
// label per timestamp (0 normal, 1 abnormal, 2 doubtful).
struct TimeSeriesFrame {
    std::vector<int64_t> timestamps;  // seconds
    std::vector<std::string> channel_names;
    std::vector<double> channels;  // T x n, row-major
    std::vector<int> labels;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t n_channels() const { return channel_names.size(); }
    double at(std::size_t t, std::size_t c) const { return channels[t * n_channels() + c]; }
    double& at(std::size_t t, std::size_t c) { return channels[t * n_channels() + c]; }
    bool operator==(const TimeSeriesFrame&) const = default;
};

struct LeakEvent {
    std::size_t onset_step = 0;
    double severity = 1.0;  // in (0, 1]; scales drop, flow divergence and noise boost
};

// Synthetic stand-in for a four-station transmission pipeline: temperature
// and pressure at each station inlet/outlet (first station outlet-only, last
// inlet-only) plus flow meters at the first outlet and last inlet.
struct PipelineConfig {
    std::size_t n_stations = 4;
    int64_t sample_interval = 20;  // seconds between rows
    std::size_t total_steps = 40000;
    std::vector<LeakEvent> leak_events;
    std::size_t event_duration = 210;    // steps an event stays abnormal
    std::size_t precursor_horizon = 200; // N: steps labeled doubtful before onset
    double noise_std = 1.0;              // multiplier on per-channel noise scales
    uint64_t seed = 1;

    // Evenly spaced events with varied severities, sized so the abnormal
    // fraction mirrors the highly imbalanced field data (~3.4%).
    static PipelineConfig ngpod_like(uint64_t seed, std::size_t steps = 40000,
                                     std::size_t n_events = 6, std::size_t horizon = 200);
};

std::vector<std::string> pipeline_channel_names(std::size_t n_stations);

// Labels per the problem statement: class 1 on [onset, onset+duration),
// class 2 on the N steps before onset (truncated at the previous event's
// end), class 0 elsewhere. Throws if precursor windows overlap each other.
std::vector<int> make_labels(std::size_t total_steps, const std::vector<LeakEvent>& events,
                             std::size_t event_duration, std::size_t horizon);

TimeSeriesFrame generate_pipeline(const PipelineConfig& config);

// Re-labels an already generated frame for a different horizon N; the signal
// itself is untouched so sweeps stay comparable across N.
void relabel(TimeSeriesFrame& frame, const std::vector<LeakEvent>& events,
             std::size_t event_duration, std::size_t horizon);

// Multi-class oscillatory signal generator (bearing-style benchmark stand-in):
// every class gets a distinct frequency/amplitude signature. Classes are laid
// out round-robin in segments of `segment_length` steps, `segments_per_class[k]`
// segments each, labels constant per segment.
TimeSeriesFrame generate_multiclass(uint64_t seed, std::size_t n_classes,
                                    const std::vector<std::size_t>& segments_per_class,
                                    std::size_t segment_length);

// CSV layout: header `t,<channel...>,label`; t in integer seconds; channel
// values at full precision so read_csv(write_csv(f)) == f exactly.
void write_csv(const TimeSeriesFrame& frame, const std::string& path);
TimeSeriesFrame read_csv(const std::string& path);

}  // namespace mktcn
