#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mktcn {

// Rows are true classes, columns predicted.
struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<int64_t> counts;  // c x c row-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t c) : n_classes(c), counts(c * c, 0) {}

    int64_t& at(std::size_t t, std::size_t p) { return counts[t * n_classes + p]; }
    int64_t at(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
    int64_t total() const;
};

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& predictions,
                          std::size_t n_classes = 0);

struct ClassMetrics {
    double precision = 0, recall = 0, specificity = 0, npv = 0, f1 = 0, g = 0;
};

// The fixed metric order used for reports, radar axes and sweep CSV columns.
extern const std::vector<std::string> kMetricNames;

struct MetricsReport {
    double accuracy = 0, npv = 0, precision = 0, specificity = 0, recall = 0, f1 = 0,
           aunp = 0, kappa = 0, mcc = 0, g_measure = 0;
    std::vector<ClassMetrics> per_class;
    std::vector<std::vector<std::pair<double, double>>> pr_curves;  // (recall, precision)
    std::vector<double> ap;             // per class; NaN when not computed
    std::vector<std::string> degenerate;  // zero-denominator flags, e.g. "precision[2]"
    ConfusionMatrix cm;

    std::vector<double> scalar_values() const;  // in kMetricNames order
};

// All scalar metrics from the confusion matrix alone. Per-class values come
// from one-vs-rest counts; macro scores are unweighted class means; zero
// denominators contribute 0 and are flagged.
MetricsReport macro_metrics(const ConfusionMatrix& cm);

struct PrCurve {
    std::vector<std::pair<double, double>> points;  // (recall, precision), recall ascending
    double ap = 0;
};

// One-vs-rest precision-recall curve for class k with step-interpolated AP;
// tied scores collapse into a single threshold. Throws when class k never
// appears in labels.
PrCurve pr_curve(const std::vector<int>& labels, const std::vector<double>& class_scores,
                 int class_k);

// Literal area under the NPV-recall curve (the alternative AUNP reading),
// prevalence-weighted over classes. scores[k][i] is sample i's class-k score.
double aunp_curve(const std::vector<int>& labels,
                  const std::vector<std::vector<double>>& scores);

std::string report_to_json(const MetricsReport& report);
void report_json(const MetricsReport& report, const std::string& path);

// `recall,precision` rows, recall non-increasing (threshold ascending).
void pr_curve_csv(const PrCurve& curve, const std::string& path);

// Area of the polygon whose vertices are the given values placed on equally
// spaced unit axes; negative values are clamped to zero.
double radar_area(const std::vector<double>& values);

}  // namespace mktcn
