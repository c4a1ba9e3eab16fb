#include "mktcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mktcn {

const std::vector<std::string> kMetricNames = {
    "accuracy", "npv", "precision", "specificity", "recall",
    "f1",       "aunp", "kappa",    "mcc",         "g_measure"};

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& predictions,
                          std::size_t n_classes) {
    if (labels.size() != predictions.size())
        throw std::invalid_argument("confusion: labels/predictions length mismatch");
    if (n_classes == 0) {
        int mx = -1;
        for (int l : labels) mx = std::max(mx, l);
        for (int p : predictions) mx = std::max(mx, p);
        if (mx < 0) throw std::invalid_argument("confusion: no samples");
        n_classes = static_cast<std::size_t>(mx + 1);
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || predictions[i] < 0 ||
            static_cast<std::size_t>(labels[i]) >= n_classes ||
            static_cast<std::size_t>(predictions[i]) >= n_classes)
            throw std::invalid_argument("confusion: class index out of range");
        ++cm.at(labels[i], predictions[i]);
    }
    return cm;
}

std::vector<double> MetricsReport::scalar_values() const {
    return {accuracy, npv, precision, specificity, recall, f1, aunp, kappa, mcc, g_measure};
}

MetricsReport macro_metrics(const ConfusionMatrix& cm) {
    const std::size_t c = cm.n_classes;
    const double total = static_cast<double>(cm.total());
    if (c == 0 || total == 0) throw std::invalid_argument("macro_metrics: empty matrix");

    MetricsReport rep;
    rep.cm = cm;
    rep.per_class.resize(c);

    auto ratio = [&](double num, double den, const std::string& flag) {
        if (den == 0.0) {
            rep.degenerate.push_back(flag);
            return 0.0;
        }
        return num / den;
    };

    std::vector<double> row_sum(c, 0.0), col_sum(c, 0.0);
    double trace = 0.0;
    for (std::size_t t = 0; t < c; ++t)
        for (std::size_t p = 0; p < c; ++p) {
            const double v = static_cast<double>(cm.at(t, p));
            row_sum[t] += v;
            col_sum[p] += v;
            if (t == p) trace += v;
        }

    rep.aunp = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const double tp = static_cast<double>(cm.at(k, k));
        const double fn = row_sum[k] - tp;
        const double fp = col_sum[k] - tp;
        const double tn = total - tp - fn - fp;
        const std::string suffix = "[" + std::to_string(k) + "]";
        ClassMetrics& m = rep.per_class[k];
        m.precision = ratio(tp, tp + fp, "precision" + suffix);
        m.recall = ratio(tp, tp + fn, "recall" + suffix);
        m.specificity = ratio(tn, tn + fp, "specificity" + suffix);
        m.npv = ratio(tn, tn + fn, "npv" + suffix);
        m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall, "f1" + suffix);
        m.g = std::sqrt(m.recall * m.specificity);
        rep.precision += m.precision;
        rep.recall += m.recall;
        rep.specificity += m.specificity;
        rep.npv += m.npv;
        rep.f1 += m.f1;
        rep.g_measure += m.g;
        // Prevalence-weighted one-vs-rest balanced accuracy.
        rep.aunp += (row_sum[k] / total) * 0.5 * (m.recall + m.specificity);
    }
    rep.precision /= static_cast<double>(c);
    rep.recall /= static_cast<double>(c);
    rep.specificity /= static_cast<double>(c);
    rep.npv /= static_cast<double>(c);
    rep.f1 /= static_cast<double>(c);
    rep.g_measure /= static_cast<double>(c);

    rep.accuracy = trace / total;

    // Cohen's kappa with marginal-product chance agreement.
    double pe = 0.0;
    for (std::size_t k = 0; k < c; ++k) pe += (row_sum[k] / total) * (col_sum[k] / total);
    rep.kappa = ratio(rep.accuracy - pe, 1.0 - pe, "kappa");

    // Multi-class MCC, covariance form over the full matrix.
    double st = 0.0, sp = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        st += row_sum[k] * row_sum[k];
        sp += col_sum[k] * col_sum[k];
    }
    const double cov = total * trace - std::inner_product(row_sum.begin(), row_sum.end(),
                                                          col_sum.begin(), 0.0);
    const double den = std::sqrt(total * total - st) * std::sqrt(total * total - sp);
    rep.mcc = ratio(cov, den, "mcc");

    return rep;
}

PrCurve pr_curve(const std::vector<int>& labels, const std::vector<double>& class_scores,
                 int class_k) {
    if (labels.size() != class_scores.size())
        throw std::invalid_argument("pr_curve: labels/scores length mismatch");
    int64_t positives = 0;
    for (int l : labels) positives += (l == class_k) ? 1 : 0;
    if (positives == 0)
        throw std::invalid_argument("pr_curve: class " + std::to_string(class_k) +
                                    " absent from labels, AP undefined");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return class_scores[a] > class_scores[b];
    });

    PrCurve out;
    int64_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // Consume the whole tie group before emitting one threshold point.
        const double threshold = class_scores[order[i]];
        for (; i < order.size() && class_scores[order[i]] == threshold; ++i) {
            if (labels[order[i]] == class_k)
                ++tp;
            else
                ++fp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        out.points.emplace_back(recall, precision);
        out.ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return out;
}

double aunp_curve(const std::vector<int>& labels,
                  const std::vector<std::vector<double>>& scores) {
    const std::size_t c = scores.size();
    const std::size_t n = labels.size();
    if (c == 0 || n == 0) throw std::invalid_argument("aunp_curve: empty input");
    double area_sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        if (scores[k].size() != n)
            throw std::invalid_argument("aunp_curve: per-class score length mismatch");
        int64_t positives = 0;
        for (int l : labels) positives += (static_cast<std::size_t>(l) == k) ? 1 : 0;
        if (positives == 0) continue;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores[k][a] > scores[k][b];
        });
        // Walking the threshold down: everything ranked so far is predicted
        // positive, the rest negative.
        int64_t tp = 0, fp = 0;
        double area = 0.0, prev_recall = 0.0;
        std::size_t i = 0;
        const auto negatives = static_cast<int64_t>(n) - positives;
        while (i < n) {
            const double threshold = scores[k][order[i]];
            for (; i < n && scores[k][order[i]] == threshold; ++i) {
                if (static_cast<std::size_t>(labels[order[i]]) == k)
                    ++tp;
                else
                    ++fp;
            }
            const int64_t fn = positives - tp;
            const int64_t tn = negatives - fp;
            const double recall = static_cast<double>(tp) / static_cast<double>(positives);
            const double npv =
                (tn + fn) == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fn);
            area += (recall - prev_recall) * npv;
            prev_recall = recall;
        }
        area_sum += (static_cast<double>(positives) / static_cast<double>(n)) * area;
    }
    return area_sum;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;  // nlohmann::json orders keys lexicographically
    const auto values = report.scalar_values();
    for (std::size_t i = 0; i < kMetricNames.size(); ++i) j[kMetricNames[i]] = values[i];
    nlohmann::json pc = nlohmann::json::array();
    for (const auto& m : report.per_class)
        pc.push_back({{"precision", m.precision},
                      {"recall", m.recall},
                      {"specificity", m.specificity},
                      {"npv", m.npv},
                      {"f1", m.f1},
                      {"g", m.g}});
    j["per_class"] = pc;
    std::vector<std::vector<int64_t>> cm_rows(report.cm.n_classes);
    for (std::size_t t = 0; t < report.cm.n_classes; ++t)
        for (std::size_t p = 0; p < report.cm.n_classes; ++p)
            cm_rows[t].push_back(report.cm.at(t, p));
    j["confusion_matrix"] = cm_rows;
    j["degenerate"] = report.degenerate;
    if (!report.pr_curves.empty()) {
        nlohmann::json curves = nlohmann::json::array();
        for (const auto& curve : report.pr_curves) {
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& [r, p] : curve) pts.push_back({r, p});
            curves.push_back(pts);
        }
        j["pr_curves"] = curves;
    }
    if (!report.ap.empty()) j["ap"] = report.ap;
    return j.dump(2);
}

void report_json(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report_json: cannot open " + path);
    out << report_to_json(report) << "\n";
    if (!out) throw std::runtime_error("report_json: write failed for " + path);
}

void pr_curve_csv(const PrCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("pr_curve_csv: cannot open " + path);
    out << "recall,precision\n";
    char buf[80];
    for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", it->first, it->second);
        out << buf;
    }
}

double radar_area(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 3) throw std::invalid_argument("radar_area: need at least 3 axes");
    constexpr double kPi = 3.14159265358979323846;
    const double wedge = 2.0 * kPi / static_cast<double>(n);
    double area = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::max(values[i], 0.0);
        const double b = std::max(values[(i + 1) % n], 0.0);
        area += 0.5 * a * b * std::sin(wedge);
    }
    return area;
}

}  // namespace mktcn
