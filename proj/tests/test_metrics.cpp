#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mktcn/metrics.hpp"
#include "mktcn/rng.hpp"

using namespace mktcn;

namespace {

// Brute-force per-class metric oracle, written against the definitions rather
// than sharing any arithmetic with macro_metrics.
struct OracleResult {
    double accuracy, npv, precision, specificity, recall, f1, aunp, kappa, mcc, g_measure;
};

OracleResult oracle_metrics(const ConfusionMatrix& cm) {
    const std::size_t c = cm.n_classes;
    const double N = static_cast<double>(cm.total());
    auto safe = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };

    OracleResult r{};
    for (std::size_t k = 0; k < c; ++k) {
        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t t = 0; t < c; ++t)
            for (std::size_t p = 0; p < c; ++p) {
                const double v = static_cast<double>(cm.at(t, p));
                if (t == k && p == k) tp += v;
                else if (t == k) fn += v;
                else if (p == k) fp += v;
                else tn += v;
            }
        const double prec = safe(tp, tp + fp);
        const double rec = safe(tp, tp + fn);
        const double spec = safe(tn, tn + fp);
        r.precision += prec / c;
        r.recall += rec / c;
        r.specificity += spec / c;
        r.npv += safe(tn, tn + fn) / c;
        r.f1 += safe(2 * prec * rec, prec + rec) / c;
        r.g_measure += std::sqrt(rec * spec) / c;
        r.aunp += ((tp + fn) / N) * (rec + spec) / 2.0;
    }
    double trace = 0;
    for (std::size_t k = 0; k < c; ++k) trace += static_cast<double>(cm.at(k, k));
    r.accuracy = trace / N;

    double pe = 0;
    for (std::size_t k = 0; k < c; ++k) {
        double row = 0, col = 0;
        for (std::size_t j = 0; j < c; ++j) {
            row += static_cast<double>(cm.at(k, j));
            col += static_cast<double>(cm.at(j, k));
        }
        pe += (row / N) * (col / N);
    }
    r.kappa = safe(r.accuracy - pe, 1.0 - pe);

    // Gorodkin's triple-sum formulation (independent of the covariance form).
    double num = 0;
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t l = 0; l < c; ++l)
            for (std::size_t m = 0; m < c; ++m)
                num += static_cast<double>(cm.at(k, k)) * static_cast<double>(cm.at(l, m)) -
                       static_cast<double>(cm.at(k, l)) * static_cast<double>(cm.at(m, k));
    double den1 = 0, den2 = 0;
    for (std::size_t k = 0; k < c; ++k) {
        double rowk = 0, colk = 0, other_rows = 0, other_cols = 0;
        for (std::size_t l = 0; l < c; ++l) {
            rowk += static_cast<double>(cm.at(k, l));
            colk += static_cast<double>(cm.at(l, k));
        }
        for (std::size_t kp = 0; kp < c; ++kp) {
            if (kp == k) continue;
            for (std::size_t l = 0; l < c; ++l) {
                other_rows += static_cast<double>(cm.at(kp, l));
                other_cols += static_cast<double>(cm.at(l, kp));
            }
        }
        den1 += rowk * other_rows;
        den2 += colk * other_cols;
    }
    r.mcc = safe(num, std::sqrt(den1) * std::sqrt(den2));
    return r;
}

// Exhaustive-threshold AP oracle: O(n^2), recomputing counts per threshold.
double ap_oracle(const std::vector<int>& labels, const std::vector<double>& scores, int k) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double positives = 0;
    for (int l : labels) positives += (l == k) ? 1 : 0;
    double ap = 0, prev_recall = 0;
    for (double th : thresholds) {
        double tp = 0, fp = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (scores[i] >= th) {
                if (labels[i] == k) ++tp;
                else ++fp;
            }
        }
        const double recall = tp / positives;
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

ConfusionMatrix random_cm(Rng& rng, std::size_t c) {
    ConfusionMatrix cm(c);
    for (auto& v : cm.counts) v = static_cast<int64_t>(rng.below(40));
    if (cm.total() == 0) cm.at(0, 0) = 1;
    return cm;
}

}  // namespace

TEST_CASE("confusion basics") {
    auto cm = confusion({0, 1, 2, 1}, {0, 1, 2, 1});
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t p = 0; p < 3; ++p)
            CHECK(cm.at(t, p) == ((t == p) ? (t == 1 ? 2 : 1) : 0));

    auto single = confusion({2}, {0}, 3);
    CHECK(single.at(2, 0) == 1);
    CHECK(single.total() == 1);

    CHECK_THROWS_AS(confusion({0, 1}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(confusion({0, 5}, {0, 0}, 3), std::invalid_argument);
}

TEST_CASE("confusion matches a nested-loop oracle on 500 random samples") {
    Rng rng(1);
    std::vector<int> labels(500), preds(500);
    for (auto& l : labels) l = static_cast<int>(rng.below(4));
    for (auto& p : preds) p = static_cast<int>(rng.below(4));
    const auto cm = confusion(labels, preds, 4);
    for (int t = 0; t < 4; ++t)
        for (int p = 0; p < 4; ++p) {
            int64_t want = 0;
            for (std::size_t i = 0; i < labels.size(); ++i)
                want += (labels[i] == t && preds[i] == p) ? 1 : 0;
            CHECK(cm.at(t, p) == want);
        }
}

TEST_CASE("perfect predictions score 1 everywhere") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 5;
    cm.at(1, 1) = 3;
    cm.at(2, 2) = 9;
    const auto rep = macro_metrics(cm);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.kappa == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.mcc == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : {rep.npv, rep.precision, rep.specificity, rep.recall, rep.f1, rep.aunp,
                     rep.g_measure})
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.degenerate.empty());
}

TEST_CASE("uniform matrix is chance agreement") {
    ConfusionMatrix cm(3);
    for (auto& v : cm.counts) v = 10;
    const auto rep = macro_metrics(cm);
    CHECK(rep.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(rep.kappa == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.mcc == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("binary hand-computed case") {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 50;
    cm.at(0, 1) = 10;
    cm.at(1, 0) = 5;
    cm.at(1, 1) = 35;
    const auto rep = macro_metrics(cm);
    CHECK(rep.accuracy == doctest::Approx(0.85).epsilon(1e-12));
    // Class 0: tp=50 fp=5 fn=10 tn=35; class 1: tp=35 fp=10 fn=5 tn=50.
    CHECK(rep.per_class[0].precision == doctest::Approx(50.0 / 55.0).epsilon(1e-12));
    CHECK(rep.per_class[0].recall == doctest::Approx(50.0 / 60.0).epsilon(1e-12));
    CHECK(rep.per_class[0].specificity == doctest::Approx(35.0 / 40.0).epsilon(1e-12));
    CHECK(rep.per_class[0].npv == doctest::Approx(35.0 / 45.0).epsilon(1e-12));
    CHECK(rep.per_class[1].precision == doctest::Approx(35.0 / 45.0).epsilon(1e-12));
    CHECK(rep.per_class[1].recall == doctest::Approx(35.0 / 40.0).epsilon(1e-12));
    const auto oracle = oracle_metrics(cm);
    CHECK(rep.f1 == doctest::Approx(oracle.f1).epsilon(1e-12));
    CHECK(rep.kappa == doctest::Approx(oracle.kappa).epsilon(1e-12));
    CHECK(rep.mcc == doctest::Approx(oracle.mcc).epsilon(1e-12));

    // Binary MCC matches the classical closed form.
    const double classical =
        (50.0 * 35.0 - 10.0 * 5.0) /
        std::sqrt((50.0 + 10.0) * (50.0 + 5.0) * (35.0 + 10.0) * (35.0 + 5.0));
    CHECK(rep.mcc == doctest::Approx(classical).epsilon(1e-12));
}

TEST_CASE("all ten metrics match the brute-force oracle on random matrices") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = std::vector<std::size_t>{2, 3, 5}[rng.below(3)];
        const auto cm = random_cm(rng, c);
        const auto rep = macro_metrics(cm);
        const auto want = oracle_metrics(cm);
        CHECK(rep.accuracy == doctest::Approx(want.accuracy).epsilon(1e-10));
        CHECK(rep.npv == doctest::Approx(want.npv).epsilon(1e-10));
        CHECK(rep.precision == doctest::Approx(want.precision).epsilon(1e-10));
        CHECK(rep.specificity == doctest::Approx(want.specificity).epsilon(1e-10));
        CHECK(rep.recall == doctest::Approx(want.recall).epsilon(1e-10));
        CHECK(rep.f1 == doctest::Approx(want.f1).epsilon(1e-10));
        CHECK(rep.aunp == doctest::Approx(want.aunp).epsilon(1e-10));
        CHECK(rep.kappa == doctest::Approx(want.kappa).epsilon(1e-10));
        CHECK(rep.mcc == doctest::Approx(want.mcc).epsilon(1e-10));
        CHECK(rep.g_measure == doctest::Approx(want.g_measure).epsilon(1e-10));
    }
}

TEST_CASE("metric ranges and inequalities hold on random matrices") {
    Rng rng(8);
    for (int trial = 0; trial < 60; ++trial) {
        const auto cm = random_cm(rng, 2 + rng.below(4));
        const auto rep = macro_metrics(cm);
        for (const auto& m : rep.per_class) {
            for (double v : {m.precision, m.recall, m.specificity, m.npv})
                CHECK((v >= 0.0 && v <= 1.0));
            CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
            CHECK(m.g <= std::max(m.recall, m.specificity) + 1e-12);
        }
        CHECK((rep.kappa >= -1.0 - 1e-12 && rep.kappa <= 1.0 + 1e-12));
        CHECK((rep.mcc >= -1.0 - 1e-12 && rep.mcc <= 1.0 + 1e-12));
    }
}

TEST_CASE("scaling all counts by an integer leaves every metric unchanged") {
    Rng rng(9);
    const auto cm = random_cm(rng, 3);
    ConfusionMatrix scaled = cm;
    for (auto& v : scaled.counts) v *= 7;
    const auto a = macro_metrics(cm);
    const auto b = macro_metrics(scaled);
    const auto va = a.scalar_values(), vb = b.scalar_values();
    for (std::size_t i = 0; i < va.size(); ++i)
        CHECK(va[i] == doctest::Approx(vb[i]).epsilon(1e-12));
}

TEST_CASE("degenerate zero-denominator cases contribute zero and flag") {
    // Class 2 never appears and is never predicted.
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 4;
    cm.at(1, 1) = 4;
    const auto rep = macro_metrics(cm);
    CHECK(rep.per_class[2].precision == 0.0);
    CHECK(rep.per_class[2].recall == 0.0);
    CHECK(!rep.degenerate.empty());
    CHECK(std::find(rep.degenerate.begin(), rep.degenerate.end(), "precision[2]") !=
          rep.degenerate.end());
    CHECK(std::find(rep.degenerate.begin(), rep.degenerate.end(), "recall[2]") !=
          rep.degenerate.end());

    ConfusionMatrix empty(2);
    CHECK_THROWS_AS(macro_metrics(empty), std::invalid_argument);
}

TEST_CASE("permuting sample order leaves metrics unchanged") {
    Rng rng(10);
    std::vector<int> labels(200), preds(200);
    for (auto& l : labels) l = static_cast<int>(rng.below(3));
    for (auto& p : preds) p = static_cast<int>(rng.below(3));
    const auto a = macro_metrics(confusion(labels, preds, 3));
    std::vector<std::size_t> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 199; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<int> labels2(200), preds2(200);
    for (std::size_t i = 0; i < 200; ++i) {
        labels2[i] = labels[perm[i]];
        preds2[i] = preds[perm[i]];
    }
    const auto b = macro_metrics(confusion(labels2, preds2, 3));
    CHECK(a.scalar_values() == b.scalar_values());
}

TEST_CASE("pr curve on the worked 4-sample case") {
    const std::vector<int> labels = {1, 0, 1, 0};
    const std::vector<double> scores = {0.9, 0.8, 0.7, 0.1};
    const auto curve = pr_curve(labels, scores, 1);
    CHECK(curve.ap == doctest::Approx(ap_oracle(labels, scores, 1)).epsilon(1e-12));
    // Thresholds 0.9, 0.8, 0.7, 0.1 -> R,P pairs:
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[0].first == doctest::Approx(0.5));
    CHECK(curve.points[0].second == doctest::Approx(1.0));
    CHECK(curve.points[1].first == doctest::Approx(0.5));
    CHECK(curve.points[1].second == doctest::Approx(0.5));
    CHECK(curve.points[2].first == doctest::Approx(1.0));
    CHECK(curve.points[2].second == doctest::Approx(2.0 / 3.0));
    // AP = 0.5*1 + 0*... + 0.5*(2/3) = 0.8333...
    CHECK(curve.ap == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("perfect ranking gives AP 1; random scores approach prevalence") {
    const std::vector<int> labels = {1, 1, 1, 0, 0, 0, 0};
    const std::vector<double> scores = {0.9, 0.8, 0.7, 0.4, 0.3, 0.2, 0.1};
    CHECK(pr_curve(labels, scores, 1).ap == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(11);
    const std::size_t n = 10000;
    std::vector<int> big_labels(n);
    std::vector<double> big_scores(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        big_labels[i] = rng.uniform() < 0.3 ? 1 : 0;
        pos += big_labels[i];
        big_scores[i] = rng.uniform();
    }
    const double prevalence = static_cast<double>(pos) / static_cast<double>(n);
    CHECK(std::abs(pr_curve(big_labels, big_scores, 1).ap - prevalence) < 0.05);
}

TEST_CASE("AP equals exhaustive enumeration on small datasets with ties") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(19);
        std::vector<int> labels(n);
        std::vector<double> scores(n);
        bool has_pos = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng.below(2));
            has_pos |= labels[i] == 1;
            // Coarse grid of scores forces plenty of ties.
            scores[i] = static_cast<double>(rng.below(5)) / 4.0;
        }
        if (!has_pos) labels[0] = 1;
        CHECK(pr_curve(labels, scores, 1).ap ==
              doctest::Approx(ap_oracle(labels, scores, 1)).epsilon(1e-12));
    }
}

TEST_CASE("pr curve for an absent class is an error") {
    CHECK_THROWS_AS(pr_curve({0, 0, 0}, {0.5, 0.2, 0.9}, 1), std::invalid_argument);
}

TEST_CASE("aunp curve mode: perfect separation scores 1") {
    // Positives all above negatives for both classes -> NPV 1 at every cut
    // after the first, recall sweeps 0..1.
    const std::vector<int> labels = {0, 0, 1, 1};
    const std::vector<std::vector<double>> scores = {{0.9, 0.8, 0.1, 0.2},
                                                     {0.1, 0.2, 0.9, 0.8}};
    CHECK(aunp_curve(labels, scores) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("report json is canonical and carries the ten paper metrics") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 80;
    cm.at(0, 1) = 3;
    cm.at(1, 1) = 10;
    cm.at(1, 2) = 2;
    cm.at(2, 2) = 5;
    auto rep = macro_metrics(cm);
    const std::string text = report_to_json(rep);
    const auto j = nlohmann::json::parse(text);
    for (const auto& name : kMetricNames) CHECK(j.contains(name));
    CHECK(j["accuracy"].get<double>() == rep.accuracy);
    CHECK(j["mcc"].get<double>() == rep.mcc);
    CHECK(j["confusion_matrix"][0][0].get<int64_t>() == 80);

    // Keys sorted lexicographically (nlohmann object iteration order).
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(std::is_sorted(keys.begin(), keys.end()));

    const std::string path =
        (std::filesystem::temp_directory_path() / "mktcn_report.json").string();
    report_json(rep, path);
    std::ifstream in(path);
    const auto back = nlohmann::json::parse(in);
    CHECK(back == j);
    std::filesystem::remove(path);
}

TEST_CASE("radar area of all-ones metrics equals the regular 10-gon") {
    const double area = radar_area(std::vector<double>(10, 1.0));
    CHECK(area == doctest::Approx(5.0 * std::sin(2.0 * 3.14159265358979323846 / 10.0))
                      .epsilon(1e-12));
    CHECK(area == doctest::Approx(2.938926).epsilon(1e-6));
    // Negative values clamp to zero rather than flipping the polygon.
    CHECK(radar_area({1.0, -0.5, 1.0}) == doctest::Approx(radar_area({1.0, 0.0, 1.0})));
}
