#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "recurml/clinical.hpp"
#include "recurml/stats_eval.hpp"

using namespace recurml;

namespace {

/// Pair-counting AUC oracle: (concordant + half the ties) / (n+ * n-).
double auc_brute(const std::vector<double>& scores,
                 const std::vector<int>& labels) {
    double num = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != -1) continue;
            ++pairs;
            if (scores[i] > scores[j]) num += 1.0;
            else if (scores[i] == scores[j]) num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

std::vector<int> class_counts(const stats::SplitPlan& plan,
                              const std::vector<int>& labels, int side,
                              int wanted_label) {
    std::vector<int> idx;
    for (size_t i = 0; i < labels.size(); ++i)
        if (plan.assignment[i] == side && labels[i] == wanted_label)
            idx.push_back(static_cast<int>(i));
    return idx;
}

}  // namespace

TEST_CASE("stratified split allocates per class with largest remainder") {
    std::vector<int> labels(10, -1);
    labels[0] = labels[5] = 1;
    auto plan = stats::stratified_split(labels, 0.5, 7);
    CHECK(class_counts(plan, labels, 0, 1).size() == 1);
    CHECK(class_counts(plan, labels, 1, 1).size() == 1);
    CHECK(class_counts(plan, labels, 0, -1).size() == 4);
}

TEST_CASE("stratified split on the published cohort shape") {
    std::vector<int> labels(1995, -1);
    for (int i = 0; i < 193; ++i) labels[i] = 1;
    auto plan = stats::stratified_split(labels, 0.7, 42);
    long train = std::count(plan.assignment.begin(), plan.assignment.end(), 0);
    long held = std::count(plan.assignment.begin(), plan.assignment.end(), 1);
    CHECK(train == 1396);
    CHECK(held == 599);
    // proportional per-class allocation: 0.7 * 193 = 135.1 -> 135 train
    CHECK(class_counts(plan, labels, 0, 1).size() == 135);
    CHECK(class_counts(plan, labels, 1, 1).size() == 58);
}

TEST_CASE("stratified split rejects bad inputs") {
    std::vector<int> labels{1, -1, -1};
    CHECK_THROWS_AS(stats::stratified_split(labels, 0.5, 1), stats::StatsError);
    std::vector<int> ok{1, 1, -1, -1};
    CHECK_THROWS_AS(stats::stratified_split(ok, 1.0, 1), stats::StatsError);
    CHECK_THROWS_AS(stats::stratified_split(ok, 0.0, 1), stats::StatsError);
}

TEST_CASE("stratified split is deterministic per seed") {
    std::vector<int> labels(40, -1);
    for (int i = 0; i < 8; ++i) labels[i * 5] = 1;
    auto a = stats::stratified_split(labels, 0.7, 9);
    auto b = stats::stratified_split(labels, 0.7, 9);
    auto c = stats::stratified_split(labels, 0.7, 10);
    CHECK(a.assignment == b.assignment);
    CHECK(a.assignment != c.assignment);
}

TEST_CASE("stratified kfold keeps per-fold positives within one") {
    std::vector<int> labels(103, -1);
    for (int i = 0; i < 23; ++i) labels[i] = 1;
    auto plan = stats::stratified_kfold(labels, 5, 3);
    for (int f = 0; f < 5; ++f) {
        double pos = static_cast<double>(class_counts(plan, labels, f, 1).size());
        CHECK(std::abs(pos - 23.0 / 5.0) <= 1.0);
        long size = std::count(plan.assignment.begin(), plan.assignment.end(), f);
        CHECK(std::abs(static_cast<double>(size) - 103.0 / 5.0) <= 1.0);
    }
}

TEST_CASE("auc matches the published worked example") {
    CHECK(stats::auc({0.9, 0.8, 0.3, 0.2}, {1, -1, 1, -1}) ==
          doctest::Approx(0.75));
    CHECK(stats::auc({0.9, 0.8, 0.2, 0.1}, {1, 1, -1, -1}) == doctest::Approx(1.0));
    CHECK(stats::auc({0.5, 0.5, 0.5, 0.5}, {1, 1, -1, -1}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(stats::auc({0.1, 0.2}, {1, 1}), stats::StatsError);
}

TEST_CASE("auc equals pair counting and trapezoid area on random data") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        size_t n = 4 + rng() % 47;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng() % 10) / 4.0;  // forces ties
            labels[i] = i < n / 2 ? 1 : -1;
        }
        double a = stats::auc(scores, labels);
        CHECK(a == doctest::Approx(auc_brute(scores, labels)).epsilon(1e-12));
        double t = stats::trapezoid_area(stats::roc_points(scores, labels));
        CHECK(a == doctest::Approx(t).epsilon(1e-12));
    }
}

TEST_CASE("auc complement identity for tie-free scores") {
    std::mt19937_64 rng(5);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        scores.push_back(static_cast<double>(i) + 0.25);
        labels.push_back(rng() % 2 ? 1 : -1);
    }
    labels[0] = 1;
    labels[1] = -1;
    std::vector<double> neg(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) neg[i] = -scores[i];
    CHECK(stats::auc(scores, labels) + stats::auc(neg, labels) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roc endpoints and monotonicity") {
    auto pts = stats::roc_points({0.9, 0.1}, {1, -1});
    REQUIRE(pts.size() == 3);
    CHECK(pts.front().fpr == 0.0);
    CHECK(pts.front().tpr == 0.0);
    CHECK(pts[1].fpr == 0.0);
    CHECK(pts[1].tpr == 1.0);
    CHECK(pts.back().fpr == 1.0);
    CHECK(pts.back().tpr == 1.0);

    auto rev = stats::roc_points({0.1, 0.9}, {1, -1});
    CHECK(rev[1].fpr == 1.0);
    CHECK(rev[1].tpr == 0.0);

    std::mt19937_64 rng(3);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        scores.push_back(static_cast<double>(rng() % 12));
        labels.push_back(i % 3 == 0 ? 1 : -1);
    }
    auto curve = stats::roc_points(scores, labels);
    for (size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].fpr >= curve[i - 1].fpr);
        CHECK(curve[i].tpr >= curve[i - 1].tpr);
    }
}

TEST_CASE("t-test on identical samples gives p = 1") {
    auto r = stats::t_test_two_sample({1, 2, 3}, {1, 2, 3});
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(1.0));
    CHECK(r.df == doctest::Approx(4.0));
}

TEST_CASE("t-test separates distinct tight samples") {
    auto r = stats::t_test_two_sample({0.0, 1e-7, -1e-7, 0.0},
                                      {1.0, 1.0 + 1e-7, 1.0 - 1e-7, 1.0});
    CHECK(r.p_value < 1e-6);
}

TEST_CASE("t-test degenerate zero-variance cases") {
    auto same = stats::t_test_two_sample({2, 2, 2}, {2, 2, 2});
    CHECK(same.p_value == doctest::Approx(1.0));
    auto diff = stats::t_test_two_sample({0, 0, 0}, {1, 1, 1});
    CHECK(diff.degenerate);
    CHECK(diff.p_value == 0.0);
    CHECK(diff.p_string() == "< 2.2e-16");
}

TEST_CASE("welch flag changes the degrees of freedom") {
    std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> b{10, 30, 20};
    auto pooled = stats::t_test_two_sample(a, b, false);
    auto welch = stats::t_test_two_sample(a, b, true);
    CHECK(pooled.df == doctest::Approx(9.0));
    CHECK(welch.df < 9.0);
}

TEST_CASE("chi-squared worked example [[20,10],[10,20]]") {
    auto r = stats::chi2_independence({{20, 10}, {10, 20}});
    CHECK(r.statistic == doctest::Approx(20.0 / 3.0).epsilon(1e-9));
    CHECK(r.df == doctest::Approx(1.0));
    CHECK(r.p_value == doctest::Approx(0.0098).epsilon(0.02));
}

TEST_CASE("chi-squared degenerate and error cases") {
    auto same = stats::chi2_independence({{10, 20}, {20, 40}});
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK(same.p_value == doctest::Approx(1.0));
    CHECK_THROWS_AS(stats::chi2_independence({{0, 0}, {1, 2}}),
                    stats::StatsError);
}

TEST_CASE("chi-squared is permutation symmetric") {
    auto a = stats::chi2_independence({{98, 95}, {59, 1743}});
    auto b = stats::chi2_independence({{59, 1743}, {98, 95}});
    auto c = stats::chi2_independence({{95, 98}, {1743, 59}});
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
    CHECK(a.statistic == doctest::Approx(c.statistic).epsilon(1e-12));
    CHECK(a.p_string() == "< 2.2e-16");
}

TEST_CASE("cohens kappa worked examples") {
    auto r = stats::cohens_kappa_confusion({{45, 5}, {5, 45}});
    CHECK(r.statistic == doctest::Approx(0.8));

    std::vector<std::string> same{"a", "b", "a", "c"};
    CHECK(stats::cohens_kappa(same, same).statistic == doctest::Approx(1.0));

    std::vector<std::string> constant{"x", "x", "x"};
    auto deg = stats::cohens_kappa(constant, constant);
    CHECK(deg.statistic == doctest::Approx(1.0));
    CHECK(deg.degenerate);
}

TEST_CASE("cohens kappa near zero for independent annotations") {
    std::mt19937_64 rng(123);
    std::vector<std::string> a, b;
    for (int i = 0; i < 10000; ++i) {
        a.push_back(rng() % 2 ? "y" : "n");
        b.push_back(rng() % 2 ? "y" : "n");
    }
    auto r = stats::cohens_kappa(a, b);
    CHECK(std::abs(r.statistic) < 0.05);
}

TEST_CASE("p_string floors tiny p-values") {
    stats::TestResult r;
    r.p_value = 1e-20;
    CHECK(r.p_string() == "< 2.2e-16");
    r.p_value = 0.034;
    CHECK(r.p_string().substr(0, 1) != "<");
}

TEST_CASE("repeated_cv on separable data reaches AUC 1") {
    std::vector<int> labels;
    std::vector<double> xs;
    for (int i = 0; i < 60; ++i) {
        labels.push_back(i < 20 ? 1 : -1);
        xs.push_back(labels.back() == 1 ? 1.0 + i * 0.01 : -1.0 - i * 0.01);
    }
    auto fit_score = [&](const std::vector<int>&, const std::vector<int>& test)
        -> std::vector<double> {
        std::vector<double> out;
        for (int idx : test) out.push_back(xs[idx]);
        return out;
    };
    auto report = stats::repeated_cv(labels, fit_score, 5, 3, 100);
    CHECK(report.mean_auc == doctest::Approx(1.0));
    CHECK(report.sd_auc == doctest::Approx(0.0));
    CHECK(report.replicates.size() == 3);
    CHECK(report.replicates[0].seed == 100);
    CHECK(report.replicates[2].seed == 102);
    for (const auto& rep : report.replicates)
        CHECK(rep.roc.back().tpr == doctest::Approx(1.0));
}

TEST_CASE("repeated_cv under the null stays near 0.5") {
    std::mt19937_64 rng(55);
    std::vector<int> labels;
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) {
        labels.push_back(i % 4 == 0 ? 1 : -1);
        xs.push_back(static_cast<double>(rng()) /
                     static_cast<double>(std::mt19937_64::max()));
    }
    auto fit_score = [&](const std::vector<int>&, const std::vector<int>& test)
        -> std::vector<double> {
        std::vector<double> out;
        for (int idx : test) out.push_back(xs[idx]);
        return out;
    };
    auto report = stats::repeated_cv(labels, fit_score, 5, 5, 7);
    CHECK(report.mean_auc > 0.45);
    CHECK(report.mean_auc < 0.55);
}

TEST_CASE("repeated_cv is deterministic and formats mean (sd)") {
    std::vector<int> labels;
    std::vector<double> xs;
    std::mt19937_64 rng(8);
    for (int i = 0; i < 80; ++i) {
        labels.push_back(i % 5 == 0 ? 1 : -1);
        xs.push_back(static_cast<double>(rng() % 100) +
                     (labels.back() == 1 ? 30.0 : 0.0));
    }
    auto fit_score = [&](const std::vector<int>&, const std::vector<int>& test)
        -> std::vector<double> {
        std::vector<double> out;
        for (int idx : test) out.push_back(xs[idx]);
        return out;
    };
    auto a = stats::repeated_cv(labels, fit_score, 5, 4, 21);
    auto b = stats::repeated_cv(labels, fit_score, 5, 4, 21);
    REQUIRE(a.replicates.size() == b.replicates.size());
    for (size_t i = 0; i < a.replicates.size(); ++i)
        CHECK(a.replicates[i].auc_pooled == b.replicates[i].auc_pooled);
    CHECK(a.mean_sd_string() == b.mean_sd_string());

    stats::EvalReport fake;
    fake.mean_auc = 0.92;
    fake.sd_auc = 0.01;
    CHECK(fake.mean_sd_string() == "0.92 (0.01)");
}

TEST_CASE("repeated_cv errors when a fold has a single class") {
    std::vector<int> labels{1, 1, -1, -1, -1, -1, -1, -1, -1, -1};
    auto fit_score = [&](const std::vector<int>&, const std::vector<int>& test)
        -> std::vector<double> {
        return std::vector<double>(test.size(), 0.0);
    };
    CHECK_THROWS_AS(stats::repeated_cv(labels, fit_score, 5, 1, 0),
                    stats::StatsError);
}

TEST_CASE("descriptive table reports counts, percentages and tests") {
    std::vector<clinical::PatientRecord> records;
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
        clinical::PatientRecord r;
        r.patient_id = "p" + std::to_string(i);
        bool recur = i < 40;
        r.label = recur ? clinical::Label::DistantRecurrence
                        : clinical::Label::NoDistantRecurrence;
        r.age_of_diagnosis = recur ? 60.0 + static_cast<double>(rng() % 10)
                                   : 50.0 + static_cast<double>(rng() % 10);
        r.nodal_positivity = (rng() % 100 < (recur ? 55u : 25u)) ? "Positive"
                                                                 : "Negative";
        r.race = "White";  // constant -> skipped
        r.diagnosis_date = {2010, 1, 1};
        records.push_back(r);
    }
    auto rows = stats::descriptive_table(records);
    bool saw_age = false, saw_nodal = false, saw_race = false;
    for (const auto& row : rows) {
        if (row.variable == "age_of_diagnosis") {
            saw_age = true;
            REQUIRE(row.test.has_value());
            CHECK(row.test->kind == stats::TestKind::students_t_two_sample);
            CHECK(row.test->p_value < 0.05);
        }
        if (row.variable == "nodal_positivity" && row.test.has_value()) {
            saw_nodal = true;
            CHECK(row.test->kind == stats::TestKind::chi_squared_independence);
        }
        if (row.variable == "nodal_positivity" && row.category == "Positive") {
            CHECK(row.recurrence + row.no_recurrence == row.total);
            CHECK(row.pct_recurrence ==
                  doctest::Approx(100.0 * row.recurrence / 40.0));
        }
        if (row.variable == "race" && row.note.empty()) saw_race = true;
    }
    CHECK(saw_age);
    CHECK(saw_nodal);
    CHECK_FALSE(saw_race);  // single observed category is skipped

    auto sig = stats::descriptive_table(records, true);
    for (const auto& row : sig)
        if (row.test.has_value()) CHECK(row.test->p_value < 0.05);

    std::ostringstream out;
    stats::write_descriptive_tsv(rows, out);
    CHECK(out.str().find("age_of_diagnosis") != std::string::npos);
}
