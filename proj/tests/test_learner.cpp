#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "recurml/learner.hpp"

using namespace recurml;
using feat::FeatureMatrix;

namespace {

FeatureMatrix dense_matrix(const std::vector<std::vector<double>>& values,
                           const std::vector<int>& labels) {
    FeatureMatrix m;
    for (size_t i = 0; i < values.size(); ++i)
        m.row_ids.push_back("p" + std::to_string(i));
    size_t cols = values.empty() ? 0 : values[0].size();
    for (size_t j = 0; j < cols; ++j)
        m.columns.push_back({"f" + std::to_string(j), feat::ColumnSource::concept_col});
    for (const auto& row : values) {
        std::vector<std::pair<int, double>> sparse;
        for (size_t j = 0; j < row.size(); ++j)
            if (row[j] != 0.0) sparse.emplace_back(static_cast<int>(j), row[j]);
        m.rows.push_back(std::move(sparse));
    }
    m.labels = labels;
    m.check();
    return m;
}

FeatureMatrix random_matrix(std::mt19937_64& rng, size_t rows, size_t cols) {
    std::vector<std::vector<double>> values(rows, std::vector<double>(cols, 0.0));
    std::vector<int> labels(rows);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (size_t i = 0; i < rows; ++i) {
        labels[i] = (i % 2 == 0) ? 1 : -1;
        for (size_t j = 0; j < cols; ++j)
            values[i][j] = gauss(rng) + (j == 0 ? 0.8 * labels[i] : 0.0);
    }
    return dense_matrix(values, labels);
}

}  // namespace

TEST_CASE("symmetric 1-D toy converges to w=1, b=0") {
    auto m = dense_matrix({{-1.0}, {1.0}}, {-1, 1});
    svm::TrainOptions opts;
    auto model = svm::train(m, opts);
    CHECK(model.weights[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(model.decision({{0, 0.5}}) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(model.decision({}) == doctest::Approx(model.bias));
}

TEST_CASE("duplicating rows with halved C leaves the model unchanged") {
    auto m = dense_matrix({{-1.2}, {-0.3}, {0.4}, {1.5}}, {-1, -1, 1, 1});
    auto dup = dense_matrix(
        {{-1.2}, {-0.3}, {0.4}, {1.5}, {-1.2}, {-0.3}, {0.4}, {1.5}},
        {-1, -1, 1, 1, -1, -1, 1, 1});
    svm::TrainOptions opts;
    opts.tol = 1e-8;
    auto a = svm::train(m, opts);
    opts.C = 0.5;
    auto b = svm::train(dup, opts);
    CHECK(a.weights[0] == doctest::Approx(b.weights[0]).epsilon(1e-6));
    CHECK(a.bias == doctest::Approx(b.bias).epsilon(1e-6));
}

TEST_CASE("all-zero feature column keeps weight zero") {
    auto m = dense_matrix({{-1.0, 0.0}, {1.0, 0.0}}, {-1, 1});
    auto model = svm::train(m, svm::TrainOptions{});
    CHECK(model.weights[1] == 0.0);
}

TEST_CASE("single-class or non-finite input errors") {
    auto single = dense_matrix({{1.0}, {2.0}}, {1, 1});
    CHECK_THROWS_AS(svm::train(single, svm::TrainOptions{}), svm::LearnerError);
    auto bad = dense_matrix({{-1.0}, {1.0}}, {-1, 1});
    bad.rows[0][0].second = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(svm::train(bad, svm::TrainOptions{}), svm::LearnerError);
}

TEST_CASE("training is deterministic and satisfies KKT at convergence") {
    std::mt19937_64 rng(11);
    auto m = random_matrix(rng, 60, 5);
    svm::TrainOptions opts;
    opts.seed = 3;
    svm::TrainDiagnostics d1, d2;
    auto a = svm::train(m, opts, &d1);
    auto b = svm::train(m, opts, &d2);
    CHECK(a.weights == b.weights);  // bit-identical
    CHECK(a.bias == b.bias);
    CHECK(d1.final_violation <= 10.0 * opts.tol);
    for (double alpha : d1.alpha) {
        CHECK(alpha >= 0.0);
        CHECK(alpha <= opts.C);
    }
}

TEST_CASE("primal objective is non-increasing across epochs") {
    std::mt19937_64 rng(29);
    auto m = random_matrix(rng, 80, 6);
    svm::TrainOptions opts;
    opts.seed = 17;
    svm::TrainDiagnostics diag;
    svm::train(m, opts, &diag);
    const auto& obj = diag.primal_objective_per_epoch;
    REQUIRE(obj.size() >= 2);
    for (size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1] + 1e-9);
}

TEST_CASE("scale covariance on a separable toy") {
    auto m = dense_matrix({{-1.0}, {1.0}}, {-1, 1});
    auto scaled = dense_matrix({{-4.0}, {4.0}}, {-1, 1});
    svm::TrainOptions opts;
    opts.tol = 1e-8;
    auto a = svm::train(m, opts);
    auto b = svm::train(scaled, opts);
    CHECK(b.weights[0] == doctest::Approx(a.weights[0] / 4.0).epsilon(1e-4));
}

TEST_CASE("platt fit recovers symmetry") {
    auto [pa, pb] = svm::fit_platt({-2.0, -1.0, 1.0, 2.0}, {-1, -1, 1, 1});
    CHECK(pb == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(pa < 0.0);  // probability increases with the margin
}

TEST_CASE("platt degenerate all-equal values hit the mean target") {
    std::vector<double> values(10, 0.7);
    std::vector<int> labels{1, 1, 1, -1, -1, -1, -1, -1, -1, -1};
    auto [pa, pb] = svm::fit_platt(values, labels);
    CHECK(pa == 0.0);
    double p = 1.0 / (1.0 + std::exp(pb));
    // mean of regularized targets: (3*(4/5) + 7*(1/9)) / 10
    CHECK(p == doctest::Approx((3.0 * 0.8 + 7.0 / 9.0) / 10.0).epsilon(1e-6));
}

TEST_CASE("predict_proba is monotone in the margin and needs calibration") {
    std::mt19937_64 rng(5);
    auto m = random_matrix(rng, 50, 3);
    svm::TrainOptions opts;
    auto raw = svm::train(m, opts);
    CHECK_THROWS_AS(raw.predict_proba({{0, 1.0}}), svm::LearnerError);
    auto model = svm::calibrate(raw, m, opts);
    REQUIRE(model.calibrated);
    double p_low = model.predict_proba({{0, -2.0}});
    double p_mid = model.predict_proba({{0, 0.5}});
    double p_high = model.predict_proba({{0, 2.0}});
    CHECK(p_low < p_mid);
    CHECK(p_mid < p_high);
    CHECK(p_low >= 0.0);
    CHECK(p_high <= 1.0);
    // sigmoid midpoint
    double mid_margin = -model.platt_b / model.platt_a;
    double x = (mid_margin - model.bias) / model.weights[0];
    CHECK(model.predict_proba({{0, x}}) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("model save/load reproduces decisions bit-exactly") {
    std::mt19937_64 rng(42);
    auto m = random_matrix(rng, 40, 4);
    svm::TrainOptions opts;
    auto model = svm::calibrate(svm::train(m, opts), m, opts);
    std::string path = "test_model_roundtrip.json";
    model.save(path);
    auto loaded = svm::TrainedModel::load(path);
    std::remove(path.c_str());
    CHECK(loaded.weights == model.weights);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.platt_a == model.platt_a);
    CHECK(loaded.platt_b == model.platt_b);
    for (size_t i = 0; i < m.n_rows(); ++i)
        CHECK(loaded.decision(m.rows[i]) == model.decision(m.rows[i]));
}

TEST_CASE("rank_coefficients sorts descending with name tiebreak") {
    svm::TrainedModel model;
    model.columns = {{"a", feat::ColumnSource::concept_col},
                     {"b", feat::ColumnSource::concept_col},
                     {"c", feat::ColumnSource::clinical_col}};
    model.weights = {0.2, 0.9, -0.1};
    auto full = svm::rank_coefficients(model, 3);
    REQUIRE(full.size() == 3);
    CHECK(full[0].name == "b");
    CHECK(full[1].name == "a");
    CHECK(full[2].name == "c");
    auto top1 = svm::rank_coefficients(model, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].coefficient == doctest::Approx(0.9));

    model.weights = {0.5, 0.5, 0.5};
    auto tied = svm::rank_coefficients(model, 3);
    CHECK(tied[0].name == "a");
    CHECK(tied[1].name == "b");
    CHECK(tied[2].name == "c");
}

TEST_CASE("calibration leaves the separating hyperplane untouched") {
    std::mt19937_64 rng(9);
    auto m = random_matrix(rng, 50, 3);
    svm::TrainOptions opts;
    auto raw = svm::train(m, opts);
    auto cal = svm::calibrate(raw, m, opts);
    CHECK(cal.weights == raw.weights);
    CHECK(cal.bias == raw.bias);
}
