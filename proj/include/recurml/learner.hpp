#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recurml/feature_matrix.hpp"

namespace recurml::svm {

struct TrainOptions {
    double C = 1.0;
    double tol = 1e-4;
    int max_epochs = 1000;
    uint64_t seed = 0;
};

struct TrainedModel {
    std::vector<feat::Column> columns;
    std::vector<double> weights;  // per column
    double bias = 0.0;            // weight of the augmented constant feature
    double C = 1.0;
    double tol = 1e-4;
    uint64_t seed = 0;
    bool calibrated = false;
    double platt_a = 0.0;
    double platt_b = 0.0;

    double decision(const std::vector<std::pair<int, double>>& row) const;
    double predict_proba(const std::vector<std::pair<int, double>>& row) const;

    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);
};

struct TrainDiagnostics {
    int epochs = 0;
    double final_violation = 0.0;
    std::vector<double> primal_objective_per_epoch;
    std::vector<double> alpha;  // final dual variables
};

struct LearnerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// L2-regularized hinge-loss linear SVM by dual coordinate descent with a
/// regularized bias carried as an augmented constant feature. Deterministic
/// given the seed.
TrainedModel train(const feat::FeatureMatrix& matrix, const TrainOptions& opts,
                   TrainDiagnostics* diag = nullptr);

double primal_objective(const feat::FeatureMatrix& matrix,
                        const TrainedModel& model);

/// Sigmoid fit P(y=+1|f) = 1/(1+exp(a f + b)) with the regularized
/// maximum-likelihood targets, by Newton iteration.
std::pair<double, double> fit_platt(const std::vector<double>& decision_values,
                                    const std::vector<int>& labels);

/// 3-fold cross-fitted decision values on the training matrix feed the
/// sigmoid; the returned model carries the fitted (a, b).
TrainedModel calibrate(TrainedModel model, const feat::FeatureMatrix& matrix,
                       const TrainOptions& opts);

struct RankedCoefficient {
    std::string name;
    feat::ColumnSource source;
    double coefficient;
};

std::vector<RankedCoefficient> rank_coefficients(const TrainedModel& model,
                                                 size_t top_k);

}  // namespace recurml::svm
