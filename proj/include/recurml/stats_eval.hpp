#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recurml/feature_matrix.hpp"

namespace recurml::stats {

struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SplitPlan {
    uint64_t seed = 0;
    // Two-way split: 0 = train, 1 = heldout. K-fold: fold id per row.
    std::vector<int> assignment;
};

/// Per-class shuffle, largest-remainder proportional allocation to the
/// train side.
SplitPlan stratified_split(const std::vector<int>& labels, double ratio,
                           uint64_t seed);

/// Stratified k folds; per-fold positive counts within +-1 of n_pos/k.
SplitPlan stratified_kfold(const std::vector<int>& labels, int k, uint64_t seed);

struct RocPoint {
    double fpr;
    double tpr;
};

/// Mann-Whitney AUC with midranks; ties contribute 1/2.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Thresholds at every distinct score, descending; trapezoidal area over the
/// points equals auc().
std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

double trapezoid_area(const std::vector<RocPoint>& points);

enum class TestKind { students_t_two_sample, chi_squared_independence, cohens_kappa };

inline constexpr double kPValueFloor = 2.2e-16;

struct TestResult {
    TestKind kind = TestKind::students_t_two_sample;
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    bool degenerate = false;
    /// p formatted with the "< 2.2e-16" floor convention.
    std::string p_string() const;
};

/// Pooled-variance two-sided Student's t. Welch available behind a flag.
TestResult t_test_two_sample(const std::vector<double>& a,
                             const std::vector<double>& b, bool welch = false);

/// No continuity correction; df = (r-1)(c-1).
TestResult chi2_independence(const std::vector<std::vector<double>>& table);

TestResult cohens_kappa_confusion(const std::vector<std::vector<double>>& confusion);
TestResult cohens_kappa(const std::vector<std::string>& annotations_a,
                        const std::vector<std::string>& annotations_b);

struct ReplicateResult {
    int replicate = 0;
    uint64_t seed = 0;
    double auc_pooled = 0.0;              // AUC over pooled held-out scores
    std::vector<double> fold_aucs;        // per-fold AUCs (informational)
    std::vector<RocPoint> roc;            // pooled ROC for the replicate
};

struct EvalReport {
    std::string variant;
    std::map<std::string, int> variable_counts;
    std::vector<ReplicateResult> replicates;
    double mean_auc = 0.0;
    double sd_auc = 0.0;
    /// Table-4 layout, e.g. "0.92 (0.01)".
    std::string mean_sd_string() const;
};

/// Scores the rows given by test indices using a pipeline fitted on the train
/// indices only. Implementations must be deterministic.
using FitScoreFn = std::function<std::vector<double>(
    const std::vector<int>& train_idx, const std::vector<int>& test_idx)>;

/// k-fold stratified CV replicated `replicates` times; replicate r uses seed
/// base_seed + r. Per-replicate AUC pools the held-out scores of all folds.
EvalReport repeated_cv(const std::vector<int>& labels, const FitScoreFn& fit_score,
                       int k, int replicates, uint64_t base_seed);

struct DescriptiveRow {
    std::string variable;
    std::string category;          // empty for continuous / header rows
    long total = 0;
    long recurrence = 0;
    long no_recurrence = 0;
    double pct_recurrence = 0.0;
    double pct_no_recurrence = 0.0;
    std::optional<TestResult> test;  // set on the variable's header row
    std::string note;
};

}  // namespace recurml::stats

namespace recurml::clinical {
struct PatientRecord;
}

namespace recurml::stats {

/// Recurrence vs non-recurrence comparison per Table-2 variable: t-test for
/// age, chi-squared for categoricals. Variables with a single observed
/// category are skipped with a note.
std::vector<DescriptiveRow> descriptive_table(
    const std::vector<clinical::PatientRecord>& records,
    bool only_significant = false, double alpha = 0.05);

void write_descriptive_tsv(const std::vector<DescriptiveRow>& rows,
                           std::ostream& out);

}  // namespace recurml::stats
