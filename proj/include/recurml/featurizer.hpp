#pragma once

#include <map>
#include <string>
#include <vector>

#include "recurml/clinical.hpp"
#include "recurml/feature_matrix.hpp"

namespace recurml::feat {

enum class Variant {
    filtered_plus_clinical,
    full_concepts,
    filtered_concepts,
    clinical_only,
    bag_of_words,
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct VariantConfig {
    Variant variant = Variant::filtered_plus_clinical;
    double chi2_keep_fraction = 0.05;  // applies to full_concepts / bag_of_words
};

using Counts = std::map<std::string, int>;

/// TF-IDF with smooth idf ln((1+N)/(1+df)) + 1, raw-count tf and L2 row
/// normalization. Vocabulary and idf come from the fit set only.
class TfidfVectorizer {
public:
    FeatureMatrix fit_transform(const std::vector<std::string>& row_ids,
                                const std::vector<Counts>& docs);
    FeatureMatrix transform(const std::vector<std::string>& row_ids,
                            const std::vector<Counts>& docs) const;
    bool fitted() const { return fitted_; }
    const std::vector<std::string>& vocabulary() const { return vocab_; }
    double idf(const std::string& token) const;

private:
    bool fitted_ = false;
    std::vector<std::string> vocab_;  // sorted
    std::map<std::string, int> vocab_index_;
    std::vector<double> idf_;
};

/// Per-column chi-square score for non-negative features: observed per-class
/// column sums against label-proportional expectations.
std::vector<double> chi2_scores(const FeatureMatrix& matrix);

/// Columns kept by rank: statistic descending, ties by name ascending,
/// top ceil(keep_fraction * n_cols).
std::vector<int> chi2_selected_columns(const FeatureMatrix& matrix,
                                       double keep_fraction);

FeatureMatrix chi2_select(const FeatureMatrix& matrix, double keep_fraction);

/// Concept count columns, one per dictionary CUI in sorted order,
/// zero-filled where a patient has no mentions.
FeatureMatrix concept_matrix(const std::vector<std::string>& row_ids,
                             const std::vector<Counts>& concept_counts,
                             const std::vector<std::string>& cui_columns,
                             int variable_count);

FeatureMatrix clinical_matrix(const std::vector<std::string>& row_ids,
                              const std::vector<clinical::PatientRecord>& records,
                              const clinical::ClinicalEncoder& encoder);

}  // namespace recurml::feat
