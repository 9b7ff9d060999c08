#pragma once

#include <map>
#include <string>
#include <vector>

#include "recurml/clinical.hpp"
#include "recurml/concept_tagger.hpp"
#include "recurml/corpus.hpp"
#include "recurml/featurizer.hpp"

namespace recurml::pipeline {

struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreprocessOptions {
    bool apply_cue_filter = true;   // drop sentences with contextual cues
    bool apply_negation = true;     // exclude NegEx-negated mentions
    util::Date censor_date{2016, 5, 1};
};

struct PreprocessReport {
    long notes_in = 0;
    long notes_kept = 0;
    long rejected_rows = 0;
    corpus::FilterReport filter;
    long sentences_total = 0;
    long sentences_cue_dropped = 0;
};

/// Row-aligned per-patient inputs for every feature variant.
struct PatientDataset {
    std::vector<std::string> patient_ids;
    std::vector<int> labels;  // +1/-1 (0 when unlabeled)
    std::vector<clinical::PatientRecord> records;
    std::vector<feat::Counts> concept_counts;       // dictionary, score >= 1
    std::vector<feat::Counts> full_concept_counts;  // all non-negated mentions
    std::vector<feat::Counts> token_counts;         // surviving-sentence tokens
    std::vector<std::string> dictionary_cuis;       // sorted

    size_t size() const { return patient_ids.size(); }
    PatientDataset select(const std::vector<int>& indices) const;
};

/// Run ingest -> filter_notes -> segment -> cue filter -> NegEx -> tag ->
/// aggregate against the records' diagnosis dates, then align per patient.
/// Patients without notes get empty count maps.
PatientDataset build_dataset(const std::vector<clinical::PatientRecord>& records,
                             const corpus::Corpus& notes,
                             const std::vector<corpus::ContextCue>& cues,
                             const std::vector<tagger::LexiconEntry>& lexicon,
                             const PreprocessOptions& options,
                             PreprocessReport* report = nullptr);

/// Fit/transform assembly for one Table-4 feature configuration. All
/// fit-dependent state (encoder, TF-IDF, chi-square selection) comes from the
/// fit rows only.
class VariantPipeline {
public:
    explicit VariantPipeline(feat::VariantConfig config) : config_(config) {}

    void fit(const PatientDataset& dataset, const std::vector<int>& train_idx);
    feat::FeatureMatrix transform(const PatientDataset& dataset,
                                  const std::vector<int>& indices) const;
    feat::FeatureMatrix fit_transform(const PatientDataset& dataset,
                                      const std::vector<int>& train_idx);

    /// Table-4 "Number of Features" figure: variables, not expanded columns.
    int variable_count() const;

private:
    feat::VariantConfig config_;
    bool fitted_ = false;
    clinical::ClinicalEncoder encoder_;
    feat::TfidfVectorizer tfidf_;
    std::vector<std::string> full_cui_columns_;  // from fit rows
    std::vector<int> selected_columns_;          // chi-square survivors
    int variable_count_ = 0;

    feat::FeatureMatrix assemble_raw(const PatientDataset& dataset,
                                     const std::vector<int>& indices) const;
};

std::vector<int> all_indices(size_t n);

}  // namespace recurml::pipeline
