#include "recurml/pipeline.hpp"

#include <algorithm>

namespace recurml::pipeline {

PatientDataset PatientDataset::select(const std::vector<int>& indices) const {
    PatientDataset out;
    out.dictionary_cuis = dictionary_cuis;
    for (int i : indices) {
        out.patient_ids.push_back(patient_ids.at(i));
        out.labels.push_back(labels.at(i));
        out.records.push_back(records.at(i));
        out.concept_counts.push_back(concept_counts.at(i));
        out.full_concept_counts.push_back(full_concept_counts.at(i));
        out.token_counts.push_back(token_counts.at(i));
    }
    return out;
}

PatientDataset build_dataset(const std::vector<clinical::PatientRecord>& records,
                             const corpus::Corpus& notes,
                             const std::vector<corpus::ContextCue>& cues,
                             const std::vector<tagger::LexiconEntry>& lexicon,
                             const PreprocessOptions& options,
                             PreprocessReport* report) {
    PreprocessReport local;
    local.notes_in = static_cast<long>(notes.notes.size());
    local.rejected_rows = notes.rejected_rows;

    std::map<std::string, util::Date> diagnosis_dates;
    std::map<std::string, size_t> patient_index;
    for (size_t i = 0; i < records.size(); ++i) {
        diagnosis_dates[records[i].patient_id] = records[i].diagnosis_date;
        patient_index[records[i].patient_id] = i;
    }

    auto filtered =
        corpus::filter_notes(notes, diagnosis_dates, options.censor_date,
                             &local.filter);
    local.notes_kept = static_cast<long>(filtered.notes.size());

    auto dictionary = tagger::dictionary_cuis(lexicon);

    PatientDataset out;
    out.patient_ids.reserve(records.size());
    for (const auto& r : records) {
        out.patient_ids.push_back(r.patient_id);
        out.labels.push_back(!r.label ? 0
                             : *r.label == clinical::Label::DistantRecurrence ? 1
                                                                              : -1);
        out.records.push_back(r);
    }
    out.concept_counts.resize(records.size());
    out.full_concept_counts.resize(records.size());
    out.token_counts.resize(records.size());
    out.dictionary_cuis.assign(dictionary.begin(), dictionary.end());

    for (const auto& note : filtered.notes) {
        size_t pi = patient_index.at(note.patient_id);
        auto sentences = corpus::segment(note);
        local.sentences_total += static_cast<long>(sentences.size());

        std::vector<corpus::Sentence> surviving;
        if (options.apply_cue_filter) {
            auto cue_result = corpus::drop_cued_sentences(sentences, cues);
            local.sentences_cue_dropped += cue_result.dropped;
            surviving = std::move(cue_result.kept);
        } else {
            surviving = std::move(sentences);
        }

        for (const auto& sentence : surviving) {
            for (const auto& tok : sentence.tokens)
                ++out.token_counts[pi][tok];
            std::vector<bool> mask(sentence.tokens.size(), false);
            if (options.apply_negation) mask = corpus::negex_scope(sentence, cues);
            auto mentions = tagger::tag(sentence, mask, lexicon);
            for (const auto& m : mentions) {
                if (m.negated) continue;
                ++out.full_concept_counts[pi][m.cui];
                if (m.score >= 1.0 && dictionary.count(m.cui))
                    ++out.concept_counts[pi][m.cui];
            }
        }
    }
    if (report) *report = local;
    return out;
}

std::vector<int> all_indices(size_t n) {
    std::vector<int> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i);
    return out;
}

namespace {

std::vector<std::string> rows_of(const PatientDataset& dataset,
                                 const std::vector<int>& indices) {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(dataset.patient_ids.at(i));
    return out;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& items, const std::vector<int>& indices) {
    std::vector<T> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(items.at(i));
    return out;
}

void attach_labels(feat::FeatureMatrix& matrix, const PatientDataset& dataset,
                   const std::vector<int>& indices) {
    bool any = false;
    for (int i : indices)
        if (dataset.labels.at(i) != 0) any = true;
    if (!any) return;
    for (int i : indices) matrix.labels.push_back(dataset.labels.at(i));
}

}  // namespace

feat::FeatureMatrix VariantPipeline::assemble_raw(
    const PatientDataset& dataset, const std::vector<int>& indices) const {
    auto ids = rows_of(dataset, indices);
    switch (config_.variant) {
        case feat::Variant::filtered_plus_clinical: {
            auto concepts = feat::concept_matrix(
                ids, gather(dataset.concept_counts, indices),
                dataset.dictionary_cuis,
                static_cast<int>(dataset.dictionary_cuis.size()));
            auto clin = feat::clinical_matrix(
                ids, gather(dataset.records, indices), encoder_);
            return feat::FeatureMatrix::hcat(concepts, clin);
        }
        case feat::Variant::filtered_concepts:
            return feat::concept_matrix(
                ids, gather(dataset.concept_counts, indices),
                dataset.dictionary_cuis,
                static_cast<int>(dataset.dictionary_cuis.size()));
        case feat::Variant::clinical_only:
            return feat::clinical_matrix(ids, gather(dataset.records, indices),
                                         encoder_);
        case feat::Variant::full_concepts:
            return feat::concept_matrix(
                ids, gather(dataset.full_concept_counts, indices),
                full_cui_columns_, static_cast<int>(full_cui_columns_.size()));
        case feat::Variant::bag_of_words:
            return tfidf_.transform(ids, gather(dataset.token_counts, indices));
    }
    throw PipelineError("unknown variant");
}

void VariantPipeline::fit(const PatientDataset& dataset,
                          const std::vector<int>& train_idx) {
    if (train_idx.empty()) throw PipelineError("fit: empty training set");
    selected_columns_.clear();

    bool needs_encoder = config_.variant == feat::Variant::filtered_plus_clinical ||
                         config_.variant == feat::Variant::clinical_only;
    if (needs_encoder) encoder_.fit(gather(dataset.records, train_idx));

    if (config_.variant == feat::Variant::full_concepts) {
        std::set<std::string> cuis;
        for (int i : train_idx)
            for (const auto& [cui, cnt] : dataset.full_concept_counts.at(i))
                cuis.insert(cui);
        full_cui_columns_.assign(cuis.begin(), cuis.end());
        if (full_cui_columns_.empty())
            throw PipelineError("fit: no concepts in the training rows");
    }
    if (config_.variant == feat::Variant::bag_of_words) {
        tfidf_.fit_transform(rows_of(dataset, train_idx),
                             gather(dataset.token_counts, train_idx));
    }
    fitted_ = true;

    bool needs_chi2 = config_.variant == feat::Variant::full_concepts ||
                      config_.variant == feat::Variant::bag_of_words;
    if (needs_chi2) {
        auto matrix = assemble_raw(dataset, train_idx);
        attach_labels(matrix, dataset, train_idx);
        if (!matrix.has_labels())
            throw PipelineError("fit: chi-square selection requires labels");
        selected_columns_ =
            feat::chi2_selected_columns(matrix, config_.chi2_keep_fraction);
    }

    switch (config_.variant) {
        case feat::Variant::filtered_plus_clinical:
            variable_count_ = static_cast<int>(dataset.dictionary_cuis.size()) +
                              clinical::ClinicalEncoder::kVariableCount;
            break;
        case feat::Variant::filtered_concepts:
            variable_count_ = static_cast<int>(dataset.dictionary_cuis.size());
            break;
        case feat::Variant::clinical_only:
            variable_count_ = clinical::ClinicalEncoder::kVariableCount;
            break;
        case feat::Variant::full_concepts:
        case feat::Variant::bag_of_words:
            variable_count_ = static_cast<int>(selected_columns_.size());
            break;
    }
}

feat::FeatureMatrix VariantPipeline::transform(
    const PatientDataset& dataset, const std::vector<int>& indices) const {
    if (!fitted_) throw PipelineError("transform before fit");
    auto matrix = assemble_raw(dataset, indices);
    if (!selected_columns_.empty())
        matrix = matrix.select_columns(selected_columns_);
    attach_labels(matrix, dataset, indices);
    return matrix;
}

feat::FeatureMatrix VariantPipeline::fit_transform(
    const PatientDataset& dataset, const std::vector<int>& train_idx) {
    fit(dataset, train_idx);
    return transform(dataset, train_idx);
}

int VariantPipeline::variable_count() const {
    if (!fitted_) throw PipelineError("variable_count before fit");
    return variable_count_;
}

}  // namespace recurml::pipeline
