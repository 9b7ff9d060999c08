#include "recurml/featurizer.hpp"

#include <algorithm>
#include <cmath>

namespace recurml::feat {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::filtered_plus_clinical: return "filtered_plus_clinical";
        case Variant::full_concepts: return "full_concepts";
        case Variant::filtered_concepts: return "filtered_concepts";
        case Variant::clinical_only: return "clinical_only";
        case Variant::bag_of_words: return "bag_of_words";
    }
    return "filtered_plus_clinical";
}

Variant variant_from_string(const std::string& s) {
    if (s == "filtered_plus_clinical") return Variant::filtered_plus_clinical;
    if (s == "full_concepts") return Variant::full_concepts;
    if (s == "filtered_concepts") return Variant::filtered_concepts;
    if (s == "clinical_only") return Variant::clinical_only;
    if (s == "bag_of_words") return Variant::bag_of_words;
    throw MatrixError("unknown variant: " + s);
}

FeatureMatrix TfidfVectorizer::fit_transform(const std::vector<std::string>& row_ids,
                                             const std::vector<Counts>& docs) {
    if (docs.empty()) throw MatrixError("tfidf: empty training corpus");
    std::map<std::string, int> df;
    for (const auto& doc : docs)
        for (const auto& [tok, cnt] : doc)
            if (cnt > 0) ++df[tok];

    vocab_.clear();
    vocab_index_.clear();
    idf_.clear();
    const double n = static_cast<double>(docs.size());
    for (const auto& [tok, d] : df) {  // std::map iterates sorted
        vocab_index_[tok] = static_cast<int>(vocab_.size());
        vocab_.push_back(tok);
        idf_.push_back(std::log((1.0 + n) / (1.0 + d)) + 1.0);
    }
    fitted_ = true;
    return transform(row_ids, docs);
}

FeatureMatrix TfidfVectorizer::transform(const std::vector<std::string>& row_ids,
                                         const std::vector<Counts>& docs) const {
    if (!fitted_) throw MatrixError("tfidf: transform before fit");
    if (row_ids.size() != docs.size())
        throw MatrixError("tfidf: row_ids/docs size mismatch");
    FeatureMatrix out;
    out.row_ids = row_ids;
    for (const auto& tok : vocab_)
        out.columns.push_back({tok, ColumnSource::token_col});
    out.variable_counts["token"] = static_cast<int>(vocab_.size());
    out.rows.resize(docs.size());
    for (size_t i = 0; i < docs.size(); ++i) {
        auto& row = out.rows[i];
        double sq = 0.0;
        for (const auto& [tok, cnt] : docs[i]) {
            if (cnt <= 0) continue;
            auto it = vocab_index_.find(tok);
            if (it == vocab_index_.end()) continue;  // unseen at fit time
            double v = static_cast<double>(cnt) * idf_[it->second];
            row.emplace_back(it->second, v);
            sq += v * v;
        }
        std::sort(row.begin(), row.end());
        if (sq > 0.0) {
            double inv = 1.0 / std::sqrt(sq);
            for (auto& [c, v] : row) v *= inv;
        }
    }
    return out;
}

double TfidfVectorizer::idf(const std::string& token) const {
    auto it = vocab_index_.find(token);
    if (it == vocab_index_.end()) throw MatrixError("token not in vocabulary");
    return idf_[it->second];
}

std::vector<double> chi2_scores(const FeatureMatrix& matrix) {
    if (!matrix.has_labels()) throw MatrixError("chi2: labels required");
    size_t n = matrix.n_rows();
    long n_pos = 0;
    for (int y : matrix.labels) n_pos += (y > 0);
    long n_neg = static_cast<long>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MatrixError("chi2: a class has zero members");
    double p_pos = static_cast<double>(n_pos) / static_cast<double>(n);
    double p_neg = static_cast<double>(n_neg) / static_cast<double>(n);

    std::vector<double> pos_sum(matrix.n_cols(), 0.0);
    std::vector<double> total_sum(matrix.n_cols(), 0.0);
    for (size_t i = 0; i < n; ++i) {
        bool pos = matrix.labels[i] > 0;
        for (const auto& [c, v] : matrix.rows[i]) {
            total_sum[c] += v;
            if (pos) pos_sum[c] += v;
        }
    }
    std::vector<double> scores(matrix.n_cols(), 0.0);
    for (size_t c = 0; c < matrix.n_cols(); ++c) {
        if (total_sum[c] == 0.0) continue;
        double e_pos = total_sum[c] * p_pos;
        double e_neg = total_sum[c] * p_neg;
        double o_pos = pos_sum[c];
        double o_neg = total_sum[c] - pos_sum[c];
        scores[c] = (o_pos - e_pos) * (o_pos - e_pos) / e_pos +
                    (o_neg - e_neg) * (o_neg - e_neg) / e_neg;
    }
    return scores;
}

std::vector<int> chi2_selected_columns(const FeatureMatrix& matrix,
                                       double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw MatrixError("chi2: keep_fraction out of (0,1]");
    auto scores = chi2_scores(matrix);
    std::vector<int> order(matrix.n_cols());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return matrix.columns[a].name < matrix.columns[b].name;
    });
    size_t keep = static_cast<size_t>(
        std::ceil(keep_fraction * static_cast<double>(matrix.n_cols())));
    keep = std::min(keep, matrix.n_cols());
    order.resize(keep);
    std::sort(order.begin(), order.end());  // preserve original column order
    return order;
}

FeatureMatrix chi2_select(const FeatureMatrix& matrix, double keep_fraction) {
    auto cols = chi2_selected_columns(matrix, keep_fraction);
    auto out = matrix.select_columns(cols);
    for (auto& [k, v] : out.variable_counts) v = 0;
    for (const auto& c : out.columns) ++out.variable_counts[to_string(c.source)];
    return out;
}

FeatureMatrix concept_matrix(const std::vector<std::string>& row_ids,
                             const std::vector<Counts>& concept_counts,
                             const std::vector<std::string>& cui_columns,
                             int variable_count) {
    if (row_ids.size() != concept_counts.size())
        throw MatrixError("concept_matrix: row misalignment");
    FeatureMatrix out;
    out.row_ids = row_ids;
    std::map<std::string, int> index;
    for (const auto& cui : cui_columns) {
        index[cui] = static_cast<int>(out.columns.size());
        out.columns.push_back({cui, ColumnSource::concept_col});
    }
    out.variable_counts["concept"] = variable_count;
    out.rows.resize(row_ids.size());
    for (size_t i = 0; i < concept_counts.size(); ++i) {
        for (const auto& [cui, cnt] : concept_counts[i]) {
            auto it = index.find(cui);
            if (it != index.end() && cnt != 0)
                out.rows[i].emplace_back(it->second, static_cast<double>(cnt));
        }
        std::sort(out.rows[i].begin(), out.rows[i].end());
    }
    return out;
}

FeatureMatrix clinical_matrix(const std::vector<std::string>& row_ids,
                              const std::vector<clinical::PatientRecord>& records,
                              const clinical::ClinicalEncoder& encoder) {
    if (row_ids.size() != records.size())
        throw MatrixError("clinical_matrix: row misalignment");
    FeatureMatrix out;
    out.row_ids = row_ids;
    for (const auto& name : encoder.column_names())
        out.columns.push_back({"clin:" + name, ColumnSource::clinical_col});
    out.variable_counts["clinical"] = clinical::ClinicalEncoder::kVariableCount;
    out.rows.resize(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        auto dense = encoder.encode(records[i]);
        for (size_t c = 0; c < dense.size(); ++c)
            if (dense[c] != 0.0)
                out.rows[i].emplace_back(static_cast<int>(c), dense[c]);
    }
    return out;
}

}  // namespace recurml::feat
