#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace recurml::feat {

enum class ColumnSource { concept_col, clinical_col, token_col };

std::string to_string(ColumnSource source);
ColumnSource column_source_from_string(const std::string& s);

struct Column {
    std::string name;
    ColumnSource source;
};

/// Sparse row-major patient x feature matrix. Rows hold (col, value) pairs
/// sorted by column index with no explicit zeros.
struct FeatureMatrix {
    std::vector<std::string> row_ids;
    std::vector<Column> columns;
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<int> labels;  // +1/-1; empty when unlabeled
    // Table-4-style variable count per source (a one-hot group is one
    // variable); keyed by source name.
    std::map<std::string, int> variable_counts;

    size_t n_rows() const { return rows.size(); }
    size_t n_cols() const { return columns.size(); }
    bool has_labels() const { return !labels.empty(); }

    double at(size_t row, int col) const;
    void check() const;  // invariant sweep; throws on violation

    /// Horizontal concatenation; rows must align by row_ids.
    static FeatureMatrix hcat(const FeatureMatrix& a, const FeatureMatrix& b);

    FeatureMatrix select_rows(const std::vector<int>& indices) const;
    FeatureMatrix select_columns(const std::vector<int>& col_indices) const;

    /// columns metadata JSON + sparse triplets TSV (row, col, value).
    void save(const std::string& meta_path, const std::string& triplets_path) const;
    static FeatureMatrix load(const std::string& meta_path,
                              const std::string& triplets_path);
};

struct MatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace recurml::feat
