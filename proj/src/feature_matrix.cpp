#include "recurml/feature_matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

namespace recurml::feat {

using nlohmann::json;

std::string to_string(ColumnSource source) {
    switch (source) {
        case ColumnSource::concept_col: return "concept";
        case ColumnSource::clinical_col: return "clinical";
        case ColumnSource::token_col: return "token";
    }
    return "token";
}

ColumnSource column_source_from_string(const std::string& s) {
    if (s == "concept") return ColumnSource::concept_col;
    if (s == "clinical") return ColumnSource::clinical_col;
    if (s == "token") return ColumnSource::token_col;
    throw MatrixError("unknown column source: " + s);
}

double FeatureMatrix::at(size_t row, int col) const {
    for (const auto& [c, v] : rows.at(row))
        if (c == col) return v;
    return 0.0;
}

void FeatureMatrix::check() const {
    if (rows.size() != row_ids.size())
        throw MatrixError("row_ids/rows size mismatch");
    if (!labels.empty() && labels.size() != rows.size())
        throw MatrixError("labels/rows size mismatch");
    std::set<std::string> names;
    for (const auto& c : columns)
        if (!names.insert(c.name).second)
            throw MatrixError("duplicate column name: " + c.name);
    for (const auto& row : rows) {
        int prev = -1;
        for (const auto& [c, v] : row) {
            if (c <= prev || c >= static_cast<int>(columns.size()))
                throw MatrixError("row entries not sorted or out of range");
            if (v == 0.0) throw MatrixError("explicit zero stored");
            prev = c;
        }
    }
}

FeatureMatrix FeatureMatrix::hcat(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.row_ids != b.row_ids)
        throw MatrixError("hcat: row misalignment");
    FeatureMatrix out;
    out.row_ids = a.row_ids;
    out.labels = a.labels.empty() ? b.labels : a.labels;
    out.columns = a.columns;
    out.columns.insert(out.columns.end(), b.columns.begin(), b.columns.end());
    out.variable_counts = a.variable_counts;
    for (const auto& [k, v] : b.variable_counts) out.variable_counts[k] += v;
    int offset = static_cast<int>(a.columns.size());
    out.rows.resize(a.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        out.rows[i] = a.rows[i];
        for (const auto& [c, v] : b.rows[i])
            out.rows[i].emplace_back(c + offset, v);
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<int>& indices) const {
    FeatureMatrix out;
    out.columns = columns;
    out.variable_counts = variable_counts;
    for (int i : indices) {
        out.row_ids.push_back(row_ids.at(i));
        out.rows.push_back(rows.at(i));
        if (!labels.empty()) out.labels.push_back(labels.at(i));
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<int>& col_indices) const {
    std::vector<int> remap(columns.size(), -1);
    FeatureMatrix out;
    out.row_ids = row_ids;
    out.labels = labels;
    for (size_t k = 0; k < col_indices.size(); ++k) {
        remap.at(col_indices[k]) = static_cast<int>(k);
        out.columns.push_back(columns.at(col_indices[k]));
    }
    out.rows.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [c, v] : rows[i])
            if (remap[c] >= 0) out.rows[i].emplace_back(remap[c], v);
        std::sort(out.rows[i].begin(), out.rows[i].end());
    }
    return out;
}

void FeatureMatrix::save(const std::string& meta_path,
                         const std::string& triplets_path) const {
    json meta;
    meta["row_ids"] = row_ids;
    meta["labels"] = labels;
    meta["variable_counts"] = variable_counts;
    json cols = json::array();
    for (const auto& c : columns)
        cols.push_back({{"name", c.name}, {"source", to_string(c.source)}});
    meta["columns"] = cols;
    meta["column_order"] =
        "columns listed in matrix order; triplet col indexes this list";
    std::ofstream mf(meta_path);
    if (!mf) throw MatrixError("cannot write " + meta_path);
    mf << meta.dump(2) << "\n";

    std::ofstream tf(triplets_path);
    if (!tf) throw MatrixError("cannot write " + triplets_path);
    tf << "row\tcol\tvalue\n";
    char buf[64];
    for (size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [c, v] : rows[i]) {
            std::snprintf(buf, sizeof(buf), "%zu\t%d\t%.17g\n", i, c, v);
            tf << buf;
        }
    }
}

FeatureMatrix FeatureMatrix::load(const std::string& meta_path,
                                  const std::string& triplets_path) {
    std::ifstream mf(meta_path);
    if (!mf) throw MatrixError("cannot read " + meta_path);
    json meta = json::parse(mf);
    FeatureMatrix out;
    out.row_ids = meta.at("row_ids").get<std::vector<std::string>>();
    out.labels = meta.at("labels").get<std::vector<int>>();
    out.variable_counts =
        meta.at("variable_counts").get<std::map<std::string, int>>();
    for (const auto& c : meta.at("columns"))
        out.columns.push_back({c.at("name").get<std::string>(),
                               column_source_from_string(c.at("source"))});
    out.rows.resize(out.row_ids.size());

    std::ifstream tf(triplets_path);
    if (!tf) throw MatrixError("cannot read " + triplets_path);
    std::string line;
    std::getline(tf, line);  // header
    size_t row;
    int col;
    double value;
    while (std::getline(tf, line)) {
        if (line.empty()) continue;
        if (std::sscanf(line.c_str(), "%zu\t%d\t%lf", &row, &col, &value) != 3)
            throw MatrixError("bad triplet line: " + line);
        out.rows.at(row).emplace_back(col, value);
    }
    for (auto& r : out.rows) std::sort(r.begin(), r.end());
    out.check();
    return out;
}

}  // namespace recurml::feat
