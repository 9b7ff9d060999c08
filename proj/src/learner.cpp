#include "recurml/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "recurml/util.hpp"

namespace recurml::svm {

using nlohmann::json;

double TrainedModel::decision(const std::vector<std::pair<int, double>>& row) const {
    double f = bias;
    for (const auto& [c, v] : row) {
        if (c < 0 || c >= static_cast<int>(weights.size()))
            throw LearnerError("decision: row width mismatch");
        f += weights[c] * v;
    }
    return f;
}

double TrainedModel::predict_proba(
    const std::vector<std::pair<int, double>>& row) const {
    if (!calibrated) throw LearnerError("predict_proba on uncalibrated model");
    double f = decision(row);
    double z = platt_a * f + platt_b;
    // numerically stable sigmoid
    if (z >= 0.0) {
        double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

void TrainedModel::save(const std::string& path) const {
    json j;
    json cols = json::array();
    for (const auto& c : columns)
        cols.push_back({{"name", c.name}, {"source", feat::to_string(c.source)}});
    j["columns"] = cols;
    j["weights"] = weights;
    j["bias"] = bias;
    j["C"] = C;
    j["tol"] = tol;
    j["seed"] = seed;
    j["calibrated"] = calibrated;
    j["platt_a"] = platt_a;
    j["platt_b"] = platt_b;
    std::ofstream out(path);
    if (!out) throw LearnerError("cannot write model file: " + path);
    out << j.dump(2) << "\n";
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LearnerError("cannot read model file: " + path);
    json j = json::parse(in);
    TrainedModel m;
    for (const auto& c : j.at("columns"))
        m.columns.push_back({c.at("name").get<std::string>(),
                             feat::column_source_from_string(c.at("source"))});
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.C = j.at("C").get<double>();
    m.tol = j.at("tol").get<double>();
    m.seed = j.at("seed").get<uint64_t>();
    m.calibrated = j.at("calibrated").get<bool>();
    m.platt_a = j.at("platt_a").get<double>();
    m.platt_b = j.at("platt_b").get<double>();
    if (m.weights.size() != m.columns.size())
        throw LearnerError("model file: weight/column count mismatch");
    return m;
}

TrainedModel train(const feat::FeatureMatrix& matrix, const TrainOptions& opts,
                   TrainDiagnostics* diag) {
    const size_t n = matrix.n_rows();
    const size_t d = matrix.n_cols();
    if (n == 0) throw LearnerError("train: empty matrix");
    if (!matrix.has_labels()) throw LearnerError("train: labels required");
    if (opts.C <= 0.0) throw LearnerError("train: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int y : matrix.labels) {
        if (y > 0) has_pos = true;
        else has_neg = true;
    }
    if (!has_pos || !has_neg) throw LearnerError("train: single-class input");
    for (const auto& row : matrix.rows)
        for (const auto& [c, v] : row)
            if (!std::isfinite(v)) throw LearnerError("train: non-finite feature");

    // Diagonal of Q; +1 for the augmented bias feature.
    std::vector<double> qdiag(n, 1.0);
    for (size_t i = 0; i < n; ++i)
        for (const auto& [c, v] : matrix.rows[i]) qdiag[i] += v * v;

    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(opts.seed);

    TrainedModel model;
    model.columns = matrix.columns;
    model.C = opts.C;
    model.tol = opts.tol;
    model.seed = opts.seed;

    auto primal_of = [&](const std::vector<double>& wv, double bv) {
        double reg = bv * bv;
        for (double wj : wv) reg += wj * wj;
        double loss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double y = matrix.labels[i] > 0 ? 1.0 : -1.0;
            double f = bv;
            for (const auto& [c, v] : matrix.rows[i]) f += wv[c] * v;
            loss += std::max(0.0, 1.0 - y * f);
        }
        return 0.5 * reg + opts.C * loss;
    };

    // Dual ascent does not make the primal monotone per epoch, so the model
    // delivered is the best-primal iterate seen at any epoch end.
    std::vector<double> best_w = w;
    double best_b = b;
    std::vector<double> best_alpha = alpha;
    double best_primal = primal_of(w, b);

    int epoch = 0;
    double max_violation = 0.0;
    for (epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        util::seeded_shuffle(order, rng);
        max_violation = 0.0;
        for (size_t idx : order) {
            double y = matrix.labels[idx] > 0 ? 1.0 : -1.0;
            double f = b;
            for (const auto& [c, v] : matrix.rows[idx]) f += w[c] * v;
            double g = y * f - 1.0;

            double pg = g;
            if (alpha[idx] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[idx] >= opts.C) pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::fabs(pg));
            if (pg == 0.0) continue;

            double a_old = alpha[idx];
            double a_new = std::clamp(a_old - g / qdiag[idx], 0.0, opts.C);
            if (a_new == a_old) continue;
            alpha[idx] = a_new;
            double delta = (a_new - a_old) * y;
            for (const auto& [c, v] : matrix.rows[idx]) w[c] += delta * v;
            b += delta;
        }
        double primal = primal_of(w, b);
        if (primal < best_primal) {
            best_primal = primal;
            best_w = w;
            best_b = b;
            best_alpha = alpha;
        }
        if (diag) diag->primal_objective_per_epoch.push_back(best_primal);
        if (max_violation < opts.tol) break;
    }

    model.weights = std::move(best_w);
    model.bias = best_b;
    if (diag) {
        diag->epochs = std::min(epoch, opts.max_epochs);
        // exact KKT violation at the iterate actually returned
        double violation = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double y = matrix.labels[i] > 0 ? 1.0 : -1.0;
            double f = model.bias;
            for (const auto& [c, v] : matrix.rows[i]) f += model.weights[c] * v;
            double g = y * f - 1.0;
            double pg = g;
            if (best_alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (best_alpha[i] >= opts.C) pg = std::max(g, 0.0);
            violation = std::max(violation, std::fabs(pg));
        }
        diag->final_violation = violation;
        diag->alpha = std::move(best_alpha);
    }
    return model;
}

double primal_objective(const feat::FeatureMatrix& matrix,
                        const TrainedModel& model) {
    double reg = model.bias * model.bias;
    for (double wj : model.weights) reg += wj * wj;
    double loss = 0.0;
    for (size_t i = 0; i < matrix.n_rows(); ++i) {
        double y = matrix.labels[i] > 0 ? 1.0 : -1.0;
        loss += std::max(0.0, 1.0 - y * model.decision(matrix.rows[i]));
    }
    return 0.5 * reg + model.C * loss;
}

std::pair<double, double> fit_platt(const std::vector<double>& decision_values,
                                    const std::vector<int>& labels) {
    if (decision_values.size() != labels.size() || decision_values.empty())
        throw LearnerError("fit_platt: bad inputs");
    long n_pos = 0, n_neg = 0;
    for (int y : labels) (y > 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw LearnerError("fit_platt: both classes required");

    const double hi = (static_cast<double>(n_pos) + 1.0) /
                      (static_cast<double>(n_pos) + 2.0);
    const double lo = 1.0 / (static_cast<double>(n_neg) + 2.0);
    const size_t n = decision_values.size();
    std::vector<double> target(n);
    for (size_t i = 0; i < n; ++i) target[i] = labels[i] > 0 ? hi : lo;

    auto [fmin, fmax] =
        std::minmax_element(decision_values.begin(), decision_values.end());
    if (*fmax - *fmin < 1e-12) {
        double tbar = util::mean(target);
        return {0.0, std::log((1.0 - tbar) / tbar)};
    }

    // Newton with backtracking (Lin-Weng-Keerthi style).
    double a = 0.0;
    double b = std::log((static_cast<double>(n_neg) + 1.0) /
                        (static_cast<double>(n_pos) + 1.0));
    const double sigma = 1e-12;
    auto objective = [&](double aa, double bb) {
        double obj = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double z = aa * decision_values[i] + bb;
            // t*z + log(1+exp(-z)) computed stably
            if (z >= 0.0)
                obj += target[i] * z + std::log1p(std::exp(-z));
            else
                obj += (target[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return obj;
    };
    double fval = objective(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double z = a * decision_values[i] + b;
            double p, q;  // p = P(y=+1) = 1/(1+exp(z)) in this parameterization
            if (z >= 0.0) {
                q = 1.0 / (1.0 + std::exp(-z));
                p = 1.0 - q;
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = 1.0 - p;
            }
            double d1 = target[i] - p;
            double d2 = p * q;
            g1 += decision_values[i] * d1;
            g2 += d1;
            h11 += decision_values[i] * decision_values[i] * d2;
            h22 += d2;
            h21 += decision_values[i] * d2;
        }
        if (std::sqrt(g1 * g1 + g2 * g2) < 1e-8) break;
        double det = h11 * h22 - h21 * h21;
        double da = -(h22 * g1 - h21 * g2) / det;
        double db = -(-h21 * g1 + h11 * g2) / det;
        double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= 1e-10) {
            double nf = objective(a + step * da, b + step * db);
            if (nf < fval + 1e-4 * step * gd) {
                a += step * da;
                b += step * db;
                fval = nf;
                break;
            }
            step *= 0.5;
        }
        if (step < 1e-10) break;
    }
    return {a, b};
}

TrainedModel calibrate(TrainedModel model, const feat::FeatureMatrix& matrix,
                       const TrainOptions& opts) {
    long n_pos = 0, n_neg = 0;
    for (int y : matrix.labels) (y > 0 ? n_pos : n_neg)++;

    std::vector<double> values;
    std::vector<int> labels;
    const int k = 3;
    if (n_pos >= k && n_neg >= k) {
        // Stratified 3-fold cross-fitted decision values.
        std::vector<int> pos_idx, neg_idx;
        for (size_t i = 0; i < matrix.n_rows(); ++i)
            (matrix.labels[i] > 0 ? pos_idx : neg_idx).push_back(static_cast<int>(i));
        std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
        util::seeded_shuffle(pos_idx, rng);
        util::seeded_shuffle(neg_idx, rng);
        std::vector<int> fold(matrix.n_rows());
        for (size_t j = 0; j < pos_idx.size(); ++j) fold[pos_idx[j]] = j % k;
        for (size_t j = 0; j < neg_idx.size(); ++j) fold[neg_idx[j]] = j % k;
        for (int f = 0; f < k; ++f) {
            std::vector<int> train_rows, test_rows;
            for (size_t i = 0; i < matrix.n_rows(); ++i)
                (fold[i] == f ? test_rows : train_rows).push_back(static_cast<int>(i));
            auto sub = matrix.select_rows(train_rows);
            auto fold_model = train(sub, opts);
            for (int i : test_rows) {
                values.push_back(fold_model.decision(matrix.rows[i]));
                labels.push_back(matrix.labels[i]);
            }
        }
    } else {
        // Too few examples to cross-fit; fall back to in-sample decisions.
        for (size_t i = 0; i < matrix.n_rows(); ++i) {
            values.push_back(model.decision(matrix.rows[i]));
            labels.push_back(matrix.labels[i]);
        }
    }
    auto [a, b] = fit_platt(values, labels);
    model.platt_a = a;
    model.platt_b = b;
    model.calibrated = true;
    return model;
}

std::vector<RankedCoefficient> rank_coefficients(const TrainedModel& model,
                                                 size_t top_k) {
    std::vector<size_t> order(model.weights.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (model.weights[a] != model.weights[b])
            return model.weights[a] > model.weights[b];
        return model.columns[a].name < model.columns[b].name;
    });
    if (top_k < order.size()) order.resize(top_k);
    std::vector<RankedCoefficient> out;
    for (size_t i : order)
        out.push_back({model.columns[i].name, model.columns[i].source,
                       model.weights[i]});
    return out;
}

}  // namespace recurml::svm
