#include "recurml/stats_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "recurml/clinical.hpp"
#include "recurml/util.hpp"

namespace recurml::stats {

SplitPlan stratified_split(const std::vector<int>& labels, double ratio,
                           uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw StatsError("stratified_split: ratio must be in (0,1)");
    std::vector<int> pos_idx, neg_idx;
    for (size_t i = 0; i < labels.size(); ++i)
        (labels[i] > 0 ? pos_idx : neg_idx).push_back(static_cast<int>(i));
    if (pos_idx.size() < 2 || neg_idx.size() < 2)
        throw StatsError("stratified_split: each class needs >= 2 members");

    std::mt19937_64 rng(seed);
    util::seeded_shuffle(pos_idx, rng);
    util::seeded_shuffle(neg_idx, rng);

    // Largest-remainder allocation of the train side across classes.
    double q_pos = ratio * static_cast<double>(pos_idx.size());
    double q_neg = ratio * static_cast<double>(neg_idx.size());
    long take_pos = static_cast<long>(std::floor(q_pos));
    long take_neg = static_cast<long>(std::floor(q_neg));
    // Ties round to even so 7:3 of 1,995 gives a 1,396-row train side.
    long total = static_cast<long>(
        std::nearbyint(ratio * static_cast<double>(labels.size())));
    long leftover = total - take_pos - take_neg;
    while (leftover > 0) {
        double r_pos = q_pos - std::floor(q_pos);
        double r_neg = q_neg - std::floor(q_neg);
        bool pick_pos = (r_pos > r_neg) && take_pos < (long)pos_idx.size();
        if (pick_pos) { ++take_pos; q_pos = take_pos; }
        else if (take_neg < (long)neg_idx.size()) { ++take_neg; q_neg = take_neg; }
        else { ++take_pos; q_pos = take_pos; }
        --leftover;
    }

    SplitPlan plan;
    plan.seed = seed;
    plan.assignment.assign(labels.size(), 1);
    for (long j = 0; j < take_pos; ++j) plan.assignment[pos_idx[j]] = 0;
    for (long j = 0; j < take_neg; ++j) plan.assignment[neg_idx[j]] = 0;
    return plan;
}

SplitPlan stratified_kfold(const std::vector<int>& labels, int k, uint64_t seed) {
    if (k < 2) throw StatsError("stratified_kfold: k must be >= 2");
    std::vector<int> pos_idx, neg_idx;
    for (size_t i = 0; i < labels.size(); ++i)
        (labels[i] > 0 ? pos_idx : neg_idx).push_back(static_cast<int>(i));
    std::mt19937_64 rng(seed);
    util::seeded_shuffle(pos_idx, rng);
    util::seeded_shuffle(neg_idx, rng);
    SplitPlan plan;
    plan.seed = seed;
    plan.assignment.assign(labels.size(), 0);
    for (size_t j = 0; j < pos_idx.size(); ++j)
        plan.assignment[pos_idx[j]] = static_cast<int>(j % k);
    for (size_t j = 0; j < neg_idx.size(); ++j)
        plan.assignment[neg_idx[j]] = static_cast<int>(j % k);
    return plan;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw StatsError("auc: bad inputs");
    long n_pos = 0, n_neg = 0;
    for (int y : labels) (y > 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw StatsError("auc: both classes required");

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]])
            ++j;
        double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t t = i; t <= j; ++t)
            if (labels[order[t]] > 0) pos_rank_sum += midrank;
        i = j + 1;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw StatsError("roc_points: bad inputs");
    long n_pos = 0, n_neg = 0;
    for (int y : labels) (y > 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw StatsError("roc_points: both classes required");

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    long tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]])
            ++j;
        for (size_t t = i; t <= j; ++t)
            (labels[order[t]] > 0 ? tp : fp)++;
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j + 1;
    }
    return points;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (size_t i = 1; i < points.size(); ++i)
        area += (points[i].fpr - points[i - 1].fpr) *
                (points[i].tpr + points[i - 1].tpr) * 0.5;
    return area;
}

std::string TestResult::p_string() const {
    if (p_value < kPValueFloor) return "< 2.2e-16";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", p_value);
    return buf;
}

TestResult t_test_two_sample(const std::vector<double>& a,
                             const std::vector<double>& b, bool welch) {
    if (a.size() < 2 || b.size() < 2)
        throw StatsError("t_test: each sample needs >= 2 values");
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = util::mean(a), mb = util::mean(b);
    double sa = util::sample_sd(a), sb = util::sample_sd(b);
    double va = sa * sa, vb = sb * sb;

    TestResult result;
    result.kind = TestKind::students_t_two_sample;
    double t, df;
    if (welch) {
        double se2 = va / na + vb / nb;
        if (se2 == 0.0) {
            result.degenerate = true;
            result.statistic = 0.0;
            result.df = na + nb - 2.0;
            result.p_value = (ma == mb) ? 1.0 : 0.0;
            return result;
        }
        t = (ma - mb) / std::sqrt(se2);
        double num = se2 * se2;
        double den = (va / na) * (va / na) / (na - 1.0) +
                     (vb / nb) * (vb / nb) / (nb - 1.0);
        df = num / den;
    } else {
        double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        df = na + nb - 2.0;
        if (pooled == 0.0) {
            result.degenerate = true;
            result.statistic = 0.0;
            result.df = df;
            result.p_value = (ma == mb) ? 1.0 : 0.0;
            return result;
        }
        t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    }
    result.statistic = t;
    result.df = df;
    boost::math::students_t dist(df);
    result.p_value = 2.0 * boost::math::cdf(dist, -std::fabs(t));
    return result;
}

TestResult chi2_independence(const std::vector<std::vector<double>>& table) {
    size_t r = table.size();
    if (r < 2) throw StatsError("chi2: need at least 2 rows");
    size_t c = table[0].size();
    if (c < 2) throw StatsError("chi2: need at least 2 columns");
    for (const auto& row : table)
        if (row.size() != c) throw StatsError("chi2: ragged table");

    std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            if (table[i][j] < 0.0) throw StatsError("chi2: negative count");
            row_sum[i] += table[i][j];
            col_sum[j] += table[i][j];
            total += table[i][j];
        }
    for (double s : row_sum)
        if (s == 0.0) throw StatsError("chi2: zero row marginal");
    for (double s : col_sum)
        if (s == 0.0) throw StatsError("chi2: zero column marginal");

    double stat = 0.0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            double e = row_sum[i] * col_sum[j] / total;
            double d = table[i][j] - e;
            stat += d * d / e;
        }
    TestResult result;
    result.kind = TestKind::chi_squared_independence;
    result.statistic = stat;
    result.df = static_cast<double>((r - 1) * (c - 1));
    boost::math::chi_squared dist(result.df);
    result.p_value = boost::math::cdf(boost::math::complement(dist, stat));
    return result;
}

TestResult cohens_kappa_confusion(const std::vector<std::vector<double>>& confusion) {
    size_t k = confusion.size();
    if (k == 0) throw StatsError("kappa: empty confusion matrix");
    double total = 0.0, agree = 0.0;
    std::vector<double> row_sum(k, 0.0), col_sum(k, 0.0);
    for (size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw StatsError("kappa: non-square matrix");
        for (size_t j = 0; j < k; ++j) {
            total += confusion[i][j];
            row_sum[i] += confusion[i][j];
            col_sum[j] += confusion[i][j];
        }
        agree += confusion[i][i];
    }
    if (total == 0.0) throw StatsError("kappa: empty annotations");
    double po = agree / total;
    double pe = 0.0;
    for (size_t i = 0; i < k; ++i) pe += (row_sum[i] / total) * (col_sum[i] / total);

    TestResult result;
    result.kind = TestKind::cohens_kappa;
    result.df = 0.0;
    result.p_value = 1.0;
    if (pe >= 1.0) {
        // Both annotators constant and identical.
        result.statistic = 1.0;
        result.degenerate = true;
    } else {
        result.statistic = (po - pe) / (1.0 - pe);
    }
    return result;
}

TestResult cohens_kappa(const std::vector<std::string>& annotations_a,
                        const std::vector<std::string>& annotations_b) {
    if (annotations_a.size() != annotations_b.size() || annotations_a.empty())
        throw StatsError("kappa: annotation sequences must be equal-length");
    std::map<std::string, size_t> categories;
    for (const auto& v : annotations_a) categories.emplace(v, 0);
    for (const auto& v : annotations_b) categories.emplace(v, 0);
    size_t k = 0;
    for (auto& [name, idx] : categories) idx = k++;
    std::vector<std::vector<double>> confusion(k, std::vector<double>(k, 0.0));
    for (size_t i = 0; i < annotations_a.size(); ++i)
        confusion[categories[annotations_a[i]]][categories[annotations_b[i]]] += 1.0;
    return cohens_kappa_confusion(confusion);
}

std::string EvalReport::mean_sd_string() const {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", mean_auc, sd_auc);
    return buf;
}

EvalReport repeated_cv(const std::vector<int>& labels, const FitScoreFn& fit_score,
                       int k, int replicates, uint64_t base_seed) {
    if (k < 2) throw StatsError("repeated_cv: k must be >= 2");
    EvalReport report;
    std::vector<double> rep_aucs;
    for (int rep = 0; rep < replicates; ++rep) {
        uint64_t seed = base_seed + static_cast<uint64_t>(rep);
        auto plan = stratified_kfold(labels, k, seed);

        ReplicateResult rr;
        rr.replicate = rep;
        rr.seed = seed;
        std::vector<double> pooled_scores;
        std::vector<int> pooled_labels;
        std::vector<int> pooled_rows;
        for (int f = 0; f < k; ++f) {
            std::vector<int> train_idx, test_idx;
            for (size_t i = 0; i < labels.size(); ++i)
                (plan.assignment[i] == f ? test_idx : train_idx)
                    .push_back(static_cast<int>(i));
            long fold_pos = 0, fold_neg = 0;
            for (int i : test_idx) (labels[i] > 0 ? fold_pos : fold_neg)++;
            if (fold_pos == 0 || fold_neg == 0)
                throw StatsError("repeated_cv: fold " + std::to_string(f) +
                                 " is single-class (size " +
                                 std::to_string(test_idx.size()) + ")");
            auto scores = fit_score(train_idx, test_idx);
            if (scores.size() != test_idx.size())
                throw StatsError("repeated_cv: scorer returned wrong count");
            std::vector<int> fold_labels;
            for (int i : test_idx) fold_labels.push_back(labels[i]);
            rr.fold_aucs.push_back(auc(scores, fold_labels));
            for (size_t t = 0; t < test_idx.size(); ++t) {
                pooled_scores.push_back(scores[t]);
                pooled_labels.push_back(labels[test_idx[t]]);
                pooled_rows.push_back(test_idx[t]);
            }
        }
        // Order-independent reduction: sort pooled scores by row index.
        std::vector<size_t> order(pooled_rows.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return pooled_rows[a] < pooled_rows[b]; });
        std::vector<double> sorted_scores;
        std::vector<int> sorted_labels;
        for (size_t i : order) {
            sorted_scores.push_back(pooled_scores[i]);
            sorted_labels.push_back(pooled_labels[i]);
        }
        rr.auc_pooled = auc(sorted_scores, sorted_labels);
        rr.roc = roc_points(sorted_scores, sorted_labels);
        rep_aucs.push_back(rr.auc_pooled);
        report.replicates.push_back(std::move(rr));
    }
    report.mean_auc = util::mean(rep_aucs);
    report.sd_auc = util::sample_sd(rep_aucs);
    return report;
}

namespace {

using clinical::PatientRecord;

void categorical_rows(const std::string& variable,
                      const std::vector<std::pair<std::string, bool>>& values,
                      bool only_significant, double alpha,
                      std::vector<DescriptiveRow>& out) {
    // values: (category, is_recurrence)
    std::map<std::string, std::pair<long, long>> counts;  // cat -> (dr, no_dr)
    long n_dr = 0, n_no = 0;
    for (const auto& [cat, dr] : values) {
        auto& c = counts[cat];
        if (dr) { ++c.first; ++n_dr; }
        else { ++c.second; ++n_no; }
    }
    if (counts.size() < 2) {
        DescriptiveRow row;
        row.variable = variable;
        row.note = "skipped: single observed category";
        if (!only_significant) out.push_back(row);
        return;
    }
    std::vector<std::vector<double>> table;
    for (const auto& [cat, c] : counts)
        table.push_back({static_cast<double>(c.first), static_cast<double>(c.second)});
    TestResult test;
    try {
        test = chi2_independence(table);
    } catch (const StatsError&) {
        DescriptiveRow row;
        row.variable = variable;
        row.note = "skipped: degenerate table";
        if (!only_significant) out.push_back(row);
        return;
    }
    if (only_significant && test.p_value >= alpha) return;

    DescriptiveRow head;
    head.variable = variable;
    head.total = n_dr + n_no;
    head.recurrence = n_dr;
    head.no_recurrence = n_no;
    head.test = test;
    out.push_back(head);
    for (const auto& [cat, c] : counts) {
        DescriptiveRow row;
        row.variable = variable;
        row.category = cat;
        row.recurrence = c.first;
        row.no_recurrence = c.second;
        row.total = c.first + c.second;
        row.pct_recurrence =
            n_dr > 0 ? 100.0 * static_cast<double>(c.first) / n_dr : 0.0;
        row.pct_no_recurrence =
            n_no > 0 ? 100.0 * static_cast<double>(c.second) / n_no : 0.0;
        out.push_back(row);
    }
}

}  // namespace

std::vector<DescriptiveRow> descriptive_table(
    const std::vector<PatientRecord>& records, bool only_significant,
    double alpha) {
    std::vector<const PatientRecord*> labeled;
    for (const auto& r : records)
        if (r.label) labeled.push_back(&r);
    if (labeled.empty()) throw StatsError("descriptive_table: no labeled records");

    std::vector<DescriptiveRow> out;

    // Continuous: age, t-test between groups.
    std::vector<double> age_dr, age_no;
    for (const auto* r : labeled)
        (*r->label == clinical::Label::DistantRecurrence ? age_dr : age_no)
            .push_back(r->age_of_diagnosis);
    if (age_dr.size() >= 2 && age_no.size() >= 2) {
        auto test = t_test_two_sample(age_dr, age_no);
        if (!only_significant || test.p_value < alpha) {
            DescriptiveRow row;
            row.variable = "age_of_diagnosis";
            row.recurrence = static_cast<long>(age_dr.size());
            row.no_recurrence = static_cast<long>(age_no.size());
            row.total = row.recurrence + row.no_recurrence;
            row.pct_recurrence = util::mean(age_dr);
            row.pct_no_recurrence = util::mean(age_no);
            row.test = test;
            row.note = "mean age per group";
            out.push_back(row);
        }
    }

    auto yn = [](clinical::YesNo v) { return v == clinical::YesNo::Yes ? "Yes" : "No"; };
    auto gather = [&](const std::string& name, auto getter) {
        std::vector<std::pair<std::string, bool>> values;
        for (const auto* r : labeled)
            values.emplace_back(getter(*r),
                                *r->label == clinical::Label::DistantRecurrence);
        categorical_rows(name, values, only_significant, alpha, out);
    };
    gather("race", [](const PatientRecord& r) { return r.race; });
    gather("smoking", [](const PatientRecord& r) { return r.smoking; });
    gather("alcohol", [](const PatientRecord& r) { return r.alcohol; });
    gather("family_cancer_history",
           [](const PatientRecord& r) { return r.family_cancer_history; });
    gather("insurance", [](const PatientRecord& r) { return r.insurance; });
    gather("er", [](const PatientRecord& r) { return r.er; });
    gather("pr", [](const PatientRecord& r) { return r.pr; });
    gather("her2", [](const PatientRecord& r) { return r.her2; });
    gather("p53", [](const PatientRecord& r) { return r.p53; });
    gather("nodal_positivity",
           [](const PatientRecord& r) { return r.nodal_positivity; });
    gather("histology", [](const PatientRecord& r) { return r.histology; });
    gather("grade", [](const PatientRecord& r) { return r.grade; });
    gather("size", [](const PatientRecord& r) { return r.size; });
    gather("surgery", [](const PatientRecord& r) { return r.surgery; });
    gather("deceased", [&](const PatientRecord& r) { return yn(r.deceased); });
    gather("targeted_therapy",
           [&](const PatientRecord& r) { return yn(r.targeted_therapy); });
    gather("radiation", [&](const PatientRecord& r) { return yn(r.radiation); });
    return out;
}

void write_descriptive_tsv(const std::vector<DescriptiveRow>& rows,
                           std::ostream& out) {
    out << "variable\tcategory\ttotal\tDR\tDR_pct\tno_DR\tno_DR_pct\tp_value\tnote\n";
    char buf[64];
    for (const auto& r : rows) {
        out << r.variable << "\t" << r.category << "\t" << r.total << "\t"
            << r.recurrence << "\t";
        std::snprintf(buf, sizeof(buf), "%.1f", r.pct_recurrence);
        out << buf << "\t" << r.no_recurrence << "\t";
        std::snprintf(buf, sizeof(buf), "%.1f", r.pct_no_recurrence);
        out << buf << "\t" << (r.test ? r.test->p_string() : "") << "\t"
            << r.note << "\n";
    }
}

}  // namespace recurml::stats
