// Batch front end: synth -> preprocess -> train -> evaluate -> report.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "recurml/learner.hpp"
#include "recurml/pipeline.hpp"
#include "recurml/stats_eval.hpp"
#include "recurml/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace recurml;

namespace {

struct RunConfig {
    // [paths]
    std::string notes;
    std::string patients;
    std::string lexicon;         // empty = built-in default
    std::string cues;            // empty = built-in default
    std::string generator_spec;  // empty = built-in default
    // [preprocess]
    pipeline::PreprocessOptions preprocess;
    // [variant]
    feat::VariantConfig variant;
    // [learner]
    svm::TrainOptions learner;
    // [eval]
    int k = 5;
    int replicates = 20;
    double ratio = 0.7;
    uint64_t base_seed = 0;
};

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::runtime_error("config key '" + key + "': expected true/false");
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::string section, line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = util::trim(t.substr(0, eq));
        std::string value = util::trim(t.substr(eq + 1));
        if (section == "paths") {
            if (key == "notes") cfg.notes = value;
            else if (key == "patients") cfg.patients = value;
            else if (key == "lexicon") cfg.lexicon = value;
            else if (key == "cues") cfg.cues = value;
            else if (key == "generator_spec") cfg.generator_spec = value;
            else throw std::runtime_error("config key '" + key + "': unknown");
        } else if (section == "preprocess") {
            if (key == "apply_cue_filter")
                cfg.preprocess.apply_cue_filter = parse_bool(value, key);
            else if (key == "apply_negation")
                cfg.preprocess.apply_negation = parse_bool(value, key);
            else if (key == "censor_date") {
                auto d = util::parse_date(value);
                if (!d) throw std::runtime_error("config key 'censor_date': bad date");
                cfg.preprocess.censor_date = *d;
            } else throw std::runtime_error("config key '" + key + "': unknown");
        } else if (section == "variant") {
            if (key == "name") cfg.variant.variant = feat::variant_from_string(value);
            else if (key == "chi2_keep_fraction")
                cfg.variant.chi2_keep_fraction = std::stod(value);
            else throw std::runtime_error("config key '" + key + "': unknown");
        } else if (section == "learner") {
            if (key == "C") cfg.learner.C = std::stod(value);
            else if (key == "tol") cfg.learner.tol = std::stod(value);
            else if (key == "max_epochs") cfg.learner.max_epochs = std::stoi(value);
            else if (key == "seed") cfg.learner.seed = std::stoull(value);
            else throw std::runtime_error("config key '" + key + "': unknown");
        } else if (section == "eval") {
            if (key == "k") cfg.k = std::stoi(value);
            else if (key == "replicates") cfg.replicates = std::stoi(value);
            else if (key == "ratio") cfg.ratio = std::stod(value);
            else if (key == "base_seed") cfg.base_seed = std::stoull(value);
            else throw std::runtime_error("config key '" + key + "': unknown");
        } else {
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": unknown section [" + section + "]");
        }
    }
    return cfg;
}

std::vector<corpus::ContextCue> resolve_cues(const RunConfig& cfg) {
    return cfg.cues.empty() ? corpus::default_cues() : corpus::load_cues(cfg.cues);
}

std::vector<tagger::LexiconEntry> resolve_lexicon(const RunConfig& cfg) {
    if (cfg.lexicon.empty()) return tagger::default_lexicon();
    std::ifstream in(cfg.lexicon);
    if (!in) throw std::runtime_error("cannot open lexicon: " + cfg.lexicon);
    return tagger::parse_lexicon(in);
}

json counts_to_json(const std::vector<feat::Counts>& all) {
    json out = json::array();
    for (const auto& counts : all) out.push_back(counts);
    return out;
}

std::vector<feat::Counts> counts_from_json(const json& arr) {
    std::vector<feat::Counts> out;
    for (const auto& item : arr) out.push_back(item.get<feat::Counts>());
    return out;
}

void save_dataset(const pipeline::PatientDataset& ds, const std::string& path) {
    json j;
    j["patient_ids"] = ds.patient_ids;
    j["labels"] = ds.labels;
    j["dictionary_cuis"] = ds.dictionary_cuis;
    j["concept_counts"] = counts_to_json(ds.concept_counts);
    j["full_concept_counts"] = counts_to_json(ds.full_concept_counts);
    j["token_counts"] = counts_to_json(ds.token_counts);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    out << j.dump(1) << "\n";
}

pipeline::PatientDataset load_dataset(const std::string& dataset_path,
                                      const std::string& patients_csv) {
    std::ifstream in(dataset_path);
    if (!in)
        throw std::runtime_error("cannot open dataset (run preprocess first): " +
                                 dataset_path);
    json j = json::parse(in);
    pipeline::PatientDataset ds;
    ds.patient_ids = j.at("patient_ids").get<std::vector<std::string>>();
    ds.labels = j.at("labels").get<std::vector<int>>();
    ds.dictionary_cuis = j.at("dictionary_cuis").get<std::vector<std::string>>();
    ds.concept_counts = counts_from_json(j.at("concept_counts"));
    ds.full_concept_counts = counts_from_json(j.at("full_concept_counts"));
    ds.token_counts = counts_from_json(j.at("token_counts"));

    auto records = clinical::load_patients_csv(patients_csv);
    std::map<std::string, const clinical::PatientRecord*> by_id;
    for (const auto& r : records) by_id[r.patient_id] = &r;
    for (const auto& id : ds.patient_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw std::runtime_error("dataset patient missing from patients CSV: " + id);
        ds.records.push_back(*it->second);
    }
    return ds;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(1) << "\n";
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir,
              std::optional<uint64_t> seed_override) {
    auto spec = cfg.generator_spec.empty()
                    ? synth::default_generator_spec()
                    : synth::load_generator_spec(cfg.generator_spec);
    if (seed_override) spec.seed = *seed_override;
    auto cohort = synth::generate(spec);
    fs::create_directories(out_dir);
    synth::write_cohort(cohort, out_dir + "/patients.csv",
                        out_dir + "/notes.jsonl");

    json report;
    report["n"] = cohort.patients.size();
    long pos = 0;
    for (const auto& p : cohort.patients)
        if (p.label == 1) ++pos;
    report["positives"] = pos;
    report["seed"] = spec.seed;
    if (cohort.patients.empty() || pos == 0 ||
        pos == static_cast<long>(cohort.patients.size())) {
        report["bayes_auc"] = nullptr;
        report["oracle_undefined"] = true;
    } else {
        report["bayes_auc"] = synth::bayes_oracle(spec, cohort).bayes_auc;
        report["oracle_undefined"] = false;
    }
    write_json(report, out_dir + "/oracle.json");
    std::cout << "synth: wrote " << cohort.patients.size() << " patients ("
              << pos << " positive) to " << out_dir << "\n";
    return 0;
}

int cmd_preprocess(const RunConfig& cfg, const std::string& out_dir) {
    auto records = clinical::load_patients_csv(cfg.patients);
    auto notes = corpus::ingest_file(cfg.notes);
    pipeline::PreprocessReport report;
    auto ds = pipeline::build_dataset(records, notes, resolve_cues(cfg),
                                      resolve_lexicon(cfg), cfg.preprocess,
                                      &report);
    fs::create_directories(out_dir);
    save_dataset(ds, out_dir + "/dataset.json");

    json j;
    j["notes_in"] = report.notes_in;
    j["notes_kept"] = report.notes_kept;
    j["rejected_rows"] = report.rejected_rows;
    j["dropped_pre_diagnosis"] = report.filter.dropped_pre_diagnosis;
    j["dropped_post_censor"] = report.filter.dropped_post_censor;
    j["dropped_no_breast"] = report.filter.dropped_no_breast;
    j["dropped_unknown_patient"] = report.filter.dropped_unknown_patient;
    j["sentences_total"] = report.sentences_total;
    j["sentences_cue_dropped"] = report.sentences_cue_dropped;
    write_json(j, out_dir + "/preprocess_report.json");
    std::cout << "preprocess: " << report.notes_kept << "/" << report.notes_in
              << " notes kept, " << report.sentences_cue_dropped << "/"
              << report.sentences_total << " sentences cue-dropped\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir) {
    auto ds = load_dataset(out_dir + "/dataset.json", cfg.patients);
    auto all = pipeline::all_indices(ds.size());
    pipeline::VariantPipeline pipe(cfg.variant);
    auto matrix = pipe.fit_transform(ds, all);
    auto model =
        svm::calibrate(svm::train(matrix, cfg.learner), matrix, cfg.learner);
    model.save(out_dir + "/model.json");

    json j;
    j["variant"] = feat::to_string(cfg.variant.variant);
    j["variables"] = pipe.variable_count();
    j["columns"] = matrix.n_cols();
    j["columns_per_source"] = matrix.variable_counts;
    write_json(j, out_dir + "/features.json");
    std::cout << "train: " << feat::to_string(cfg.variant.variant) << ", "
              << pipe.variable_count() << " variables (" << matrix.n_cols()
              << " columns), model written to " << out_dir << "/model.json\n";
    return 0;
}

stats::FitScoreFn make_fit_score(const pipeline::PatientDataset& ds,
                                 const RunConfig& cfg) {
    return [&ds, cfg](const std::vector<int>& train_idx,
                      const std::vector<int>& test_idx) {
        pipeline::VariantPipeline pipe(cfg.variant);
        auto train_m = pipe.fit_transform(ds, train_idx);
        auto model = svm::calibrate(svm::train(train_m, cfg.learner), train_m,
                                    cfg.learner);
        auto test_m = pipe.transform(ds, test_idx);
        std::vector<double> scores;
        scores.reserve(test_m.n_rows());
        for (const auto& row : test_m.rows)
            scores.push_back(model.predict_proba(row));
        return scores;
    };
}

int cmd_evaluate(const RunConfig& cfg, const std::string& out_dir) {
    auto ds = load_dataset(out_dir + "/dataset.json", cfg.patients);
    fs::create_directories(out_dir);
    std::string variant = feat::to_string(cfg.variant.variant);

    auto report = stats::repeated_cv(ds.labels, make_fit_score(ds, cfg), cfg.k,
                                     cfg.replicates, cfg.base_seed);
    report.variant = variant;

    json j;
    j["variant"] = variant;
    j["k"] = cfg.k;
    j["replicates"] = cfg.replicates;
    j["mean_auc"] = report.mean_auc;
    j["sd_auc"] = report.sd_auc;
    j["auc"] = report.mean_sd_string();
    json reps = json::array();
    for (const auto& rep : report.replicates) {
        reps.push_back({{"replicate", rep.replicate},
                        {"seed", rep.seed},
                        {"auc_pooled", rep.auc_pooled},
                        {"fold_aucs", rep.fold_aucs}});
        char name[128];
        std::snprintf(name, sizeof(name), "%s/roc_%s_r%02d.tsv", out_dir.c_str(),
                      variant.c_str(), rep.replicate);
        std::ofstream roc(name);
        roc << "fpr\ttpr\treplicate\tfold\n";
        char buf[128];
        for (const auto& p : rep.roc) {
            // the per-replicate curve pools all held-out folds
            std::snprintf(buf, sizeof(buf), "%.10g\t%.10g\t%d\tpooled\n", p.fpr,
                          p.tpr, rep.replicate);
            roc << buf;
        }
    }
    j["replicate_results"] = reps;

    // Held-out split evaluation alongside the CV figures.
    auto plan = stats::stratified_split(ds.labels, cfg.ratio, cfg.base_seed);
    std::vector<int> train_idx, test_idx;
    for (size_t i = 0; i < ds.size(); ++i)
        (plan.assignment[i] == 0 ? train_idx : test_idx).push_back(
            static_cast<int>(i));
    auto heldout_scores = make_fit_score(ds, cfg)(train_idx, test_idx);
    std::vector<int> heldout_labels;
    for (int idx : test_idx) heldout_labels.push_back(ds.labels[idx]);
    j["heldout_ratio"] = cfg.ratio;
    j["heldout_auc"] = stats::auc(heldout_scores, heldout_labels);

    write_json(j, out_dir + "/eval_" + variant + ".json");

    // Coefficient ranking from a fit on the full dataset.
    pipeline::VariantPipeline pipe(cfg.variant);
    auto full = pipe.fit_transform(ds, pipeline::all_indices(ds.size()));
    auto model = svm::train(full, cfg.learner);
    std::ofstream coef(out_dir + "/coefficients_" + variant + ".tsv");
    coef << "rank\tname\tsource\tcoefficient\n";
    int rank = 1;
    for (const auto& rc : svm::rank_coefficients(model, 15)) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%d\t%s\t%s\t%.6f\n", rank++,
                      rc.name.c_str(), feat::to_string(rc.source).c_str(),
                      rc.coefficient);
        coef << buf;
    }

    std::cout << "evaluate: " << variant << " AUC " << report.mean_sd_string()
              << " over " << cfg.replicates << "x" << cfg.k
              << "-fold CV; heldout AUC " << j["heldout_auc"].get<double>()
              << "\n";
    return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& out_dir,
               bool only_significant) {
    auto records = clinical::load_patients_csv(cfg.patients);
    auto rows = stats::descriptive_table(records, only_significant);
    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/descriptive.tsv");
    if (!out) throw std::runtime_error("cannot write descriptive table");
    stats::write_descriptive_tsv(rows, out);
    std::ostringstream echo;
    stats::write_descriptive_tsv(rows, echo);
    std::cout << echo.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distant-recurrence phenotyping pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", variant_name;
    std::optional<uint64_t> seed;
    app.add_option("--config", config_path, "run configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--variant", variant_name, "feature variant override");
    uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "seed override");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
    auto* pre_cmd = app.add_subcommand("preprocess", "notes -> sentence store");
    auto* train_cmd = app.add_subcommand("train", "fit and calibrate the SVM");
    auto* eval_cmd = app.add_subcommand("evaluate", "repeated stratified CV");
    auto* report_cmd = app.add_subcommand("report", "descriptive cohort table");
    // let --config/--out/--variant/--seed appear after the subcommand too
    for (auto* sub : {synth_cmd, pre_cmd, train_cmd, eval_cmd, report_cmd})
        sub->fallthrough();
    bool only_significant = false;
    report_cmd->add_flag("--only-significant", only_significant,
                         "keep variables with p < 0.05");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) seed = seed_value;

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!variant_name.empty())
            cfg.variant.variant = feat::variant_from_string(variant_name);
        if (seed) {
            cfg.learner.seed = *seed;
            cfg.base_seed = *seed;
        }
        if (synth_cmd->parsed()) return cmd_synth(cfg, out_dir, seed);
        if (pre_cmd->parsed()) return cmd_preprocess(cfg, out_dir);
        if (train_cmd->parsed()) return cmd_train(cfg, out_dir);
        if (eval_cmd->parsed()) return cmd_evaluate(cfg, out_dir);
        if (report_cmd->parsed())
            return cmd_report(cfg, out_dir, only_significant);
        throw std::runtime_error("no subcommand");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
