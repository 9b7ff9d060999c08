#include "recurml/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "recurml/concept_tagger.hpp"
#include "recurml/stats_eval.hpp"

namespace recurml::synth {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; one value per call keeps the draw sequence simple.
double normal(std::mt19937_64& rng, double mean, double sd) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Knuth multiplication method; fine for the small means used here.
int poisson(std::mt19937_64& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    double limit = std::exp(-lambda);
    double p = 1.0;
    int k = 0;
    do {
        ++k;
        p *= uniform01(rng);
    } while (p > limit);
    return k - 1;
}

int categorical(std::mt19937_64& rng, const std::vector<double>& probs) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

void check_simplex(const std::string& field, const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0 || v > 1.0)
            throw SynthError("generator spec field '" + field +
                             "': probability out of [0,1]");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw SynthError("generator spec field '" + field +
                         "': probabilities sum to " + std::to_string(sum) +
                         ", expected 1");
}

}  // namespace

void GeneratorSpec::validate() const {
    if (n < 0) throw SynthError("generator spec field 'n': negative");
    if (!(prevalence > 0.0 && prevalence < 1.0))
        throw SynthError("generator spec field 'prevalence': must be in (0,1)");
    for (const auto& v : binary_vars) {
        if (v.p_pos < 0.0 || v.p_pos > 1.0 || v.p_neg < 0.0 || v.p_neg > 1.0)
            throw SynthError("generator spec field '" + v.name +
                             "': probability out of [0,1]");
    }
    for (const auto& v : categorical_vars) {
        if (v.categories.size() != v.p_pos.size() ||
            v.categories.size() != v.p_neg.size() || v.categories.empty())
            throw SynthError("generator spec field '" + v.name +
                             "': category/probability arity mismatch");
        check_simplex(v.name, v.p_pos);
        check_simplex(v.name, v.p_neg);
    }
    for (const auto& [cui, rate] : concept_rates) {
        if (rate.lambda_pos < 0.0 || rate.lambda_neg < 0.0)
            throw SynthError("generator spec field '" + cui +
                             "': negative Poisson rate");
    }
    if (negated_rate < 0.0 || uncertainty_rate < 0.0 || distractor_rate < 0.0)
        throw SynthError("generator spec field 'noise': negative rate");
}

GeneratorSpec default_generator_spec() {
    GeneratorSpec spec;
    spec.n = 5000;
    spec.prevalence = 0.099;
    spec.seed = 42;
    spec.binary_vars = {
        {"nodal_positivity", 0.534, 0.245},
        {"deceased", 0.508, 0.033},
        {"radiation", 0.269, 0.008},
        {"targeted_therapy", 0.228, 0.009},
    };
    spec.categorical_vars = {
        {"histology",
         {"IDC", "DCIS", "ILC", "Unknown"},
         {0.902, 0.016, 0.078, 0.004},
         {0.752, 0.153, 0.078, 0.017}},
        {"grade",
         {"Grade1", "Grade2", "Grade3", "Unknown"},
         {0.083, 0.378, 0.523, 0.016},
         {0.245, 0.432, 0.313, 0.010}},
    };
    // CUIs whose phrases tag back unambiguously under the default lexicon.
    spec.concept_rates = {
        {"C0153678", {0.30, 0.010}},
        {"C0153690", {0.60, 0.040}},
        {"C1967552", {0.10, 0.004}},
        {"C0278488", {0.70, 0.050}},
        {"C0494165", {0.30, 0.020}},
        {"C0220650", {0.25, 0.015}},
        {"C0027627", {0.90, 0.250}},
        {"C0036525", {0.60, 0.200}},
    };
    spec.negated_rate = 0.7;
    spec.uncertainty_rate = 0.7;
    spec.distractor_rate = 2.0;
    return spec;
}

namespace {

std::vector<double> parse_numbers(const std::string& value, const std::string& field) {
    std::vector<double> out;
    for (const auto& part : util::split(value, ';')) {
        std::string t = util::trim(part);
        char* end = nullptr;
        double v = std::strtod(t.c_str(), &end);
        if (end == t.c_str() || *end != '\0')
            throw SynthError("generator spec field '" + field +
                             "': bad number '" + t + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

GeneratorSpec parse_generator_spec(std::istream& in) {
    GeneratorSpec spec;
    spec.binary_vars.clear();
    spec.categorical_vars.clear();
    spec.concept_rates.clear();
    spec.negated_rate = spec.uncertainty_rate = spec.distractor_rate = 0.0;

    std::string section;
    std::string line;
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
            throw SynthError("generator spec line " + std::to_string(line_no) +
                             ": expected key = value");
        std::string key = util::trim(t.substr(0, eq));
        std::string value = util::trim(t.substr(eq + 1));

        if (section == "cohort") {
            if (key == "n") spec.n = std::stol(value);
            else if (key == "prevalence") spec.prevalence = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else
                throw SynthError("generator spec field '" + key +
                                 "': unknown cohort key");
        } else if (section == "clinical_binary") {
            auto nums = parse_numbers(value, key);
            if (nums.size() != 2)
                throw SynthError("generator spec field '" + key +
                                 "': expected p_pos;p_neg");
            spec.binary_vars.push_back({key, nums[0], nums[1]});
        } else if (section == "clinical_categorical") {
            CategoricalVariable var;
            var.name = key;
            for (const auto& part : util::split(value, ';')) {
                auto bits = util::split(util::trim(part), ':');
                if (bits.size() != 2)
                    throw SynthError("generator spec field '" + key +
                                     "': expected Cat:p_pos/p_neg");
                auto probs = util::split(bits[1], '/');
                if (probs.size() != 2)
                    throw SynthError("generator spec field '" + key +
                                     "': expected Cat:p_pos/p_neg");
                var.categories.push_back(util::trim(bits[0]));
                var.p_pos.push_back(std::stod(probs[0]));
                var.p_neg.push_back(std::stod(probs[1]));
            }
            spec.categorical_vars.push_back(std::move(var));
        } else if (section == "concepts") {
            auto nums = parse_numbers(value, key);
            if (nums.size() != 2)
                throw SynthError("generator spec field '" + key +
                                 "': expected lambda_pos;lambda_neg");
            spec.concept_rates[key] = {nums[0], nums[1]};
        } else if (section == "noise") {
            if (key == "negated_rate") spec.negated_rate = std::stod(value);
            else if (key == "uncertainty_rate") spec.uncertainty_rate = std::stod(value);
            else if (key == "distractor_rate") spec.distractor_rate = std::stod(value);
            else
                throw SynthError("generator spec field '" + key +
                                 "': unknown noise key");
        } else {
            throw SynthError("generator spec line " + std::to_string(line_no) +
                             ": unknown section [" + section + "]");
        }
    }
    spec.validate();
    return spec;
}

GeneratorSpec load_generator_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SynthError("cannot open generator spec: " + path);
    return parse_generator_spec(in);
}

void write_generator_spec(const GeneratorSpec& spec, std::ostream& out) {
    char buf[128];
    out << "[cohort]\n";
    out << "n = " << spec.n << "\n";
    std::snprintf(buf, sizeof(buf), "prevalence = %g\n", spec.prevalence);
    out << buf << "seed = " << spec.seed << "\n\n";
    out << "[clinical_binary]\n";
    for (const auto& v : spec.binary_vars) {
        std::snprintf(buf, sizeof(buf), "%s = %g;%g\n", v.name.c_str(), v.p_pos,
                      v.p_neg);
        out << buf;
    }
    out << "\n[clinical_categorical]\n";
    for (const auto& v : spec.categorical_vars) {
        out << v.name << " = ";
        for (size_t i = 0; i < v.categories.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%s:%g/%g", i ? ";" : "",
                          v.categories[i].c_str(), v.p_pos[i], v.p_neg[i]);
            out << buf;
        }
        out << "\n";
    }
    out << "\n[concepts]\n";
    for (const auto& [cui, rate] : spec.concept_rates) {
        std::snprintf(buf, sizeof(buf), "%s = %g;%g\n", cui.c_str(),
                      rate.lambda_pos, rate.lambda_neg);
        out << buf;
    }
    out << "\n[noise]\n";
    std::snprintf(buf, sizeof(buf), "negated_rate = %g\nuncertainty_rate = %g\n"
                  "distractor_rate = %g\n",
                  spec.negated_rate, spec.uncertainty_rate, spec.distractor_rate);
    out << buf;
}

namespace {

const char* kDistractors[] = {
    "patient doing well today",
    "vital signs stable",
    "followup scheduled in three months",
    "medication list reviewed with patient",
    "patient ambulating independently",
};

std::string phrase_for(const std::string& cui,
                       const std::vector<tagger::LexiconEntry>& lexicon) {
    for (const auto& e : lexicon) {
        if (e.cui != cui) continue;
        std::string out;
        for (const auto& tok : e.phrases[0]) {
            if (!out.empty()) out += ' ';
            out += tok;
        }
        return out;
    }
    throw SynthError("generator spec field '" + cui +
                     "': no phrase in the default lexicon");
}

}  // namespace

Cohort generate(const GeneratorSpec& spec) {
    spec.validate();
    auto lexicon = tagger::default_lexicon();
    // Pre-resolve phrases so an unknown CUI fails before generation.
    std::map<std::string, std::string> phrases;
    for (const auto& [cui, rate] : spec.concept_rates)
        phrases[cui] = phrase_for(cui, lexicon);

    Cohort cohort;
    for (long i = 0; i < spec.n; ++i) {
        // splitmix64 per-patient sub-seed
        uint64_t z = spec.seed + 0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(i) + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        std::mt19937_64 rng(z ^ (z >> 31));

        GeneratedPatient p;
        bool dr = uniform01(rng) < spec.prevalence;
        p.label = dr ? 1 : -1;

        clinical::PatientRecord& r = p.record;
        r.patient_id = "S" + std::to_string(100000 + i);
        r.age_of_diagnosis =
            std::clamp(normal(rng, 58.0, 12.0), 20.0, 95.0);
        static const std::vector<std::string> kRaces = {"White", "Black", "Asian",
                                                        "Other"};
        r.race = kRaces[categorical(rng, {0.70, 0.15, 0.08, 0.07})];
        static const std::vector<std::string> kSmoking = {"Yes", "No", "Ex-smoker",
                                                          "Unknown"};
        r.smoking = kSmoking[categorical(rng, {0.12, 0.60, 0.18, 0.10})];
        static const std::vector<std::string> kAlcohol = {"No", "Moderate", "Heavy",
                                                          "Former", "Unknown"};
        r.alcohol = kAlcohol[categorical(rng, {0.45, 0.30, 0.05, 0.05, 0.15})];
        static const std::vector<std::string> kYnu = {"Yes", "No", "Unknown"};
        r.family_cancer_history = kYnu[categorical(rng, {0.25, 0.60, 0.15})];
        static const std::vector<std::string> kPlans = {"NetworkA", "NetworkB",
                                                        "NetworkC"};
        r.insurance = kPlans[categorical(rng, {0.5, 0.3, 0.2})];
        static const std::vector<std::string> kPnu = {"Positive", "Negative",
                                                      "Unknown"};
        r.er = kPnu[categorical(rng, {0.70, 0.25, 0.05})];
        r.pr = kPnu[categorical(rng, {0.60, 0.33, 0.07})];
        r.her2 = kPnu[categorical(rng, {0.20, 0.70, 0.10})];
        r.p53 = kPnu[categorical(rng, {0.30, 0.50, 0.20})];
        static const std::vector<std::string> kSizes = {"0-2cm", "2-5cm", ">5cm",
                                                        "Unknown"};
        r.size = kSizes[categorical(rng, {0.55, 0.32, 0.08, 0.05})];
        static const std::vector<std::string> kSurgery = {
            "Mastectomy", "BreastConservation", "No", "Unknown"};
        r.surgery = kSurgery[categorical(rng, {0.35, 0.55, 0.05, 0.05})];
        r.nodal_positivity = "Negative";
        r.histology = "Unknown";
        r.grade = "Unknown";
        r.deceased = clinical::YesNo::No;
        r.targeted_therapy = clinical::YesNo::No;
        r.radiation = clinical::YesNo::No;

        for (const auto& v : spec.binary_vars) {
            bool yes = uniform01(rng) < (dr ? v.p_pos : v.p_neg);
            if (v.name == "nodal_positivity")
                r.nodal_positivity = yes ? "Positive" : "Negative";
            else if (v.name == "deceased")
                r.deceased = yes ? clinical::YesNo::Yes : clinical::YesNo::No;
            else if (v.name == "radiation")
                r.radiation = yes ? clinical::YesNo::Yes : clinical::YesNo::No;
            else if (v.name == "targeted_therapy")
                r.targeted_therapy = yes ? clinical::YesNo::Yes : clinical::YesNo::No;
            else
                throw SynthError("generator spec field '" + v.name +
                                 "': unknown binary clinical variable");
        }
        for (const auto& v : spec.categorical_vars) {
            int cat = categorical(rng, dr ? v.p_pos : v.p_neg);
            if (v.name == "histology") r.histology = v.categories[cat];
            else if (v.name == "grade") r.grade = v.categories[cat];
            else
                throw SynthError("generator spec field '" + v.name +
                                 "': unknown categorical clinical variable");
        }
        r.label = dr ? clinical::Label::DistantRecurrence
                     : clinical::Label::NoDistantRecurrence;
        r.diagnosis_date = {2010, 1, 1};

        // Narrative: signal sentences from latent Poisson counts, plus
        // class-independent negated/uncertain noise and distractors.
        std::vector<std::string> sentences;
        sentences.push_back("routine breast clinic followup");
        for (const auto& [cui, rate] : spec.concept_rates) {
            int count = poisson(rng, dr ? rate.lambda_pos : rate.lambda_neg);
            if (count > 0) p.latent_concept_counts[cui] = count;
            for (int s = 0; s < count; ++s)
                sentences.push_back("patient has " + phrases[cui] + " noted today");
            int negated = poisson(rng, spec.negated_rate);
            for (int s = 0; s < negated; ++s)
                sentences.push_back("no evidence of " + phrases[cui]);
            int uncertain = poisson(rng, spec.uncertainty_rate);
            for (int s = 0; s < uncertain; ++s)
                sentences.push_back("concern for possible " + phrases[cui]);
        }
        int distractors = poisson(rng, spec.distractor_rate);
        for (int s = 0; s < distractors; ++s)
            sentences.push_back(
                kDistractors[s % (sizeof(kDistractors) / sizeof(kDistractors[0]))]);

        corpus::ClinicalNote note;
        note.patient_id = r.patient_id;
        note.note_id = r.patient_id + "-note1";
        note.note_type = "progress";
        note.date = {2012, 6, 15};
        std::string text;
        for (const auto& s : sentences) text += s + ". ";
        note.text = text;
        cohort.notes.notes.push_back(std::move(note));
        cohort.patients.push_back(std::move(p));
    }
    return cohort;
}

void write_cohort(const Cohort& cohort, const std::string& patients_csv_path,
                  const std::string& notes_jsonl_path) {
    std::vector<clinical::PatientRecord> records;
    records.reserve(cohort.patients.size());
    for (const auto& p : cohort.patients) records.push_back(p.record);
    clinical::write_patients_csv(records, patients_csv_path);
    std::ofstream out(notes_jsonl_path);
    if (!out) throw SynthError("cannot write notes file: " + notes_jsonl_path);
    corpus::write_notes_jsonl(cohort.notes, out);
}

OracleResult bayes_oracle(const GeneratorSpec& spec, const Cohort& cohort) {
    spec.validate();
    OracleResult result;
    if (cohort.patients.empty()) throw SynthError("bayes_oracle: empty cohort");

    auto log_ratio = [](double p, double q) {
        const double eps = 1e-12;
        return std::log(std::max(p, eps)) - std::log(std::max(q, eps));
    };

    std::vector<int> labels;
    for (const auto& p : cohort.patients) {
        const auto& r = p.record;
        double llr = 0.0;
        for (const auto& v : spec.binary_vars) {
            bool yes;
            if (v.name == "nodal_positivity") yes = r.nodal_positivity == "Positive";
            else if (v.name == "deceased") yes = r.deceased == clinical::YesNo::Yes;
            else if (v.name == "radiation") yes = r.radiation == clinical::YesNo::Yes;
            else if (v.name == "targeted_therapy")
                yes = r.targeted_therapy == clinical::YesNo::Yes;
            else
                throw SynthError("bayes_oracle: unknown binary variable " + v.name);
            llr += yes ? log_ratio(v.p_pos, v.p_neg)
                       : log_ratio(1.0 - v.p_pos, 1.0 - v.p_neg);
        }
        for (const auto& v : spec.categorical_vars) {
            const std::string& value = v.name == "histology" ? r.histology : r.grade;
            auto it = std::find(v.categories.begin(), v.categories.end(), value);
            if (it == v.categories.end())
                throw SynthError("bayes_oracle: cohort value '" + value +
                                 "' not generated by this spec");
            size_t cat = static_cast<size_t>(it - v.categories.begin());
            llr += log_ratio(v.p_pos[cat], v.p_neg[cat]);
        }
        for (const auto& [cui, rate] : spec.concept_rates) {
            auto it = p.latent_concept_counts.find(cui);
            double x = it == p.latent_concept_counts.end()
                           ? 0.0
                           : static_cast<double>(it->second);
            double lp = std::max(rate.lambda_pos, 1e-12);
            double ln = std::max(rate.lambda_neg, 1e-12);
            llr += x * std::log(lp / ln) - (lp - ln);
        }
        result.scores.push_back(llr);
        labels.push_back(p.label);
    }
    result.bayes_auc = stats::auc(result.scores, labels);
    return result;
}

}  // namespace recurml::synth
