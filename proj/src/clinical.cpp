#include "recurml/clinical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace recurml::clinical {

const std::vector<std::string> kPatientCsvColumns = {
    "patient_id", "age_of_diagnosis", "race", "smoking", "alcohol",
    "family_cancer_history", "insurance", "er", "pr", "her2", "p53",
    "nodal_positivity", "histology", "grade", "size", "surgery",
    "deceased", "targeted_therapy", "radiation", "label",
    "diagnosis_date", "death_date"};

DrugList default_drug_list() {
    return DrugList{{"afinitor", "everolimus", "bevacizumab", "avastin",
                     "ibrance", "palbociclib"}};
}

std::set<std::string> default_metastatic_sites() {
    return {"brain", "lung", "bone", "liver"};
}

namespace {

// Collapse case/punctuation so "Ex-smoker", "ex smoker" and "exsmoker" agree.
std::string canon_key(const std::string& s) {
    std::string out;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
        else if (c == '>' || c == '<') out.push_back(ch);
    }
    return out;
}

std::string map_category(const std::string& raw,
                         const std::vector<std::pair<std::string, std::string>>& table,
                         ParseReport& report) {
    std::string key = canon_key(raw);
    for (const auto& [k, v] : table)
        if (k == key) return v;
    if (!key.empty() && key != "unknown") ++report.category_warnings;
    return "Unknown";
}

const std::vector<std::pair<std::string, std::string>> kRace = {
    {"white", "White"}, {"black", "Black"}, {"asian", "Asian"}, {"other", "Other"}};
const std::vector<std::pair<std::string, std::string>> kSmoking = {
    {"yes", "Yes"}, {"no", "No"}, {"exsmoker", "Ex-smoker"}, {"former", "Ex-smoker"}};
const std::vector<std::pair<std::string, std::string>> kAlcohol = {
    {"no", "No"}, {"moderate", "Moderate"}, {"heavy", "Heavy"}, {"former", "Former"}};
const std::vector<std::pair<std::string, std::string>> kYesNoUnknown = {
    {"yes", "Yes"}, {"no", "No"}};
const std::vector<std::pair<std::string, std::string>> kPosNeg = {
    {"positive", "Positive"}, {"pos", "Positive"},
    {"negative", "Negative"}, {"neg", "Negative"}};
const std::vector<std::pair<std::string, std::string>> kHistology = {
    {"idc", "IDC"}, {"dcis", "DCIS"}, {"ilc", "ILC"}};
const std::vector<std::pair<std::string, std::string>> kGrade = {
    {"grade1", "Grade1"}, {"grade2", "Grade2"}, {"grade3", "Grade3"},
    {"1", "Grade1"}, {"2", "Grade2"}, {"3", "Grade3"}};
const std::vector<std::pair<std::string, std::string>> kSize = {
    {"02cm", "0-2cm"}, {"25cm", "2-5cm"}, {"2cm5cm", "2-5cm"}, {">5cm", ">5cm"}};
const std::vector<std::pair<std::string, std::string>> kSurgery = {
    {"mastectomy", "Mastectomy"},
    {"breastconservation", "BreastConservation"},
    {"breastconservationsurgery", "BreastConservation"},
    {"no", "No"}};

YesNo parse_yes_no(const std::string& raw, ParseReport& report) {
    std::string key = canon_key(raw);
    if (key == "yes") return YesNo::Yes;
    if (key == "no" || key.empty()) return YesNo::No;
    ++report.category_warnings;
    return YesNo::No;
}

}  // namespace

std::optional<PatientRecord> parse_record(
    const std::map<std::string, std::string>& row, ParseReport& report) {
    auto get = [&](const std::string& col) -> std::string {
        auto it = row.find(col);
        return it == row.end() ? std::string() : util::trim(it->second);
    };

    PatientRecord r;
    r.patient_id = get("patient_id");
    std::string age_str = get("age_of_diagnosis");
    auto diag = util::parse_date(get("diagnosis_date"));
    if (r.patient_id.empty() || age_str.empty() || !diag) {
        ++report.rejected;
        return std::nullopt;
    }
    char* end = nullptr;
    double age = std::strtod(age_str.c_str(), &end);
    if (end == age_str.c_str() || !(age > 0.0 && age < 130.0)) {
        ++report.rejected;
        return std::nullopt;
    }
    r.age_of_diagnosis = age;
    r.diagnosis_date = *diag;
    r.death_date = util::parse_date(get("death_date"));

    r.race = map_category(get("race"), kRace, report);
    r.smoking = map_category(get("smoking"), kSmoking, report);
    r.alcohol = map_category(get("alcohol"), kAlcohol, report);
    r.family_cancer_history =
        map_category(get("family_cancer_history"), kYesNoUnknown, report);
    r.insurance = get("insurance").empty() ? "Unknown" : get("insurance");
    r.er = map_category(get("er"), kPosNeg, report);
    r.pr = map_category(get("pr"), kPosNeg, report);
    r.her2 = map_category(get("her2"), kPosNeg, report);
    r.p53 = map_category(get("p53"), kPosNeg, report);
    r.nodal_positivity = map_category(get("nodal_positivity"), kPosNeg, report);
    r.histology = map_category(get("histology"), kHistology, report);
    r.grade = map_category(get("grade"), kGrade, report);
    r.size = map_category(get("size"), kSize, report);
    r.surgery = map_category(get("surgery"), kSurgery, report);
    r.deceased = parse_yes_no(get("deceased"), report);
    r.targeted_therapy = parse_yes_no(get("targeted_therapy"), report);
    r.radiation = parse_yes_no(get("radiation"), report);

    std::string label = canon_key(get("label"));
    if (label == "distantrecurrence" || label == "1" || label == "yes")
        r.label = Label::DistantRecurrence;
    else if (label == "nodistantrecurrence" || label == "0" || label == "no")
        r.label = Label::NoDistantRecurrence;

    ++report.parsed;
    return r;
}

std::vector<PatientRecord> load_patients_csv(const std::string& path,
                                             ParseReport* report) {
    std::ifstream in(path);
    if (!in) throw ClinicalError("cannot open patients file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ClinicalError("empty patients file: " + path);
    auto header = util::parse_csv_line(line);
    for (auto& h : header) h = util::trim(h);

    ParseReport local;
    std::vector<PatientRecord> records;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        auto fields = util::parse_csv_line(line);
        std::map<std::string, std::string> row;
        for (size_t i = 0; i < header.size() && i < fields.size(); ++i)
            row[header[i]] = fields[i];
        if (auto rec = parse_record(row, local)) records.push_back(std::move(*rec));
    }
    if (report) *report = local;
    return records;
}

void write_patients_csv(const std::vector<PatientRecord>& records,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ClinicalError("cannot write patients file: " + path);
    for (size_t i = 0; i < kPatientCsvColumns.size(); ++i)
        out << (i ? "," : "") << kPatientCsvColumns[i];
    out << "\n";
    auto yn = [](YesNo v) { return v == YesNo::Yes ? "Yes" : "No"; };
    for (const auto& r : records) {
        std::ostringstream age;
        age << r.age_of_diagnosis;
        out << util::csv_escape(r.patient_id) << "," << age.str() << ","
            << r.race << "," << r.smoking << "," << r.alcohol << ","
            << r.family_cancer_history << "," << util::csv_escape(r.insurance)
            << "," << r.er << "," << r.pr << "," << r.her2 << "," << r.p53
            << "," << r.nodal_positivity << "," << r.histology << ","
            << r.grade << "," << r.size << "," << r.surgery << ","
            << yn(r.deceased) << "," << yn(r.targeted_therapy) << ","
            << yn(r.radiation) << ","
            << (r.label ? (*r.label == Label::DistantRecurrence
                               ? "DistantRecurrence"
                               : "NoDistantRecurrence")
                        : "")
            << "," << r.diagnosis_date.to_string() << ","
            << (r.death_date ? r.death_date->to_string() : "") << "\n";
    }
}

YesNo derive_deceased(const std::optional<util::Date>& death_date,
                      std::optional<double> death_age) {
    if (death_date.has_value() != death_age.has_value())
        throw ClinicalError("death age must be present iff death date is");
    if (death_date && *death_age < 75.0) return YesNo::Yes;
    return YesNo::No;
}

YesNo derive_targeted_therapy(const std::vector<std::string>& medications,
                              const DrugList& drugs) {
    for (const auto& med : medications) {
        auto tokens = util::tokenize(med);
        for (const auto& tok : tokens)
            if (drugs.names.count(tok)) return YesNo::Yes;
    }
    return YesNo::No;
}

YesNo derive_radiation(const std::vector<std::string>& sites,
                       const std::set<std::string>& metastatic_sites) {
    for (const auto& site : sites)
        if (metastatic_sites.count(util::trim(util::to_lower(site))))
            return YesNo::Yes;
    return YesNo::No;
}

namespace {

const std::vector<std::string> kRaceDomain = {"White", "Black", "Asian", "Other"};
const std::vector<std::string> kSmokingDomain = {"Yes", "No", "Ex-smoker", "Unknown"};
const std::vector<std::string> kAlcoholDomain = {"No", "Moderate", "Heavy", "Former",
                                                 "Unknown"};
const std::vector<std::string> kYnuDomain = {"Yes", "No", "Unknown"};
const std::vector<std::string> kPnuDomain = {"Positive", "Negative", "Unknown"};
const std::vector<std::string> kHistologyDomain = {"IDC", "DCIS", "ILC", "Unknown"};
const std::vector<std::string> kGradeDomain = {"Grade1", "Grade2", "Grade3",
                                               "Unknown"};
const std::vector<std::string> kSizeDomain = {"0-2cm", "2-5cm", ">5cm", "Unknown"};
const std::vector<std::string> kSurgeryDomain = {"Mastectomy", "BreastConservation",
                                                 "No", "Unknown"};

void one_hot(std::vector<double>& out, const std::vector<std::string>& domain,
             const std::string& value) {
    for (const auto& cat : domain) out.push_back(value == cat ? 1.0 : 0.0);
}

}  // namespace

void ClinicalEncoder::fit(const std::vector<PatientRecord>& training) {
    if (training.empty()) throw ClinicalError("cannot fit encoder on empty set");
    std::vector<double> ages;
    ages.reserve(training.size());
    std::set<std::string> insurance;
    for (const auto& r : training) {
        ages.push_back(r.age_of_diagnosis);
        insurance.insert(r.insurance);
    }
    age_mean_ = util::mean(ages);
    age_sd_ = util::sample_sd(ages);
    if (age_sd_ <= 0.0) age_sd_ = 1.0;
    insurance_categories_.assign(insurance.begin(), insurance.end());

    columns_.clear();
    columns_.push_back("age_z");
    auto add = [&](const std::string& var, const std::vector<std::string>& dom) {
        for (const auto& cat : dom) columns_.push_back(var + "=" + cat);
    };
    add("race", kRaceDomain);
    add("smoking", kSmokingDomain);
    add("alcohol", kAlcoholDomain);
    add("family_cancer_history", kYnuDomain);
    add("insurance", insurance_categories_);
    add("er", kPnuDomain);
    add("pr", kPnuDomain);
    add("her2", kPnuDomain);
    add("p53", kPnuDomain);
    add("nodal_positivity", kPnuDomain);
    add("histology", kHistologyDomain);
    add("grade", kGradeDomain);
    add("size", kSizeDomain);
    add("surgery", kSurgeryDomain);
    columns_.push_back("deceased");
    columns_.push_back("targeted_therapy");
    columns_.push_back("radiation");
    fitted_ = true;
}

std::vector<double> ClinicalEncoder::encode(const PatientRecord& r) const {
    if (!fitted_) throw ClinicalError("encoder used before fit");
    std::vector<double> out;
    out.reserve(columns_.size());
    out.push_back((r.age_of_diagnosis - age_mean_) / age_sd_);
    one_hot(out, kRaceDomain, r.race);
    one_hot(out, kSmokingDomain, r.smoking);
    one_hot(out, kAlcoholDomain, r.alcohol);
    one_hot(out, kYnuDomain, r.family_cancer_history);
    one_hot(out, insurance_categories_, r.insurance);  // unseen -> all zeros
    one_hot(out, kPnuDomain, r.er);
    one_hot(out, kPnuDomain, r.pr);
    one_hot(out, kPnuDomain, r.her2);
    one_hot(out, kPnuDomain, r.p53);
    one_hot(out, kPnuDomain, r.nodal_positivity);
    one_hot(out, kHistologyDomain, r.histology);
    one_hot(out, kGradeDomain, r.grade);
    one_hot(out, kSizeDomain, r.size);
    one_hot(out, kSurgeryDomain, r.surgery);
    out.push_back(r.deceased == YesNo::Yes ? 1.0 : 0.0);
    out.push_back(r.targeted_therapy == YesNo::Yes ? 1.0 : 0.0);
    out.push_back(r.radiation == YesNo::Yes ? 1.0 : 0.0);
    return out;
}

const std::vector<std::string>& ClinicalEncoder::column_names() const {
    if (!fitted_) throw ClinicalError("encoder used before fit");
    return columns_;
}

}  // namespace recurml::clinical
