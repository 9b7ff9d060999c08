#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recurml/util.hpp"

namespace recurml::clinical {

enum class YesNo { Yes, No };
enum class Label { DistantRecurrence, NoDistantRecurrence };

struct PatientRecord {
    std::string patient_id;
    double age_of_diagnosis = 0.0;
    std::string race;            // White, Black, Asian, Other
    std::string smoking;         // Yes, No, Ex-smoker, Unknown
    std::string alcohol;         // No, Moderate, Heavy, Former, Unknown
    std::string family_cancer_history;  // Yes, No, Unknown
    std::string insurance;       // open-ended
    std::string er, pr, her2, p53, nodal_positivity;  // Positive, Negative, Unknown
    std::string histology;       // IDC, DCIS, ILC, Unknown
    std::string grade;           // Grade1, Grade2, Grade3, Unknown
    std::string size;            // 0-2cm, 2-5cm, >5cm, Unknown
    std::string surgery;         // Mastectomy, BreastConservation, No, Unknown
    YesNo deceased = YesNo::No;
    YesNo targeted_therapy = YesNo::No;
    YesNo radiation = YesNo::No;
    std::optional<Label> label;
    util::Date diagnosis_date;
    std::optional<util::Date> death_date;
};

struct DrugList {
    std::set<std::string> names;
};

DrugList default_drug_list();
std::set<std::string> default_metastatic_sites();

struct ParseReport {
    long parsed = 0;
    long rejected = 0;
    long category_warnings = 0;  // out-of-domain values mapped to Unknown
};

struct ClinicalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Column order for the patients CSV; parse is header-driven.
extern const std::vector<std::string> kPatientCsvColumns;

std::optional<PatientRecord> parse_record(
    const std::map<std::string, std::string>& row, ParseReport& report);

std::vector<PatientRecord> load_patients_csv(const std::string& path,
                                             ParseReport* report = nullptr);
void write_patients_csv(const std::vector<PatientRecord>& records,
                        const std::string& path);

YesNo derive_deceased(const std::optional<util::Date>& death_date,
                      std::optional<double> death_age);
YesNo derive_targeted_therapy(const std::vector<std::string>& medications,
                              const DrugList& drugs);
YesNo derive_radiation(const std::vector<std::string>& sites,
                       const std::set<std::string>& metastatic_sites);

/// One-hot encoder for the 18 Table-2 variables. Insurance categories and
/// age mean/sd come from the training set only.
class ClinicalEncoder {
public:
    void fit(const std::vector<PatientRecord>& training);
    bool fitted() const { return fitted_; }

    std::vector<double> encode(const PatientRecord& record) const;
    const std::vector<std::string>& column_names() const;
    static constexpr int kVariableCount = 18;

    double age_mean() const { return age_mean_; }
    double age_sd() const { return age_sd_; }

private:
    bool fitted_ = false;
    double age_mean_ = 0.0;
    double age_sd_ = 1.0;
    std::vector<std::string> insurance_categories_;
    std::vector<std::string> columns_;
};

}  // namespace recurml::clinical
