#pragma once

#include <map>
#include <string>
#include <vector>

#include "recurml/clinical.hpp"
#include "recurml/corpus.hpp"

namespace recurml::synth {

struct SynthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BinaryVariable {
    std::string name;
    double p_pos = 0.0;  // P(Yes | distant recurrence)
    double p_neg = 0.0;  // P(Yes | no distant recurrence)
};

struct CategoricalVariable {
    std::string name;
    std::vector<std::string> categories;
    std::vector<double> p_pos;  // simplex over categories given DR
    std::vector<double> p_neg;  // given no DR
};

struct ConceptRate {
    double lambda_pos = 0.0;  // Poisson mention mean given DR
    double lambda_neg = 0.0;
};

struct GeneratorSpec {
    long n = 5000;
    double prevalence = 0.099;
    uint64_t seed = 42;
    std::vector<BinaryVariable> binary_vars;
    std::vector<CategoricalVariable> categorical_vars;
    std::map<std::string, ConceptRate> concept_rates;  // keyed by CUI
    double negated_rate = 0.7;
    double uncertainty_rate = 0.7;
    double distractor_rate = 2.0;

    void validate() const;  // throws SynthError with a field-level message
};

/// Rates calibrated to the published recurrence/non-recurrence contrasts.
GeneratorSpec default_generator_spec();

GeneratorSpec parse_generator_spec(std::istream& in);
GeneratorSpec load_generator_spec(const std::string& path);
void write_generator_spec(const GeneratorSpec& spec, std::ostream& out);

struct GeneratedPatient {
    clinical::PatientRecord record;
    int label = -1;  // +1 distant recurrence
    std::map<std::string, int> latent_concept_counts;  // true (non-negated)
};

struct Cohort {
    std::vector<GeneratedPatient> patients;
    corpus::Corpus notes;
};

/// Deterministic given spec.seed; each patient draws from a private
/// sub-seeded stream, so output is parallelism-independent.
Cohort generate(const GeneratorSpec& spec);

void write_cohort(const Cohort& cohort, const std::string& patients_csv_path,
                  const std::string& notes_jsonl_path);

struct OracleResult {
    double bayes_auc = 0.5;
    std::vector<double> scores;  // per-patient log-likelihood ratio
};

/// Exact log P(observables | DR) - log P(observables | no DR) from the
/// generator parameters; an AUC upper bound for any trained classifier.
OracleResult bayes_oracle(const GeneratorSpec& spec, const Cohort& cohort);

}  // namespace recurml::synth
