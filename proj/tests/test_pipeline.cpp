#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "recurml/learner.hpp"
#include "recurml/pipeline.hpp"
#include "recurml/stats_eval.hpp"
#include "recurml/synth.hpp"

using namespace recurml;

namespace {

struct Fixture {
    synth::Cohort cohort;
    std::vector<clinical::PatientRecord> records;
    std::vector<corpus::ContextCue> cues = corpus::default_cues();
    std::vector<tagger::LexiconEntry> lexicon = tagger::default_lexicon();

    explicit Fixture(long n, uint64_t seed = 42) {
        auto spec = synth::default_generator_spec();
        spec.n = n;
        spec.seed = seed;
        cohort = synth::generate(spec);
        for (const auto& p : cohort.patients) records.push_back(p.record);
    }
};

}  // namespace

TEST_CASE("build_dataset aligns patients, labels and counts") {
    Fixture fx(80);
    pipeline::PreprocessReport report;
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{},
                                      &report);
    REQUIRE(ds.size() == 80);
    CHECK(ds.concept_counts.size() == 80);
    CHECK(ds.full_concept_counts.size() == 80);
    CHECK(ds.token_counts.size() == 80);
    CHECK(report.notes_in == 80);
    CHECK(report.notes_kept == 80);
    CHECK(report.sentences_cue_dropped > 0);
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.patient_ids[i] == fx.records[i].patient_id);
        CHECK(ds.labels[i] == fx.cohort.patients[i].label);
        // negated/uncertain noise is filtered, so the dictionary counts
        // reproduce the generator's latent truth
        CHECK(ds.concept_counts[i] == fx.cohort.patients[i].latent_concept_counts);
    }
    CHECK(!ds.dictionary_cuis.empty());
    CHECK(std::is_sorted(ds.dictionary_cuis.begin(), ds.dictionary_cuis.end()));
}

TEST_CASE("patients without notes get empty count maps") {
    Fixture fx(10);
    clinical::PatientRecord extra = fx.records[0];
    extra.patient_id = "NO-NOTES";
    fx.records.push_back(extra);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    REQUIRE(ds.size() == 11);
    CHECK(ds.concept_counts.back().empty());
    CHECK(ds.token_counts.back().empty());
}

TEST_CASE("disabling the cue filter admits noise mentions") {
    Fixture fx(120);
    pipeline::PreprocessOptions with;
    pipeline::PreprocessOptions without;
    without.apply_cue_filter = false;
    without.apply_negation = false;
    auto clean = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                         fx.lexicon, with);
    auto noisy = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                         fx.lexicon, without);
    long clean_total = 0, noisy_total = 0;
    for (size_t i = 0; i < clean.size(); ++i) {
        for (const auto& [c, n] : clean.concept_counts[i]) clean_total += n;
        for (const auto& [c, n] : noisy.concept_counts[i]) noisy_total += n;
    }
    CHECK(noisy_total > clean_total);  // negated/uncertain mentions leak in
}

TEST_CASE("dataset select keeps row alignment") {
    Fixture fx(30);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    auto sub = ds.select({5, 2, 9});
    REQUIRE(sub.size() == 3);
    CHECK(sub.patient_ids[0] == ds.patient_ids[5]);
    CHECK(sub.labels[1] == ds.labels[2]);
    CHECK(sub.concept_counts[2] == ds.concept_counts[9]);
}

TEST_CASE("variant variable counts follow the dictionary arithmetic") {
    Fixture fx(100);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    auto train = pipeline::all_indices(ds.size());

    pipeline::VariantPipeline combined(
        {feat::Variant::filtered_plus_clinical, 0.05});
    combined.fit(ds, train);
    CHECK(combined.variable_count() ==
          static_cast<int>(ds.dictionary_cuis.size()) + 18);

    pipeline::VariantPipeline clin({feat::Variant::clinical_only, 0.05});
    clin.fit(ds, train);
    CHECK(clin.variable_count() == 18);

    pipeline::VariantPipeline filtered({feat::Variant::filtered_concepts, 0.05});
    filtered.fit(ds, train);
    CHECK(filtered.variable_count() ==
          static_cast<int>(ds.dictionary_cuis.size()));
}

TEST_CASE("chi-square variants keep the ceil fraction of columns") {
    Fixture fx(150);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    auto train = pipeline::all_indices(ds.size());

    pipeline::VariantPipeline bow({feat::Variant::bag_of_words, 0.05});
    auto m = bow.fit_transform(ds, train);
    // column count = ceil(0.05 * vocabulary size)
    std::set<std::string> vocab;
    for (const auto& counts : ds.token_counts)
        for (const auto& [tok, n] : counts) vocab.insert(tok);
    CHECK(m.n_cols() ==
          static_cast<size_t>(std::ceil(0.05 * static_cast<double>(vocab.size()))));
    CHECK(bow.variable_count() == static_cast<int>(m.n_cols()));

    pipeline::VariantPipeline full({feat::Variant::full_concepts, 0.05});
    auto fm = full.fit_transform(ds, train);
    CHECK(fm.n_cols() >= 1);
    CHECK(fm.n_cols() <= ds.dictionary_cuis.size());
}

TEST_CASE("fit/transform separation is bit-exact on the training rows") {
    Fixture fx(90);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    auto train = pipeline::all_indices(ds.size());
    for (auto variant :
         {feat::Variant::filtered_plus_clinical, feat::Variant::bag_of_words,
          feat::Variant::clinical_only}) {
        pipeline::VariantPipeline p({variant, 0.05});
        auto fitted = p.fit_transform(ds, train);
        auto again = p.transform(ds, train);
        REQUIRE(fitted.rows.size() == again.rows.size());
        for (size_t i = 0; i < fitted.rows.size(); ++i)
            CHECK(fitted.rows[i] == again.rows[i]);
    }
}

TEST_CASE("transform before fit throws") {
    Fixture fx(20);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    pipeline::VariantPipeline p({feat::Variant::clinical_only, 0.05});
    CHECK_THROWS_AS(p.transform(ds, pipeline::all_indices(ds.size())),
                    pipeline::PipelineError);
}

TEST_CASE("transform only sees fit-time state") {
    Fixture fx(100);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    std::vector<int> train, test;
    for (int i = 0; i < 100; ++i) (i < 70 ? train : test).push_back(i);

    pipeline::VariantPipeline p({feat::Variant::bag_of_words, 0.05});
    auto train_m = p.fit_transform(ds, train);
    auto test_m = p.transform(ds, test);
    REQUIRE(test_m.n_cols() == train_m.n_cols());
    for (size_t j = 0; j < test_m.n_cols(); ++j)
        CHECK(test_m.columns[j].name == train_m.columns[j].name);
    CHECK(test_m.n_rows() == 30);
}

TEST_CASE("end-to-end training beats the clinical-only baseline setup") {
    Fixture fx(700, 7);
    auto ds = pipeline::build_dataset(fx.records, fx.cohort.notes, fx.cues,
                                      fx.lexicon, pipeline::PreprocessOptions{});
    auto plan = stats::stratified_split(ds.labels, 0.7, 1);
    std::vector<int> train, test;
    for (size_t i = 0; i < ds.size(); ++i)
        (plan.assignment[i] == 0 ? train : test).push_back(static_cast<int>(i));

    pipeline::VariantPipeline p({feat::Variant::filtered_plus_clinical, 0.05});
    auto train_m = p.fit_transform(ds, train);
    auto test_m = p.transform(ds, test);

    svm::TrainOptions opts;
    opts.seed = 5;
    auto model = svm::calibrate(svm::train(train_m, opts), train_m, opts);
    std::vector<double> scores;
    for (const auto& row : test_m.rows) scores.push_back(model.predict_proba(row));
    double auc = stats::auc(scores, test_m.labels);
    CHECK(auc > 0.8);  // strong planted signal must be recovered
}
