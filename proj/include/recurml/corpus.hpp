#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "recurml/util.hpp"

namespace recurml::corpus {

struct ClinicalNote {
    std::string patient_id;
    std::string note_id;
    std::string note_type;  // progress, pathology, telephone, ... , other
    util::Date date;
    std::string text;
};

struct Sentence {
    std::string note_id;
    int index = 0;
    std::string text;
    std::vector<std::string> tokens;
};

enum class CueCategory {
    negation_sentence,
    uncertainty_sentence,
    negex_trigger_pre,
    negex_trigger_post,
    negex_terminator,
};

struct ContextCue {
    std::vector<std::string> phrase;  // lowercase token sequence
    CueCategory category;
    // Surface variants matched in addition to the base phrase
    // (e.g. deny -> denies, denied). Each is a token sequence.
    std::vector<std::vector<std::string>> inflections;
};

struct Corpus {
    std::vector<ClinicalNote> notes;
    long rejected_rows = 0;
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Read JSON-lines note rows (patient_id, note_id, note_type, date, text).
/// Malformed rows are counted and skipped; exact duplicate texts per patient
/// (after whitespace normalization) collapse to the earliest-dated copy.
Corpus ingest(std::istream& in);
Corpus ingest_file(const std::string& path);

void write_notes_jsonl(const Corpus& corpus, std::ostream& out);

struct FilterReport {
    long kept = 0;
    long dropped_pre_diagnosis = 0;
    long dropped_post_censor = 0;
    long dropped_no_breast = 0;
    long dropped_unknown_patient = 0;  // warning count
};

/// Keep notes dated strictly after the patient's diagnosis, at or before
/// censor_date, and containing "breast" (case-insensitive).
Corpus filter_notes(const Corpus& corpus,
                    const std::map<std::string, util::Date>& diagnosis_date_by_patient,
                    util::Date censor_date, FilterReport* report = nullptr);

/// Split on sentence-ending punctuation followed by whitespace and on
/// newlines; strip non-printable-ASCII before tokenizing. Sentences that
/// tokenize to nothing are dropped.
std::vector<Sentence> segment(const ClinicalNote& note);

std::vector<ContextCue> parse_cue_file(std::istream& in);
std::vector<ContextCue> load_cues(const std::string& path);

/// The eight published contextual cues plus a standard NegEx trigger set.
std::vector<ContextCue> default_cues();

struct CueFilterResult {
    std::vector<Sentence> kept;
    long dropped = 0;
};

/// Remove any sentence containing a negation_sentence or uncertainty_sentence
/// cue phrase (or one of its inflections) as a contiguous token subsequence.
CueFilterResult drop_cued_sentences(const std::vector<Sentence>& sentences,
                                    const std::vector<ContextCue>& cues);

inline constexpr int kNegexWindow = 5;

/// Per-token negation mask: tokens within kNegexWindow after a pre-trigger
/// (or before a post-trigger), stopping at any terminator or sentence edge.
std::vector<bool> negex_scope(const Sentence& sentence,
                              const std::vector<ContextCue>& cues);

}  // namespace recurml::corpus
