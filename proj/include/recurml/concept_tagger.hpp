#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "recurml/corpus.hpp"

namespace recurml::tagger {

struct LexiconEntry {
    std::string cui;             // C + 7 digits
    std::string preferred_name;
    std::vector<std::vector<std::string>> phrases;  // lowercase token sequences
    bool in_custom_dictionary = true;
};

struct ConceptMention {
    std::string cui;
    std::string note_id;
    int sentence_index = 0;
    int span_start = 0;
    int span_end = 0;    // exclusive
    double score = 0.0;  // matched span length in tokens
    bool negated = false;
};

struct PatientConceptVector {
    std::string patient_id;
    std::map<std::string, int> counts;
};

struct LexiconError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Lines `CUI|preferred_name|phrase1;phrase2;...|dict:{0,1}`; '#' comments.
std::vector<LexiconEntry> parse_lexicon(std::istream& in);
std::vector<LexiconEntry> load_lexicon(const std::string& path);

/// The published top-coefficient concepts with their partial sentences.
std::vector<LexiconEntry> default_lexicon();

std::set<std::string> dictionary_cuis(const std::vector<LexiconEntry>& lexicon);

/// Exact contiguous token-subsequence matching. Overlaps resolve
/// longest-match-first then left-to-right; at a resolved span the entry with
/// the lexicographically smallest CUI wins (all same-span scores tie, since
/// score = span length). A mention is negated iff any span token is masked.
std::vector<ConceptMention> tag(const corpus::Sentence& sentence,
                                const std::vector<bool>& negation_mask,
                                const std::vector<LexiconEntry>& lexicon);

/// Count non-negated mentions with score >= min_score whose CUI is in the
/// custom dictionary.
PatientConceptVector aggregate(const std::string& patient_id,
                               const std::vector<ConceptMention>& mentions,
                               const std::set<std::string>& custom_dictionary,
                               double min_score = 1.0);

/// Count all non-negated mentions regardless of dictionary membership or
/// score (the unfiltered concept stream).
PatientConceptVector aggregate_full(const std::string& patient_id,
                                    const std::vector<ConceptMention>& mentions);

}  // namespace recurml::tagger
