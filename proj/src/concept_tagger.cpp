#include "recurml/concept_tagger.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace recurml::tagger {

static bool valid_cui(const std::string& cui) {
    if (cui.size() != 8 || cui[0] != 'C') return false;
    for (size_t i = 1; i < 8; ++i)
        if (!std::isdigit(static_cast<unsigned char>(cui[i]))) return false;
    return true;
}

std::vector<LexiconEntry> parse_lexicon(std::istream& in) {
    std::vector<LexiconEntry> entries;
    std::set<std::string> cuis;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto parts = util::split(t, '|');
        if (parts.size() != 4)
            throw LexiconError("lexicon line " + std::to_string(line_no) +
                               ": expected CUI|name|phrases|dict:{0,1}");
        LexiconEntry entry;
        entry.cui = util::trim(parts[0]);
        if (!valid_cui(entry.cui))
            throw LexiconError("lexicon line " + std::to_string(line_no) +
                               ": bad CUI '" + entry.cui + "'");
        if (!cuis.insert(entry.cui).second)
            throw LexiconError("lexicon line " + std::to_string(line_no) +
                               ": duplicate CUI " + entry.cui);
        entry.preferred_name = util::trim(parts[1]);
        std::set<std::vector<std::string>> distinct;
        for (const auto& p : util::split(parts[2], ';')) {
            auto toks = util::tokenize(p);
            if (!toks.empty() && distinct.insert(toks).second)
                entry.phrases.push_back(std::move(toks));
        }
        if (entry.phrases.empty())
            throw LexiconError("lexicon line " + std::to_string(line_no) +
                               ": no phrases");
        std::string dict = util::trim(parts[3]);
        if (dict == "dict:1") entry.in_custom_dictionary = true;
        else if (dict == "dict:0") entry.in_custom_dictionary = false;
        else
            throw LexiconError("lexicon line " + std::to_string(line_no) +
                               ": expected dict:0 or dict:1");
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<LexiconEntry> load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LexiconError("cannot open lexicon file: " + path);
    return parse_lexicon(in);
}

std::vector<LexiconEntry> default_lexicon() {
    static const char* text =
        "C0153678|Secondary malignant neoplasm of pleura|cancer metastatic to pleura;metastatic cancer to pleura|dict:1\n"
        "C0153690|Secondary malignant neoplasm of bone|metastases to bone;bone metastases|dict:1\n"
        "C1967552|IXEMPRA|ixempra|dict:1\n"
        "C0278488|Carcinoma breast stage IV|metastatic breast cancer;breast cancer stage iv;metastatic breast carcinoma|dict:1\n"
        "C0494165|Secondary malignant neoplasm of liver|liver metastases;liver metastatic disease;metastatic disease liver;metastases to the liver|dict:1\n"
        "C0220650|Metastatic malignant neoplasm to brain|brain metastases|dict:1\n"
        "C1266909|Entire bony skeleton|bone|dict:1\n"
        "C2939420|Metastatic Neoplasm|metastatic disease|dict:1\n"
        "C0036525|Metastatic to|metastatic|dict:1\n"
        "C0027627|Neoplasm Metastasis|metastatic disease|dict:1\n"
        "C0346993|Secondary malignant neoplasm of female breast|metastatic breast cancer to the|dict:1\n"
        "C1522484|Metastatic qualifier|metastatic|dict:1\n";
    std::istringstream in(text);
    return parse_lexicon(in);
}

std::set<std::string> dictionary_cuis(const std::vector<LexiconEntry>& lexicon) {
    std::set<std::string> out;
    for (const auto& e : lexicon)
        if (e.in_custom_dictionary) out.insert(e.cui);
    return out;
}

namespace {

struct Candidate {
    size_t start;
    size_t end;
    const LexiconEntry* entry;
};

}  // namespace

std::vector<ConceptMention> tag(const corpus::Sentence& sentence,
                                const std::vector<bool>& negation_mask,
                                const std::vector<LexiconEntry>& lexicon) {
    const auto& tokens = sentence.tokens;
    if (negation_mask.size() != tokens.size())
        throw std::invalid_argument("negation mask length != token count");

    std::vector<Candidate> candidates;
    for (const auto& entry : lexicon) {
        for (const auto& phrase : entry.phrases) {
            if (phrase.empty() || phrase.size() > tokens.size()) continue;
            for (size_t pos = 0; pos + phrase.size() <= tokens.size(); ++pos) {
                bool hit = true;
                for (size_t i = 0; i < phrase.size(); ++i)
                    if (tokens[pos + i] != phrase[i]) { hit = false; break; }
                if (hit) candidates.push_back({pos, pos + phrase.size(), &entry});
            }
        }
    }

    // Longest first, then leftmost, then smallest CUI. Same-span duplicates
    // collapse to the first seen (the max-score tie rule), and overlapping
    // shorter/righter matches are discarded.
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  size_t la = a.end - a.start, lb = b.end - b.start;
                  if (la != lb) return la > lb;
                  if (a.start != b.start) return a.start < b.start;
                  return a.entry->cui < b.entry->cui;
              });

    std::vector<bool> occupied(tokens.size(), false);
    std::vector<ConceptMention> mentions;
    for (const auto& c : candidates) {
        bool clash = false;
        for (size_t i = c.start; i < c.end; ++i)
            if (occupied[i]) { clash = true; break; }
        if (clash) continue;
        for (size_t i = c.start; i < c.end; ++i) occupied[i] = true;
        ConceptMention m;
        m.cui = c.entry->cui;
        m.note_id = sentence.note_id;
        m.sentence_index = sentence.index;
        m.span_start = static_cast<int>(c.start);
        m.span_end = static_cast<int>(c.end);
        m.score = static_cast<double>(c.end - c.start);
        m.negated = false;
        for (size_t i = c.start; i < c.end; ++i)
            if (negation_mask[i]) m.negated = true;
        mentions.push_back(std::move(m));
    }
    std::sort(mentions.begin(), mentions.end(),
              [](const ConceptMention& a, const ConceptMention& b) {
                  return a.span_start < b.span_start;
              });
    return mentions;
}

PatientConceptVector aggregate(const std::string& patient_id,
                               const std::vector<ConceptMention>& mentions,
                               const std::set<std::string>& custom_dictionary,
                               double min_score) {
    PatientConceptVector out;
    out.patient_id = patient_id;
    for (const auto& m : mentions) {
        if (m.negated || m.score < min_score) continue;
        if (!custom_dictionary.count(m.cui)) continue;
        ++out.counts[m.cui];
    }
    return out;
}

PatientConceptVector aggregate_full(const std::string& patient_id,
                                    const std::vector<ConceptMention>& mentions) {
    PatientConceptVector out;
    out.patient_id = patient_id;
    for (const auto& m : mentions) {
        if (m.negated) continue;
        ++out.counts[m.cui];
    }
    return out;
}

}  // namespace recurml::tagger
