#include "recurml/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace recurml::corpus {

using nlohmann::json;

Corpus ingest(std::istream& in) {
    if (!in.good()) throw IngestError("unreadable note input stream");
    Corpus corpus;
    // patient_id -> normalized text -> index into corpus.notes
    std::map<std::string, std::map<std::string, size_t>> seen;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            ++corpus.rejected_rows;
            continue;
        }
        ClinicalNote note;
        note.patient_id = row.value("patient_id", "");
        note.note_id = row.value("note_id", "");
        note.note_type = row.value("note_type", "other");
        std::string date_str = row.value("date", "");
        if (!row.contains("text") || !row["text"].is_string() ||
            note.patient_id.empty() || date_str.empty()) {
            ++corpus.rejected_rows;
            continue;
        }
        auto date = util::parse_date(date_str);
        if (!date) {
            ++corpus.rejected_rows;
            continue;
        }
        note.date = *date;
        note.text = row["text"].get<std::string>();
        if (note.note_id.empty())
            note.note_id = note.patient_id + "-n" + std::to_string(line_no);

        std::string key = util::normalize_whitespace(note.text);
        auto& per_patient = seen[note.patient_id];
        auto it = per_patient.find(key);
        if (it == per_patient.end()) {
            per_patient.emplace(key, corpus.notes.size());
            corpus.notes.push_back(std::move(note));
        } else if (note.date < corpus.notes[it->second].date) {
            corpus.notes[it->second] = std::move(note);
        }
    }
    return corpus;
}

Corpus ingest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open notes file: " + path);
    return ingest(in);
}

void write_notes_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& n : corpus.notes) {
        json row = {{"patient_id", n.patient_id},
                    {"note_id", n.note_id},
                    {"note_type", n.note_type},
                    {"date", n.date.to_string()},
                    {"text", n.text}};
        out << row.dump() << "\n";
    }
}

Corpus filter_notes(const Corpus& corpus,
                    const std::map<std::string, util::Date>& diagnosis_date_by_patient,
                    util::Date censor_date, FilterReport* report) {
    Corpus out;
    out.rejected_rows = corpus.rejected_rows;
    FilterReport local;
    for (const auto& note : corpus.notes) {
        auto it = diagnosis_date_by_patient.find(note.patient_id);
        if (it == diagnosis_date_by_patient.end()) {
            ++local.dropped_unknown_patient;
            continue;
        }
        if (!(note.date > it->second)) {
            ++local.dropped_pre_diagnosis;
            continue;
        }
        if (note.date > censor_date) {
            ++local.dropped_post_censor;
            continue;
        }
        std::string lower = util::to_lower(note.text);
        if (lower.find("breast") == std::string::npos) {
            ++local.dropped_no_breast;
            continue;
        }
        ++local.kept;
        out.notes.push_back(note);
    }
    if (report) *report = local;
    return out;
}

std::vector<Sentence> segment(const ClinicalNote& note) {
    // Strip characters outside printable ASCII; tabs/CR become spaces so
    // token boundaries survive.
    std::string cleaned;
    cleaned.reserve(note.text.size());
    for (char ch : note.text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (c == '\n') cleaned.push_back('\n');
        else if (c == '\t' || c == '\r') cleaned.push_back(' ');
        else if (c >= 0x20 && c <= 0x7E) cleaned.push_back(ch);
    }

    std::vector<Sentence> sentences;
    size_t start = 0;
    auto flush = [&](size_t end) {
        std::string raw = cleaned.substr(start, end - start);
        auto tokens = util::tokenize(raw);
        if (!tokens.empty()) {
            Sentence s;
            s.note_id = note.note_id;
            s.index = static_cast<int>(sentences.size());
            s.text = util::trim(raw);
            s.tokens = std::move(tokens);
            sentences.push_back(std::move(s));
        }
        start = end;
    };
    for (size_t i = 0; i < cleaned.size(); ++i) {
        char c = cleaned[i];
        if (c == '\n') {
            flush(i);
            start = i + 1;
        } else if ((c == '.' || c == '?' || c == '!') &&
                   (i + 1 == cleaned.size() || cleaned[i + 1] == ' ' ||
                    cleaned[i + 1] == '\n')) {
            flush(i + 1);
        }
    }
    flush(cleaned.size());
    return sentences;
}

static CueCategory parse_category(const std::string& s, long line_no) {
    if (s == "negation_sentence") return CueCategory::negation_sentence;
    if (s == "uncertainty_sentence") return CueCategory::uncertainty_sentence;
    if (s == "negex_trigger_pre") return CueCategory::negex_trigger_pre;
    if (s == "negex_trigger_post") return CueCategory::negex_trigger_post;
    if (s == "negex_terminator") return CueCategory::negex_terminator;
    throw IngestError("cue file line " + std::to_string(line_no) +
                      ": unknown category '" + s + "'");
}

std::vector<ContextCue> parse_cue_file(std::istream& in) {
    std::vector<ContextCue> cues;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto parts = util::split(t, '|');
        if (parts.size() < 2 || parts.size() > 3)
            throw IngestError("cue file line " + std::to_string(line_no) +
                              ": expected phrase|category[|inflections]");
        ContextCue cue;
        cue.phrase = util::tokenize(parts[0]);
        if (cue.phrase.empty())
            throw IngestError("cue file line " + std::to_string(line_no) +
                              ": empty phrase");
        cue.category = parse_category(util::trim(parts[1]), line_no);
        if (parts.size() == 3) {
            for (const auto& infl : util::split(parts[2], ';')) {
                auto toks = util::tokenize(infl);
                if (!toks.empty()) cue.inflections.push_back(std::move(toks));
            }
        }
        cues.push_back(std::move(cue));
    }
    return cues;
}

std::vector<ContextCue> load_cues(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open cue file: " + path);
    return parse_cue_file(in);
}

std::vector<ContextCue> default_cues() {
    static const char* text =
        // Published negative contextual cues.
        "no|negation_sentence\n"
        "rule out|negation_sentence|rules out;ruled out;ruling out\n"
        "deny|negation_sentence|denies;denied;denying\n"
        "unremarkable|negation_sentence\n"
        // Published uncertain contextual cues.
        "risk|uncertainty_sentence|risks\n"
        "concern|uncertainty_sentence|concerns;concerned;concerning\n"
        "worry|uncertainty_sentence|worries;worried;worrying\n"
        "evaluation|uncertainty_sentence|evaluations\n"
        // Standard NegEx triggers and terminators.
        "no evidence of|negex_trigger_pre\n"
        "no|negex_trigger_pre\n"
        "not|negex_trigger_pre\n"
        "without|negex_trigger_pre\n"
        "denies|negex_trigger_pre|denied;deny\n"
        "negative for|negex_trigger_pre\n"
        "absence of|negex_trigger_pre\n"
        "free of|negex_trigger_pre\n"
        "rule out|negex_trigger_pre|rules out;ruled out\n"
        "unlikely|negex_trigger_post\n"
        "was ruled out|negex_trigger_post|is ruled out\n"
        "but|negex_terminator\n"
        "however|negex_terminator\n"
        "although|negex_terminator\n"
        "aside from|negex_terminator\n"
        "except|negex_terminator\n"
        "apart from|negex_terminator\n";
    std::istringstream in(text);
    return parse_cue_file(in);
}

static bool matches_at(const std::vector<std::string>& tokens, size_t pos,
                       const std::vector<std::string>& phrase) {
    if (pos + phrase.size() > tokens.size()) return false;
    for (size_t i = 0; i < phrase.size(); ++i)
        if (tokens[pos + i] != phrase[i]) return false;
    return true;
}

static bool contains_phrase(const std::vector<std::string>& tokens,
                            const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    for (size_t pos = 0; pos + phrase.size() <= tokens.size(); ++pos)
        if (matches_at(tokens, pos, phrase)) return true;
    return false;
}

static bool cue_hits(const std::vector<std::string>& tokens, const ContextCue& cue) {
    if (contains_phrase(tokens, cue.phrase)) return true;
    for (const auto& infl : cue.inflections)
        if (contains_phrase(tokens, infl)) return true;
    return false;
}

CueFilterResult drop_cued_sentences(const std::vector<Sentence>& sentences,
                                    const std::vector<ContextCue>& cues) {
    CueFilterResult result;
    for (const auto& s : sentences) {
        bool drop = false;
        for (const auto& cue : cues) {
            if (cue.category != CueCategory::negation_sentence &&
                cue.category != CueCategory::uncertainty_sentence)
                continue;
            if (cue_hits(s.tokens, cue)) {
                drop = true;
                break;
            }
        }
        if (drop) ++result.dropped;
        else result.kept.push_back(s);
    }
    return result;
}

namespace {

struct TriggerMatch {
    size_t start;
    size_t end;  // exclusive
    CueCategory category;
};

// All occurrences of a cue's phrase variants as [start, end) spans.
void collect_matches(const std::vector<std::string>& tokens, const ContextCue& cue,
                     std::vector<TriggerMatch>& out) {
    auto scan = [&](const std::vector<std::string>& phrase) {
        if (phrase.empty() || phrase.size() > tokens.size()) return;
        for (size_t pos = 0; pos + phrase.size() <= tokens.size(); ++pos)
            if (matches_at(tokens, pos, phrase))
                out.push_back({pos, pos + phrase.size(), cue.category});
    };
    scan(cue.phrase);
    for (const auto& infl : cue.inflections) scan(infl);
}

}  // namespace

std::vector<bool> negex_scope(const Sentence& sentence,
                              const std::vector<ContextCue>& cues) {
    const auto& tokens = sentence.tokens;
    std::vector<bool> mask(tokens.size(), false);

    std::vector<TriggerMatch> triggers;
    std::vector<TriggerMatch> terminators;
    for (const auto& cue : cues) {
        if (cue.category == CueCategory::negex_trigger_pre ||
            cue.category == CueCategory::negex_trigger_post)
            collect_matches(tokens, cue, triggers);
        else if (cue.category == CueCategory::negex_terminator)
            collect_matches(tokens, cue, terminators);
    }

    // Longest-first so "no evidence of" wins over "no" at the same site;
    // overlapping shorter triggers are discarded.
    std::sort(triggers.begin(), triggers.end(), [](const auto& a, const auto& b) {
        size_t la = a.end - a.start, lb = b.end - b.start;
        if (la != lb) return la > lb;
        return a.start < b.start;
    });
    std::vector<bool> trigger_token(tokens.size(), false);
    std::vector<TriggerMatch> active;
    for (const auto& t : triggers) {
        bool overlap = false;
        for (size_t i = t.start; i < t.end; ++i)
            if (trigger_token[i]) overlap = true;
        if (overlap) continue;
        for (size_t i = t.start; i < t.end; ++i) trigger_token[i] = true;
        active.push_back(t);
    }

    std::vector<bool> terminator_start(tokens.size(), false);
    for (const auto& t : terminators) terminator_start[t.start] = true;

    for (const auto& t : active) {
        if (t.category == CueCategory::negex_trigger_pre) {
            size_t limit = std::min(tokens.size(), t.end + kNegexWindow);
            for (size_t i = t.end; i < limit; ++i) {
                if (terminator_start[i]) break;
                mask[i] = true;
            }
        } else {  // post-trigger: window runs backwards from the trigger
            size_t lo = t.start >= kNegexWindow ? t.start - kNegexWindow : 0;
            for (size_t i = t.start; i-- > lo;) {
                if (terminator_start[i]) break;
                mask[i] = true;
            }
        }
    }
    return mask;
}

}  // namespace recurml::corpus
