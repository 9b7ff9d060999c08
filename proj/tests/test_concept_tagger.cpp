#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "recurml/concept_tagger.hpp"

using namespace recurml;

namespace {

corpus::Sentence make_sentence(const std::string& text) {
    corpus::Sentence s;
    s.note_id = "n1";
    s.index = 0;
    s.text = text;
    s.tokens = util::tokenize(text);
    return s;
}

std::vector<tagger::ConceptMention> tag_text(
    const std::string& text, const std::vector<tagger::LexiconEntry>& lexicon) {
    auto s = make_sentence(text);
    std::vector<bool> mask(s.tokens.size(), false);
    return tagger::tag(s, mask, lexicon);
}

}  // namespace

TEST_CASE("default lexicon carries the published concepts") {
    auto lex = tagger::default_lexicon();
    CHECK(lex.size() == 12);
    auto find = [&](const std::string& cui) -> const tagger::LexiconEntry* {
        for (const auto& e : lex)
            if (e.cui == cui) return &e;
        return nullptr;
    };
    auto* stage4 = find("C0278488");
    REQUIRE(stage4 != nullptr);
    bool has_phrase = false;
    for (const auto& p : stage4->phrases)
        if (p == std::vector<std::string>{"metastatic", "breast", "cancer"})
            has_phrase = true;
    CHECK(has_phrase);
    auto* ixempra = find("C1967552");
    REQUIRE(ixempra != nullptr);
    CHECK(ixempra->phrases[0] == std::vector<std::string>{"ixempra"});
}

TEST_CASE("lexicon parse rejects duplicate CUIs and bad lines") {
    std::istringstream dup(
        "C0000001|a|foo|dict:1\n"
        "C0000001|b|bar|dict:1\n");
    CHECK_THROWS_AS(tagger::parse_lexicon(dup), tagger::LexiconError);
    std::istringstream bad_cui("X123|a|foo|dict:1\n");
    CHECK_THROWS_AS(tagger::parse_lexicon(bad_cui), tagger::LexiconError);
    std::istringstream bad_dict("C0000001|a|foo|dict:2\n");
    CHECK_THROWS_AS(tagger::parse_lexicon(bad_dict), tagger::LexiconError);
    std::istringstream no_phrase("C0000001|a||dict:1\n");
    CHECK_THROWS_AS(tagger::parse_lexicon(no_phrase), tagger::LexiconError);
}

TEST_CASE("tag finds the longest phrase at a site") {
    auto lex = tagger::default_lexicon();
    auto mentions = tag_text("cancer metastatic to pleura", lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].cui == "C0153678");
    CHECK(mentions[0].span_start == 0);
    CHECK(mentions[0].span_end == 4);
    CHECK(mentions[0].score == 4.0);
}

TEST_CASE("tag scores by span length") {
    auto lex = tagger::default_lexicon();
    auto mentions = tag_text("brain metastases", lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].cui == "C0220650");
    CHECK(mentions[0].score == 2.0);
}

TEST_CASE("same-span tie goes to the smaller CUI") {
    auto lex = tagger::default_lexicon();
    // "metastatic" matches both C0036525 and C1522484
    auto mentions = tag_text("metastatic", lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].cui == "C0036525");
    // "metastatic disease" matches both C0027627 and C2939420
    mentions = tag_text("metastatic disease", lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].cui == "C0027627");
}

TEST_CASE("longest match beats contained shorter matches") {
    auto lex = tagger::default_lexicon();
    auto mentions = tag_text("metastatic breast cancer confirmed", lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].cui == "C0278488");
    mentions = tag_text("bone metastases", lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].cui == "C0153690");  // not C1266909 "bone"
}

TEST_CASE("negated spans are flagged") {
    auto lex = tagger::default_lexicon();
    auto s = make_sentence("no evidence of bone metastases");
    auto mask = corpus::negex_scope(s, corpus::default_cues());
    auto mentions = tagger::tag(s, mask, lex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].negated);
}

TEST_CASE("tag requires a mask of matching length") {
    auto lex = tagger::default_lexicon();
    auto s = make_sentence("bone metastases");
    std::vector<bool> short_mask(1, false);
    CHECK_THROWS(tagger::tag(s, short_mask, lex));
}

TEST_CASE("tag is deterministic") {
    auto lex = tagger::default_lexicon();
    auto a = tag_text("liver metastases and brain metastases and bone", lex);
    auto b = tag_text("liver metastases and brain metastases and bone", lex);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].cui == b[i].cui);
        CHECK(a[i].span_start == b[i].span_start);
    }
}

TEST_CASE("aggregate filters negated, low-score and off-dictionary mentions") {
    auto dict = std::set<std::string>{"C0153690"};
    std::vector<tagger::ConceptMention> mentions;
    tagger::ConceptMention m;
    m.cui = "C0153690";
    m.score = 2.0;
    mentions.push_back(m);           // counted
    m.negated = true;
    mentions.push_back(m);           // negated -> dropped
    m.negated = false;
    m.score = 0.5;
    mentions.push_back(m);           // below min_score -> dropped
    m.score = 2.0;
    m.cui = "C0999999";
    mentions.push_back(m);           // off dictionary -> dropped

    auto vec = tagger::aggregate("p1", mentions, dict);
    REQUIRE(vec.counts.size() == 1);
    CHECK(vec.counts.at("C0153690") == 1);

    auto full = tagger::aggregate_full("p1", mentions);
    CHECK(full.counts.at("C0153690") == 2);  // score filter not applied
    CHECK(full.counts.at("C0999999") == 1);
}

TEST_CASE("aggregate of only-negated mentions is empty") {
    auto dict = std::set<std::string>{"C0153690"};
    tagger::ConceptMention m;
    m.cui = "C0153690";
    m.score = 2.0;
    m.negated = true;
    auto vec = tagger::aggregate("p1", {m}, dict);
    CHECK(vec.counts.empty());
}

TEST_CASE("dictionary closure holds for aggregated vectors") {
    auto lex = tagger::default_lexicon();
    auto dict = tagger::dictionary_cuis(lex);
    auto mentions =
        tag_text("metastatic breast cancer with liver metastases and bone", lex);
    auto vec = tagger::aggregate("p1", mentions, dict);
    for (const auto& [cui, count] : vec.counts) {
        CHECK(dict.count(cui) == 1);
        CHECK(count >= 1);
    }
}

TEST_CASE("appending a negated-only sentence leaves aggregation unchanged") {
    auto lex = tagger::default_lexicon();
    auto dict = tagger::dictionary_cuis(lex);
    auto cues = corpus::default_cues();

    auto base = tag_text("patient has bone metastases", lex);
    auto extra_sentence = make_sentence("no evidence of liver metastases");
    auto mask = corpus::negex_scope(extra_sentence, cues);
    auto extra = tagger::tag(extra_sentence, mask, lex);
    for (const auto& m : extra) CHECK(m.negated);

    auto combined = base;
    combined.insert(combined.end(), extra.begin(), extra.end());
    auto v1 = tagger::aggregate("p1", base, dict);
    auto v2 = tagger::aggregate("p1", combined, dict);
    CHECK(v1.counts == v2.counts);
}

TEST_CASE("lexicon file round-trip through parse") {
    std::istringstream in(
        "# comment\n"
        "C0278488|Carcinoma breast stage IV|metastatic breast cancer;breast "
        "cancer stage iv|dict:1\n"
        "C0999999|Off dictionary|off phrase|dict:0\n");
    auto lex = tagger::parse_lexicon(in);
    REQUIRE(lex.size() == 2);
    CHECK(lex[0].phrases.size() == 2);
    CHECK(lex[0].in_custom_dictionary);
    CHECK_FALSE(lex[1].in_custom_dictionary);
    auto dict = tagger::dictionary_cuis(lex);
    CHECK(dict == std::set<std::string>{"C0278488"});
}
