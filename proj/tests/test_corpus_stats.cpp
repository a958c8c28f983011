#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nenp/corpus_stats.hpp"

using namespace nenp;

namespace {

Sentence make(std::vector<std::string> const& forms, std::vector<std::string> tags = {}) {
    std::vector<Token> tokens;
    for (std::size_t k = 0; k < forms.size(); ++k) tokens.push_back({forms[k], tags.empty() ? "X" : tags[k]});
    return Sentence{"s", tokens};
}

std::vector<Sentence> abab() { return {make({"a", "b", "a", "b"})}; }

std::vector<std::string> const abab_tokens{"a", "b", "a", "b"};

} // namespace

TEST_CASE("counts of the toy corpus") {
    auto const table = count_corpus(abab(), CountLevel::word);
    CHECK(table.unigram("a") == 2);
    CHECK(table.unigram("b") == 2);
    CHECK(table.pair("a", "b") == 2);
    CHECK(table.pair("b", "a") == 1);
    CHECK(table.total_tokens == 4);
    CHECK(table.total_pairs == 3);
    CHECK(table.ngrams.at({"a", "b"}) == 2);
    CHECK(table.ngrams.at({"b", "a"}) == 1);
    CHECK(table.ngrams.at({"a", "b", "a"}) == 1);
    CHECK(table.ngrams.at({"a", "b", "a", "b"}) == 1);
}

TEST_CASE("POS-level counting") {
    std::vector<Sentence> const corpus{make({"new", "york"}, {"NNP", "NNP"})};
    auto const table = count_corpus(corpus, CountLevel::pos);
    CHECK(table.unigram("NNP") == 2);
    CHECK(table.pair("NNP", "NNP") == 1);
    CHECK(table.unigram("new") == 0);
}

TEST_CASE("empty corpus is rejected") {
    CHECK_THROWS_AS(count_corpus(std::vector<Sentence>{}, CountLevel::word), Error);
}

TEST_CASE("pmi hand values") {
    auto const table = count_corpus(abab(), CountLevel::word);
    CHECK(pmi(table, "a", "b") == doctest::Approx(std::log((2.0 / 3.0) / 0.25)).epsilon(1e-12));
    CHECK(pmi(table, "b", "a") == doctest::Approx(std::log((1.0 / 3.0) / 0.25)).epsilon(1e-12));
    CHECK(std::abs(pmi(table, "a", "b") - 0.98083) < 1e-5);
    CHECK(std::abs(pmi(table, "b", "a") - 0.28768) < 1e-5);
    CHECK(pmi(table, "a", "a") == -INFINITY);
    CHECK(pmi(table, "a", "zzz") == -INFINITY);
}

TEST_CASE("pmi is reproducible from counts") {
    std::mt19937_64 rng{2};
    std::vector<Sentence> corpus;
    for (int s = 0; s < 40; ++s) {
        std::vector<std::string> forms;
        for (int k = 0; k < 6; ++k) forms.push_back(std::string(1, static_cast<char>('a' + rng() % 5)));
        corpus.push_back(make(forms));
    }
    auto const table = count_corpus(corpus, CountLevel::word);
    double const tokens = static_cast<double>(table.total_tokens);
    double const pairs = static_cast<double>(table.total_pairs);
    for (auto const& [pair, count] : table.pairs) {
        double const p1 = static_cast<double>(table.unigram(pair.first)) / tokens;
        double const p2 = static_cast<double>(table.unigram(pair.second)) / tokens;
        double const joint = static_cast<double>(count) / pairs;
        CHECK(std::abs(std::exp(pmi(table, pair.first, pair.second)) * p1 * p2 - joint) < 1e-12);
    }
}

TEST_CASE("segmentation examples") {
    auto const table = count_corpus(abab(), CountLevel::word);
    using Seg = Segmentation;
    CHECK(segment_by_pmi(abab_tokens, table, 0.0) == Seg{{0, 4}});
    CHECK(segment_by_pmi(abab_tokens, table, 0.5) == Seg{{0, 2}, {2, 4}});
    CHECK(segment_by_freq(abab_tokens, table, 2) == Seg{{0, 2}, {2, 4}});
    CHECK(segment_by_freq(abab_tokens, table, 1) == Seg{{0, 4}});
    std::vector<std::string> const one{"a"};
    CHECK(segment_by_pmi(one, table, 0.0) == Seg{{0, 1}});
    CHECK(segment_by_freq(one, table, 2) == Seg{{0, 1}});
}

TEST_CASE("segments never exceed nine tokens") {
    std::vector<std::string> const tokens(20, "a");
    std::vector<Sentence> const corpus{make({"a", "a"})};
    auto const table = count_corpus(corpus, CountLevel::word);
    auto const segs = segment_by_freq(tokens, table, 1);
    CHECK(segs == Segmentation{{0, 9}, {9, 18}, {18, 20}});
}

TEST_CASE("segmentation is a partition") {
    std::mt19937_64 rng{9};
    std::vector<Sentence> corpus;
    for (int s = 0; s < 30; ++s) {
        std::vector<std::string> forms;
        int const n = 1 + static_cast<int>(rng() % 25);
        for (int k = 0; k < n; ++k) forms.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
        corpus.push_back(make(forms));
    }
    auto const table = count_corpus(corpus, CountLevel::word);
    for (auto const& sentence : corpus) {
        auto const forms = sentence.forms();
        for (double t : {-1.0, 0.0, 0.3, 1.0, 5.0})
            for (auto const& segs : {segment_by_pmi(forms, table, t),
                                     segment_by_freq(forms, table, static_cast<std::int64_t>(t + 2))}) {
                int expected = 0;
                for (auto [b, e] : segs) {
                    CHECK(b == expected);
                    CHECK(e > b);
                    CHECK(e - b <= max_ngram_length);
                    expected = e;
                }
                CHECK(expected == static_cast<int>(forms.size()));
            }
    }
}

TEST_CASE("build_lexicon examples") {
    auto const freq = build_lexicon(abab(), FeatureKind::word_freq, {0.0, 2});
    REQUIRE(freq.size() == 1);
    REQUIRE(freq.find({"a", "b"}) != nullptr);
    CHECK(freq.find({"a", "b"})->count == 2);
    CHECK(freq.find({"a", "b"})->id == 0);

    auto const whole = build_lexicon(abab(), FeatureKind::word_pmi, {0.0, 2});
    REQUIRE(whole.size() == 1);
    CHECK(whole.find({"a", "b", "a", "b"})->count == 1);

    // POS segment [NNP NNP] maps back to the word n-gram.
    std::vector<Sentence> const corpus{make({"new", "york"}, {"NNP", "NNP"})};
    auto const pos = build_lexicon(corpus, FeatureKind::pos_pmi, {-1.0, 5});
    REQUIRE(pos.size() == 1);
    CHECK(pos.find({"new", "york"}) != nullptr);
    CHECK(pos.kind() == FeatureKind::pos_pmi);
}

TEST_CASE("lexicon ids follow lexicographic order") {
    std::vector<Sentence> const corpus{make({"c"}), make({"a"}), make({"b", "b"})};
    auto const lex = build_lexicon(corpus, FeatureKind::word_freq, {0.0, 1});
    auto const rows = lex.by_id();
    REQUIRE(rows.size() == 3);
    CHECK(join(rows[0].first) == "a");
    CHECK(join(rows[1].first) == "b b");
    CHECK(join(rows[2].first) == "c");
}

TEST_CASE("merge keeps base ids stable") {
    std::vector<Sentence> const base_corpus{make({"m"}), make({"z"})};
    auto const base = build_lexicon(base_corpus, FeatureKind::word_freq, {0.0, 2});
    std::vector<Sentence> const external{make({"a"}), make({"z"}), make({"q"})};
    auto const merged = merge_lexicon(base, external, FeatureKind::word_freq, {0.0, 2});
    CHECK(merged.size() == 4);
    CHECK(merged.find({"m"})->id == base.find({"m"})->id);
    CHECK(merged.find({"z"})->id == base.find({"z"})->id);
    CHECK(merged.find({"z"})->count == 2);
    CHECK(merged.find({"a"})->id == 2);
    CHECK(merged.find({"q"})->id == 3);

    auto const doubled = merge_lexicon(base, base_corpus, FeatureKind::word_freq, {0.0, 2});
    CHECK(doubled.size() == base.size());
    CHECK(doubled.find({"m"})->count == 2);

    CHECK(merge_lexicon(base, std::vector<Sentence>{}, FeatureKind::word_freq, {0.0, 2}) == base);
    CHECK_THROWS_AS(merge_lexicon(base, external, FeatureKind::word_pmi, {0.0, 2}), Error);
}

TEST_CASE("disjoint merge is a plain union") {
    std::vector<Sentence> const a{make({"x", "y"}), make({"x", "y"})};
    std::vector<Sentence> const b{make({"p", "q"}), make({"p", "q"})};
    auto const base = build_lexicon(a, FeatureKind::word_freq, {0.0, 2});
    auto const fresh = build_lexicon(b, FeatureKind::word_freq, {0.0, 2});
    auto const merged = merge_lexicon(base, b, FeatureKind::word_freq, {0.0, 2});
    CHECK(merged.size() == base.size() + fresh.size());
}

TEST_CASE("lexicon file round trip and checksum") {
    std::vector<Sentence> const corpus{make({"new", "york", "is", "big"}), make({"new", "york"})};
    auto const lex = build_lexicon(corpus, FeatureKind::word_pmi, {0.0, 2});
    std::ostringstream os;
    lex.write(os);
    CHECK(os.str().rfind("#nelex v1 word-pmi\n", 0) == 0);
    std::istringstream is{os.str()};
    auto const back = NGramLexicon::read(is);
    CHECK(back == lex);
    CHECK(back.checksum() == lex.checksum());

    auto again = build_lexicon(corpus, FeatureKind::word_pmi, {0.0, 2});
    std::ostringstream os2;
    again.write(os2);
    CHECK(os.str() == os2.str());

    again.add({"extra"}, 1);
    CHECK(again.checksum() != lex.checksum());
}

TEST_CASE("malformed lexicon files are rejected") {
    auto bad = [](std::string const& text) {
        std::istringstream is{text};
        CHECK_THROWS_AS(NGramLexicon::read(is), Error);
    };
    bad("");
    bad("#nelex v2 word-pmi\n");
    bad("#nelex v1 word-pmi\na b\tword-pmi\t2\n");
    bad("#nelex v1 word-pmi\na b\tword-pmi\t2\t1\n");
    bad("#nelex v1 word-pmi\na\tword-pmi\t2\t0\na\tword-pmi\t1\t1\n");
    CHECK_THROWS_AS(parse_feature_kind("word-tfidf"), Error);
}

TEST_CASE("feature kind names") {
    for (auto kind : {FeatureKind::word_pmi, FeatureKind::word_freq, FeatureKind::pos_pmi, FeatureKind::pos_freq})
        CHECK(parse_feature_kind(to_string(kind)) == kind);
    CHECK(Thresholds::defaults_for(FeatureKind::word_pmi).pmi == 0.0);
    CHECK(Thresholds::defaults_for(FeatureKind::word_freq).freq == 2);
    CHECK(Thresholds::defaults_for(FeatureKind::pos_pmi).pmi == 0.5);
    CHECK(Thresholds::defaults_for(FeatureKind::pos_freq).freq == 5);
}
