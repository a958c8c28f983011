#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nenp/model.hpp"

using namespace nenp;

namespace {

Sentence make(std::vector<std::string> const& forms) {
    std::vector<Token> tokens;
    for (auto const& f : forms) tokens.push_back({f, f == "c" ? "V" : "N"});
    return Sentence{"s", tokens};
}

ModelConfig small_config(int dim = 4, int layers = 1, int categories = 3) {
    ModelConfig c;
    c.dim = dim;
    c.layers = layers;
    c.heads = dim % 2 == 0 ? 2 : 1;
    c.ffn_dim = 6;
    c.hidden = 5;
    c.categories = categories;
    c.max_len = 12;
    return c;
}

ModelParams small_params(ModelConfig const& c, std::size_t lexicon_size, std::uint64_t seed = 3) {
    return init_params(c, Vocabulary{{"a", "b", "c"}}, Vocabulary{{"N", "V"}}, LabelSet{{"ORG", "PER"}},
                       lexicon_size, seed);
}

NGramLexicon lexicon_of(std::vector<NGram> const& grams) {
    NGramLexicon lex{FeatureKind::word_freq};
    for (auto const& g : grams) lex.add(g, 1);
    return lex;
}

} // namespace

TEST_CASE("vocabulary reserves the unknown row") {
    Vocabulary v{{"b", "a", "b"}};
    CHECK(v.size() == 3);
    CHECK(v.lookup("<unk>") == 0);
    CHECK(v.lookup("a") == 1);
    CHECK(v.lookup("zzz") == Vocabulary::unknown);
}

TEST_CASE("embedding is the componentwise sum") {
    auto params = small_params(small_config(2, 0), 0);
    auto& t = params.tensors;
    t.word_embedding.col(params.words.lookup("a")) << 1.0, 0.0;
    t.pos_embedding.col(params.tags.lookup("N")) << 0.0, 1.0;
    t.position_embedding.col(1) << 0.5, 0.5;
    Matrix const z = embed(make({"a"}), params);
    CHECK(z(0, 0) == doctest::Approx(1.5));
    CHECK(z(1, 0) == doctest::Approx(1.5));
}

TEST_CASE("unknown words use the reserved row and eval mode is deterministic") {
    auto const params = small_params(small_config(), 0);
    Matrix const z = embed(make({"zzz", "a"}), params);
    Matrix const expected = params.tensors.word_embedding.col(0) + params.tensors.pos_embedding.col(1) +
                            params.tensors.position_embedding.col(1);
    CHECK((z.col(0) - expected).norm() < 1e-15);
    CHECK(z.allFinite());
    CHECK(embed(make({"a", "b"}), params) == embed(make({"a", "b"}), params));
    auto const chart1 = score_spans(make({"a", "b", "c"}), params, NGramLexicon{});
    auto const chart2 = score_spans(make({"a", "b", "c"}), params, NGramLexicon{});
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j <= 3; ++j)
            for (LabelId l = 0; l < 3; ++l) CHECK(chart1(i, j, l) == chart2(i, j, l));
}

TEST_CASE("dropout changes the forward pass only when active") {
    auto const params = small_params(small_config(), 0);
    std::mt19937_64 rng{1};
    DropoutContext dropout{DropoutRates{0.0, 0.5, 0.0, 0.0}, &rng};
    auto const sentence = make({"a", "b", "c", "a", "b", "c", "a", "b"});
    Matrix const clean = embed(sentence, params);
    Matrix const noisy = embed(sentence, params, &dropout);
    CHECK((clean - noisy).norm() > 0.0);
}

TEST_CASE("encoder shapes and identity depth") {
    auto const flat = small_params(small_config(4, 0), 0);
    auto const sentence = make({"a", "b", "c"});
    Matrix const z = embed(sentence, flat);
    Matrix const h = encode(z, flat);
    REQUIRE(h.cols() == 4);
    CHECK((h.col(0) - flat.tensors.boundary).norm() == 0.0);
    CHECK((h.rightCols(3) - z).norm() == 0.0);

    auto const deep = small_params(small_config(4, 2), 0);
    Matrix const h2 = encode(embed(sentence, deep), deep);
    CHECK(h2.rows() == 4);
    CHECK(h2.cols() == 4);
    CHECK(h2.allFinite());
}

TEST_CASE("encoder is permutation equivariant for tied positions") {
    auto params = small_params(small_config(4, 2), 0);
    params.tensors.position_embedding.col(3) = params.tensors.position_embedding.col(1);
    Matrix const h = encode(embed(make({"a", "b", "c"}), params), params);
    Matrix const swapped = encode(embed(make({"c", "b", "a"}), params), params);
    CHECK((h.col(1) - swapped.col(3)).norm() < 1e-12);
    CHECK((h.col(3) - swapped.col(1)).norm() < 1e-12);
    CHECK((h.col(2) - swapped.col(2)).norm() < 1e-12);
}

TEST_CASE("span representation is a fencepost difference") {
    Matrix h(2, 4);
    h << 0, 1, 9, 4,
         0, 2, 9, 6;
    Vector const r = span_repr(h, 1, 3);
    CHECK(r(0) == 3.0);
    CHECK(r(1) == 4.0);
    CHECK(span_repr(h, 2, 2 + 1).size() == 2);
    CHECK((span_repr(h, 0, 3) - (h.col(3) - h.col(0))).norm() == 0.0);
    CHECK_THROWS_AS(span_repr(h, 2, 2), Error);
    CHECK_THROWS_AS(span_repr(h, 0, 4), Error);
}

TEST_CASE("n-gram matches inside a span") {
    auto const lex = lexicon_of({{"a", "b"}, {"b"}});
    auto const m = collect_ngram_matches(make({"a", "b", "c"}), 0, 2, lex, 3);
    REQUIRE(m.categories.size() == 3);
    REQUIRE(m.categories[0].size() == 1);
    CHECK(m.categories[0][0] == NGramMatch{1, 2, lex.find({"b"})->id});
    REQUIRE(m.categories[1].size() == 1);
    CHECK(m.categories[1][0] == NGramMatch{0, 2, lex.find({"a", "b"})->id});
    CHECK(m.total() == 2);
    CHECK(collect_ngram_matches(make({"a", "b", "c"}), 2, 3, lex, 3).empty());

    auto const long_lex = lexicon_of({NGram(7, "a")});
    auto const bucketed = collect_ngram_matches(make(std::vector<std::string>(7, "a")), 0, 7, long_lex, 5);
    CHECK(bucketed.categories[4].size() == 1);
}

TEST_CASE("span attention per category") {
    auto const config = small_config(2, 0, 2);
    auto params = small_params(config, 3);
    auto& t = params.tensors;
    t.ngram_embedding << 1.0, 1.0, 3.0,
                         0.0, 0.0, 5.0;
    t.category_weight << 2.0, 0.5;

    SpanMatchSet matches;
    matches.categories.resize(2);
    matches.categories[1].push_back({0, 2, 2});
    Vector r(2);
    r << 0.3, -0.7;
    Vector const single = span_attention(r, matches, params);
    REQUIRE(single.size() == 4);
    CHECK(single.head(2).norm() == 0.0);
    CHECK(single(2) == doctest::Approx(1.5));
    CHECK(single(3) == doctest::Approx(2.5));

    // Equal dot products split the weight evenly.
    SpanMatchSet pair;
    pair.categories.resize(2);
    pair.categories[0] = {{0, 1, 0}, {1, 2, 1}};
    t.ngram_embedding.col(1) << 1.0, 4.0;
    Vector flat(2);
    flat << 2.0, 0.0;
    Vector const even = span_attention(flat, pair, params);
    CHECK(even(0) == doctest::Approx(2.0 * 1.0));
    CHECK(even(1) == doctest::Approx(2.0 * 2.0));

    SpanMatchSet none;
    none.categories.resize(2);
    CHECK(span_attention(r, none, params) == Vector::Zero(4));
}

TEST_CASE("attention ignores tokens outside the span") {
    auto const params = small_params(small_config(4, 0, 3), 3);
    auto const lex = lexicon_of({{"a"}, {"a", "b"}, {"c"}});
    Vector r = Vector::LinSpaced(4, -1.0, 1.0);
    auto const inside = collect_ngram_matches(make({"c", "a", "b", "c"}), 1, 3, lex, 3);
    auto const edited = collect_ngram_matches(make({"a", "a", "b", "a"}), 1, 3, lex, 3);
    CHECK((span_attention(r, inside, params) - span_attention(r, edited, params)).norm() == 0.0);
}

TEST_CASE("attention weights form a distribution") {
    auto const params = small_params(small_config(4, 0, 2), 2);
    auto const& e = params.tensors.ngram_embedding;
    Vector r = Vector::LinSpaced(4, -1.0, 2.0);
    Vector const weights = nn::softmax<double>(e.transpose() * r);
    CHECK(weights.minCoeff() >= 0.0);
    CHECK(weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("constant head scores every span alike") {
    auto params = small_params(small_config(), 0);
    params.tensors.mlp_w2.setZero();
    params.tensors.mlp_b2 << 0.25, -1.5;
    auto const chart = score_spans(make({"a", "b", "c"}), params, NGramLexicon{});
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j <= 3; ++j) {
            CHECK(chart(i, j, 0) == 0.0);
            CHECK(chart(i, j, 1) == doctest::Approx(0.25));
            CHECK(chart(i, j, 2) == doctest::Approx(-1.5));
        }
}

TEST_CASE("closed-form scores without encoder or lexicon") {
    auto const config = small_config(4, 0, 2);
    auto const params = small_params(config, 0, 17);
    auto const sentence = make({"b", "zzz", "a"});
    auto const chart = score_spans(sentence, params, NGramLexicon{});
    auto const& t = params.tensors;

    // Hand-rolled forward with plain loops.
    auto column = [&](int pos) {
        std::vector<double> z(4);
        if (pos == 0) {
            for (int k = 0; k < 4; ++k) z[k] = t.boundary(k);
            return z;
        }
        auto const& tok = sentence[static_cast<std::size_t>(pos - 1)];
        int const w = params.words.lookup(tok.form), p = params.tags.lookup(tok.pos);
        for (int k = 0; k < 4; ++k) z[k] = t.word_embedding(k, w) + t.pos_embedding(k, p) + t.position_embedding(k, pos);
        return z;
    };
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j <= 3; ++j) {
            auto const hi = column(i), hj = column(j);
            std::vector<double> feat(12, 0.0);
            for (int k = 0; k < 4; ++k) feat[k] = hj[k] - hi[k];
            std::vector<double> pre(5);
            double mean = 0.0;
            for (int a = 0; a < 5; ++a) {
                pre[a] = t.mlp_b1(a);
                for (int b = 0; b < 12; ++b) pre[a] += t.mlp_w1(a, b) * feat[b];
                mean += pre[a] / 5.0;
            }
            double var = 0.0;
            for (double v : pre) var += (v - mean) * (v - mean) / 5.0;
            std::vector<double> act(5);
            for (int a = 0; a < 5; ++a)
                act[a] = std::max(0.0, t.mlp_norm_gain(a) * (pre[a] - mean) / std::sqrt(var + 1e-5) + t.mlp_norm_bias(a));
            for (int l = 0; l < 2; ++l) {
                double s = t.mlp_b2(l);
                for (int a = 0; a < 5; ++a) s += t.mlp_w2(l, a) * act[a];
                CHECK(chart(i, j, l + 1) == doctest::Approx(s).epsilon(1e-12));
            }
        }
}

TEST_CASE("chart shape and finiteness") {
    auto const params = small_params(small_config(4, 2), 2);
    auto const lex = lexicon_of({{"a"}, {"b", "c"}});
    auto const chart = score_spans(make({"a", "b", "c"}), params, lex);
    CHECK(chart.length() == 3);
    CHECK(chart.label_count() == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j <= 3; ++j) {
            CHECK(chart(i, j, 0) == 0.0);
            CHECK(std::isfinite(chart(i, j, 1)));
        }
    CHECK_THROWS_AS(score_spans(make({"a"}), params, NGramLexicon{}), Error);
    CHECK_THROWS_AS(score_spans(make(std::vector<std::string>(13, "a")), params, lex), Error);
}

TEST_CASE("scoring pass agrees with score_spans") {
    auto const params = small_params(small_config(4, 1), 2);
    auto const lex = lexicon_of({{"a"}, {"b", "c"}});
    auto const sentence = make({"a", "b", "c", "a"});
    auto const chart = score_spans(sentence, params, lex);
    ScoringPass pass{sentence, params, lex};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j <= 4; ++j)
            for (LabelId l = 1; l < 3; ++l) CHECK(pass.chart()(i, j, l) == doctest::Approx(chart(i, j, l)).epsilon(1e-14));
}

TEST_CASE("new n-gram columns start at their bucket centroid") {
    auto params = small_params(small_config(2, 0, 2), 3);
    auto lex = lexicon_of({{"a"}, {"a", "b"}, {"c"}});
    params.tensors.ngram_embedding << 1.0, 10.0, 3.0,
                                      2.0, 20.0, 4.0;
    auto merged = lex;
    merged.add({"b"}, 1);
    merged.add({"a", "b", "c"}, 1);
    extend_ngram_embeddings(params, merged);
    auto const& e = params.tensors.ngram_embedding;
    REQUIRE(e.cols() == 5);
    CHECK(e(0, 3) == doctest::Approx(2.0));
    CHECK(e(1, 3) == doctest::Approx(3.0));
    CHECK(e(0, 4) == doctest::Approx(10.0));
    CHECK(e(1, 4) == doctest::Approx(20.0));
    CHECK(e(0, 1) == 10.0);
    CHECK_THROWS_AS(extend_ngram_embeddings(params, lex), Error);
}

TEST_CASE("initialisation is seeded") {
    auto const a = small_params(small_config(), 2, 5);
    auto const b = small_params(small_config(), 2, 5);
    auto const c = small_params(small_config(), 2, 6);
    CHECK(a.tensors.mlp_w1 == b.tensors.mlp_w1);
    CHECK(a.tensors.mlp_w1 != c.tensors.mlp_w1);
    CHECK(a.tensors.category_weight == Vector::Ones(3));
    CHECK(a.tensors.mlp_norm_gain == Vector::Ones(5));
    CHECK(a.tensors.mlp_w1.cwiseAbs().maxCoeff() <= 0.1);
}
