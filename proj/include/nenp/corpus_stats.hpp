#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nenp/core.hpp"

namespace nenp {

/// Longest n-gram counted or stored.
inline constexpr int max_ngram_length = 9;

using NGram = std::vector<std::string>;

enum class CountLevel { word, pos };

enum class FeatureKind { word_pmi, word_freq, pos_pmi, pos_freq };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);
inline CountLevel level_of(FeatureKind kind) {
    return kind == FeatureKind::word_pmi || kind == FeatureKind::word_freq ? CountLevel::word
                                                                           : CountLevel::pos;
}
inline bool uses_pmi(FeatureKind kind) {
    return kind == FeatureKind::word_pmi || kind == FeatureKind::pos_pmi;
}

struct CountTable {
    CountLevel level = CountLevel::word;
    std::map<std::string, std::int64_t> unigrams;
    std::map<std::pair<std::string, std::string>, std::int64_t> pairs;
    std::map<NGram, std::int64_t> ngrams;
    std::int64_t total_tokens = 0;
    std::int64_t total_pairs = 0;

    std::int64_t unigram(std::string const& token) const;
    std::int64_t pair(std::string const& left, std::string const& right) const;
};

CountTable count_corpus(std::span<Sentence const> sentences, CountLevel level);

/// Natural-log PMI of an adjacent pair; -infinity when the pair (or either token) was never seen.
double pmi(CountTable const& table, std::string const& left, std::string const& right);

/// Half-open [begin, end) token ranges that partition the input.
using Segmentation = std::vector<std::pair<int, int>>;

Segmentation segment_by_pmi(std::span<std::string const> tokens, CountTable const& table,
                            double threshold);
Segmentation segment_by_freq(std::span<std::string const> tokens, CountTable const& table,
                             std::int64_t threshold);

struct Thresholds {
    double pmi = 0.0;
    std::int64_t freq = 2;

    /// Word thresholds: PMI 0, frequency 2. POS thresholds: PMI 0.5, frequency 5.
    static Thresholds defaults_for(FeatureKind kind);
};

struct LexiconEntry {
    int id = 0;
    FeatureKind kind = FeatureKind::word_pmi;
    std::int64_t count = 0;

    friend bool operator==(LexiconEntry const&, LexiconEntry const&) = default;
};

class NGramLexicon {
public:
    explicit NGramLexicon(FeatureKind kind = FeatureKind::word_pmi) : kind_{kind} {}

    FeatureKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    LexiconEntry const* find(NGram const& ngram) const;
    std::map<NGram, LexiconEntry> const& entries() const noexcept { return entries_; }
    /// Entries ordered by embedding id.
    std::vector<std::pair<NGram, LexiconEntry>> by_id() const;

    /// Adds `count` to an existing entry or appends a new one with the next free id.
    void add(NGram const& ngram, std::int64_t count);

    /// FNV-1a over the serialized form.
    std::uint64_t checksum() const;

    void write(std::ostream& os) const;
    static NGramLexicon read(std::istream& is);
    void save(std::string const& path) const;
    static NGramLexicon load(std::string const& path);

    friend bool operator==(NGramLexicon const&, NGramLexicon const&) = default;

private:
    FeatureKind kind_;
    std::map<NGram, LexiconEntry> entries_;
};

/// Segments each sentence at its kind's level and collects the word n-grams of the segments.
/// Embedding ids follow lexicographic order of the space-joined n-gram text.
NGramLexicon build_lexicon(std::span<Sentence const> sentences, FeatureKind kind,
                           Thresholds thresholds);

/// Unions `base` with n-grams extracted from `external`. Existing ids are kept; new entries get
/// ids after the last existing one, in lexicographic order.
NGramLexicon merge_lexicon(NGramLexicon const& base, std::span<Sentence const> external,
                           FeatureKind kind, Thresholds thresholds);

std::string join(NGram const& ngram, char sep = ' ');

} // namespace nenp
