#include "nenp/corpus_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nenp {

std::string to_string(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::word_pmi: return "word-pmi";
    case FeatureKind::word_freq: return "word-freq";
    case FeatureKind::pos_pmi: return "pos-pmi";
    case FeatureKind::pos_freq: return "pos-freq";
    }
    return "?";
}

FeatureKind parse_feature_kind(std::string_view name) {
    for (auto kind : {FeatureKind::word_pmi, FeatureKind::word_freq, FeatureKind::pos_pmi,
                      FeatureKind::pos_freq})
        if (to_string(kind) == name) return kind;
    throw usage_error("unknown feature kind '" + std::string{name} + "'");
}

std::string join(NGram const& ngram, char sep) {
    std::string out;
    for (std::size_t k = 0; k < ngram.size(); ++k) {
        if (k) out += sep;
        out += ngram[k];
    }
    return out;
}

std::int64_t CountTable::unigram(std::string const& token) const {
    auto it = unigrams.find(token);
    return it == unigrams.end() ? 0 : it->second;
}

std::int64_t CountTable::pair(std::string const& left, std::string const& right) const {
    auto it = pairs.find({left, right});
    return it == pairs.end() ? 0 : it->second;
}

namespace {

std::vector<std::string> level_tokens(Sentence const& sentence, CountLevel level) {
    return level == CountLevel::word ? sentence.forms() : sentence.tags();
}

} // namespace

CountTable count_corpus(std::span<Sentence const> sentences, CountLevel level) {
    if (sentences.empty()) throw validation_error("cannot count an empty corpus");
    CountTable table;
    table.level = level;
    for (auto const& sentence : sentences) {
        auto const tokens = level_tokens(sentence, level);
        auto const n = tokens.size();
        for (std::size_t t = 0; t < n; ++t) {
            ++table.unigrams[tokens[t]];
            if (t + 1 < n) ++table.pairs[{tokens[t], tokens[t + 1]}];
            NGram gram;
            for (std::size_t len = 1; len <= max_ngram_length && t + len <= n; ++len) {
                gram.push_back(tokens[t + len - 1]);
                ++table.ngrams[gram];
            }
        }
        table.total_tokens += static_cast<std::int64_t>(n);
        table.total_pairs += static_cast<std::int64_t>(n - 1);
    }
    return table;
}

double pmi(CountTable const& table, std::string const& left, std::string const& right) {
    constexpr double sentinel = -std::numeric_limits<double>::infinity();
    auto const joint = table.pair(left, right);
    auto const c_left = table.unigram(left);
    auto const c_right = table.unigram(right);
    if (joint == 0 || c_left == 0 || c_right == 0) return sentinel;
    double const p_joint = static_cast<double>(joint) / static_cast<double>(table.total_pairs);
    double const total = static_cast<double>(table.total_tokens);
    double const p_left = static_cast<double>(c_left) / total;
    double const p_right = static_cast<double>(c_right) / total;
    return std::log(p_joint / (p_left * p_right));
}

namespace {

template <class CutBefore>
Segmentation segment(std::size_t n, CutBefore&& cut_before) {
    Segmentation out;
    if (n == 0) return out;
    int begin = 0;
    for (int k = 1; k < static_cast<int>(n); ++k) {
        if (k - begin >= max_ngram_length || cut_before(k)) {
            out.emplace_back(begin, k);
            begin = k;
        }
    }
    out.emplace_back(begin, static_cast<int>(n));
    return out;
}

} // namespace

Segmentation segment_by_pmi(std::span<std::string const> tokens, CountTable const& table,
                            double threshold) {
    return segment(tokens.size(), [&](int k) {
        double const value = pmi(table, tokens[k - 1], tokens[k]);
        return std::isinf(value) || value < threshold;
    });
}

Segmentation segment_by_freq(std::span<std::string const> tokens, CountTable const& table,
                             std::int64_t threshold) {
    return segment(tokens.size(),
                   [&](int k) { return table.pair(tokens[k - 1], tokens[k]) < threshold; });
}

Thresholds Thresholds::defaults_for(FeatureKind kind) {
    return level_of(kind) == CountLevel::word ? Thresholds{0.0, 2} : Thresholds{0.5, 5};
}

LexiconEntry const* NGramLexicon::find(NGram const& ngram) const {
    auto it = entries_.find(ngram);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::pair<NGram, LexiconEntry>> NGramLexicon::by_id() const {
    std::vector<std::pair<NGram, LexiconEntry>> out(entries_.begin(), entries_.end());
    std::sort(out.begin(), out.end(),
              [](auto const& a, auto const& b) { return a.second.id < b.second.id; });
    return out;
}

void NGramLexicon::add(NGram const& ngram, std::int64_t count) {
    if (ngram.empty() || ngram.size() > max_ngram_length)
        throw validation_error("lexicon n-gram length must be in [1, 9]");
    auto [it, inserted] =
        entries_.try_emplace(ngram, LexiconEntry{static_cast<int>(entries_.size()), kind_, 0});
    it->second.count += count;
}

void NGramLexicon::write(std::ostream& os) const {
    os << "#nelex v1 " << to_string(kind_) << '\n';
    for (auto const& [ngram, entry] : by_id())
        os << join(ngram) << '\t' << to_string(entry.kind) << '\t' << entry.count << '\t'
           << entry.id << '\n';
}

NGramLexicon NGramLexicon::read(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("#nelex v1 ", 0) != 0)
        throw validation_error("lexicon: missing '#nelex v1' header");
    NGramLexicon lexicon{parse_feature_kind(line.substr(10))};

    std::vector<std::pair<NGram, LexiconEntry>> rows;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields{line};
        std::string text, kind, count, id;
        if (!std::getline(fields, text, '\t') || !std::getline(fields, kind, '\t') ||
            !std::getline(fields, count, '\t') || !std::getline(fields, id))
            throw validation_error("lexicon line " + std::to_string(line_no) + ": expected 4 fields");
        NGram ngram;
        std::istringstream words{text};
        for (std::string w; words >> w;) ngram.push_back(w);
        if (ngram.empty() || ngram.size() > max_ngram_length)
            throw validation_error("lexicon line " + std::to_string(line_no) +
                                   ": n-gram length out of range");
        try {
            rows.push_back({std::move(ngram),
                            LexiconEntry{std::stoi(id), parse_feature_kind(kind), std::stoll(count)}});
        } catch (std::logic_error const&) {
            throw validation_error("lexicon line " + std::to_string(line_no) + ": bad number");
        }
    }
    std::sort(rows.begin(), rows.end(),
              [](auto const& a, auto const& b) { return a.second.id < b.second.id; });
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].second.id != static_cast<int>(k))
            throw validation_error("lexicon ids are not dense from 0");
        if (!lexicon.entries_.emplace(rows[k].first, rows[k].second).second)
            throw validation_error("lexicon has a repeated n-gram '" + join(rows[k].first) + "'");
    }
    return lexicon;
}

void NGramLexicon::save(std::string const& path) const {
    std::ofstream os{path, std::ios::binary};
    if (!os) throw io_error("cannot write lexicon '" + path + "'");
    write(os);
    if (!os) throw io_error("failed writing lexicon '" + path + "'");
}

NGramLexicon NGramLexicon::load(std::string const& path) {
    std::ifstream is{path, std::ios::binary};
    if (!is) throw io_error("cannot read lexicon '" + path + "'");
    return read(is);
}

std::uint64_t NGramLexicon::checksum() const {
    std::ostringstream os;
    write(os);
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : os.str()) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

namespace {

// Word n-gram -> summed count, keyed by space-joined text so iteration is lexicographic.
std::map<std::string, std::pair<NGram, std::int64_t>> extract_ngrams(
    std::span<Sentence const> sentences, FeatureKind kind, Thresholds thresholds) {
    auto const level = level_of(kind);
    auto const table = count_corpus(sentences, level);
    std::map<std::string, std::pair<NGram, std::int64_t>> found;
    for (auto const& sentence : sentences) {
        auto const units = level == CountLevel::word ? sentence.forms() : sentence.tags();
        auto const segments = uses_pmi(kind) ? segment_by_pmi(units, table, thresholds.pmi)
                                             : segment_by_freq(units, table, thresholds.freq);
        auto const forms = sentence.forms();
        for (auto const& [begin, end] : segments) {
            NGram gram(forms.begin() + begin, forms.begin() + end);
            auto& slot = found[join(gram)];
            slot.first = std::move(gram);
            ++slot.second;
        }
    }
    return found;
}

} // namespace

NGramLexicon build_lexicon(std::span<Sentence const> sentences, FeatureKind kind,
                           Thresholds thresholds) {
    NGramLexicon lexicon{kind};
    for (auto const& [text, entry] : extract_ngrams(sentences, kind, thresholds))
        lexicon.add(entry.first, entry.second);
    return lexicon;
}

NGramLexicon merge_lexicon(NGramLexicon const& base, std::span<Sentence const> external,
                           FeatureKind kind, Thresholds thresholds) {
    if (base.kind() != kind)
        throw validation_error("cannot merge a " + to_string(kind) + " lexicon into a " +
                               to_string(base.kind()) + " lexicon");
    NGramLexicon merged = base;
    if (external.empty()) return merged;
    for (auto const& [text, entry] : extract_ngrams(external, kind, thresholds))
        merged.add(entry.first, entry.second);
    return merged;
}

} // namespace nenp
