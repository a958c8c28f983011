#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nenp/error.hpp"

namespace nenp {

struct Token {
    std::string form;
    std::string pos;
};

class Sentence {
public:
    Sentence(std::string id, std::vector<Token> tokens);

    std::string const& id() const noexcept { return id_; }
    std::vector<Token> const& tokens() const noexcept { return tokens_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    Token const& operator[](std::size_t t) const { return tokens_[t]; }

    std::vector<std::string> forms() const;
    std::vector<std::string> tags() const;

private:
    std::string id_;
    std::vector<Token> tokens_;
};

using LabelId = int;
inline constexpr LabelId null_label = 0;
inline constexpr std::string_view null_label_name = "O";

/// Entity label inventory. Index 0 is always the null label "O".
class LabelSet {
public:
    LabelSet() : names_{std::string{null_label_name}} {}
    /// `entity_labels` must not contain "O" or duplicates.
    explicit LabelSet(std::vector<std::string> const& entity_labels);

    std::size_t size() const noexcept { return names_.size(); }
    std::size_t entity_count() const noexcept { return names_.size() - 1; }
    std::string const& name(LabelId id) const { return names_.at(static_cast<std::size_t>(id)); }
    std::optional<LabelId> find(std::string_view name) const;
    std::vector<std::string> const& names() const noexcept { return names_; }

    friend bool operator==(LabelSet const&, LabelSet const&) = default;

private:
    std::vector<std::string> names_;
};

/// Half-open token range [start, end) carrying a label.
struct LabeledSpan {
    int start = 0;
    int end = 0;
    LabelId label = null_label;

    int length() const noexcept { return end - start; }
    friend bool operator==(LabeledSpan const&, LabeledSpan const&) = default;
};

/// Outer spans sort before the spans they contain.
inline bool nesting_order(LabeledSpan const& a, LabeledSpan const& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end > b.end;
    return a.label < b.label;
}

inline bool crosses(LabeledSpan const& a, LabeledSpan const& b) {
    return (a.start < b.start && b.start < a.end && a.end < b.end) ||
           (b.start < a.start && a.start < b.end && b.end < a.end);
}

/// Validated, properly nested entity spans of one sentence, held in nesting order.
class EntitySet {
public:
    EntitySet() = default;

    std::vector<LabeledSpan> const& spans() const noexcept { return spans_; }
    std::size_t size() const noexcept { return spans_.size(); }
    bool empty() const noexcept { return spans_.empty(); }
    auto begin() const noexcept { return spans_.begin(); }
    auto end() const noexcept { return spans_.end(); }

    bool contains(LabeledSpan const& span) const;
    /// Label on [start, end), or O when no entity covers exactly that range.
    LabelId label_at(int start, int end) const;

    friend bool operator==(EntitySet const&, EntitySet const&) = default;

private:
    friend EntitySet make_entity_set_unchecked(std::vector<LabeledSpan>);
    std::vector<LabeledSpan> spans_;
};

/// For producers that construct nesting by construction (decoders). Sorts only.
EntitySet make_entity_set_unchecked(std::vector<LabeledSpan> spans);

/// A sentence with its (gold or predicted) entities.
struct AnnotatedSentence {
    Sentence sentence;
    EntitySet entities;
};

std::vector<Sentence> sentences_of(std::span<AnnotatedSentence const> data);

struct RawSpan {
    int start = 0;
    int end = 0;
    std::string label;
};

enum class DuplicatePolicy { error, first, last };

EntitySet validate_entity_set(int n, std::vector<RawSpan> const& spans, LabelSet const& labels,
                              DuplicatePolicy policy = DuplicatePolicy::error);

/// Re-validates already-labelled spans (label ids) against length n.
EntitySet validate_entity_set(int n, std::vector<LabeledSpan> const& spans, LabelSet const& labels,
                              DuplicatePolicy policy = DuplicatePolicy::error);

struct EntityTree {
    LabeledSpan node;
    std::vector<EntityTree> children;

    friend bool operator==(EntityTree const&, EntityTree const&) = default;
};

EntityTree entity_set_to_tree(EntitySet const& set, int n);
EntitySet tree_to_entity_set(EntityTree const& tree);

/// Structural walker: root covers [0, n), children strictly inside and ordered.
bool is_well_formed(EntityTree const& tree, int n);

/// "(GPE 0 5 (O 0 1) (GPE 1 3))" bracketing.
std::string bracketed(EntityTree const& tree, LabelSet const& labels);

} // namespace nenp
