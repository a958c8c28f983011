#include "nenp/core.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <sstream>

namespace nenp {

Sentence::Sentence(std::string id, std::vector<Token> tokens)
    : id_{std::move(id)}, tokens_{std::move(tokens)} {
    if (tokens_.empty()) throw validation_error("sentence '" + id_ + "' has no tokens");
    for (auto const& tok : tokens_) {
        if (tok.form.empty() || tok.pos.empty())
            throw validation_error("sentence '" + id_ + "' has an empty token form or POS tag");
    }
}

std::vector<std::string> Sentence::forms() const {
    std::vector<std::string> out;
    out.reserve(tokens_.size());
    for (auto const& tok : tokens_) out.push_back(tok.form);
    return out;
}

std::vector<std::string> Sentence::tags() const {
    std::vector<std::string> out;
    out.reserve(tokens_.size());
    for (auto const& tok : tokens_) out.push_back(tok.pos);
    return out;
}

LabelSet::LabelSet(std::vector<std::string> const& entity_labels) : LabelSet{} {
    for (auto const& name : entity_labels) {
        if (name.empty()) throw validation_error("empty entity label name");
        if (find(name)) throw validation_error("duplicate or reserved label name '" + name + "'");
        names_.push_back(name);
    }
}

std::optional<LabelId> LabelSet::find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<LabelId>(it - names_.begin());
}

bool EntitySet::contains(LabeledSpan const& span) const {
    return std::binary_search(spans_.begin(), spans_.end(), span, nesting_order);
}

LabelId EntitySet::label_at(int start, int end) const {
    for (auto const& s : spans_)
        if (s.start == start && s.end == end) return s.label;
    return null_label;
}

EntitySet make_entity_set_unchecked(std::vector<LabeledSpan> spans) {
    std::sort(spans.begin(), spans.end(), nesting_order);
    EntitySet set;
    set.spans_ = std::move(spans);
    return set;
}

EntitySet validate_entity_set(int n, std::vector<LabeledSpan> const& spans, LabelSet const& labels,
                              DuplicatePolicy policy) {
    if (n < 1) throw validation_error("sentence length must be at least 1");

    // (start, end) -> position in `kept`
    std::map<std::pair<int, int>, std::size_t> seen;
    std::vector<LabeledSpan> kept;
    for (auto const& s : spans) {
        if (s.start < 0 || s.end > n)
            throw validation_error("span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                   ") out of bounds for length " + std::to_string(n));
        if (s.start >= s.end)
            throw validation_error("span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                   ") is empty or reversed");
        if (s.label <= null_label || static_cast<std::size_t>(s.label) >= labels.size())
            throw validation_error("span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                   ") has an invalid entity label");
        auto [it, inserted] = seen.try_emplace({s.start, s.end}, kept.size());
        if (inserted) {
            kept.push_back(s);
            continue;
        }
        switch (policy) {
        case DuplicatePolicy::error:
            throw validation_error("duplicate span (" + std::to_string(s.start) + "," +
                                   std::to_string(s.end) + ")");
        case DuplicatePolicy::first:
            break;
        case DuplicatePolicy::last:
            kept[it->second].label = s.label;
            break;
        }
    }

    std::sort(kept.begin(), kept.end(), nesting_order);
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t b = a + 1; b < kept.size() && kept[b].start < kept[a].end; ++b) {
            if (crosses(kept[a], kept[b]))
                throw validation_error("crossing spans (" + std::to_string(kept[a].start) + "," +
                                       std::to_string(kept[a].end) + ") and (" +
                                       std::to_string(kept[b].start) + "," +
                                       std::to_string(kept[b].end) + ")");
        }
    }
    return make_entity_set_unchecked(std::move(kept));
}

EntitySet validate_entity_set(int n, std::vector<RawSpan> const& spans, LabelSet const& labels,
                              DuplicatePolicy policy) {
    std::vector<LabeledSpan> resolved;
    resolved.reserve(spans.size());
    for (auto const& raw : spans) {
        auto id = labels.find(raw.label);
        if (!id || *id == null_label)
            throw validation_error("unknown entity label '" + raw.label + "'");
        resolved.push_back({raw.start, raw.end, *id});
    }
    return validate_entity_set(n, resolved, labels, policy);
}

namespace {

// `spans` is the nesting-ordered slice of entities strictly inside `node`.
EntityTree build_subtree(LabeledSpan node, std::span<LabeledSpan const> spans) {
    EntityTree tree{node, {}};
    if (spans.empty()) return tree;

    int cursor = node.start;
    std::size_t k = 0;
    while (k < spans.size()) {
        LabeledSpan const top = spans[k];
        std::size_t inner_end = k + 1;
        while (inner_end < spans.size() && spans[inner_end].start < top.end) ++inner_end;
        if (cursor < top.start) tree.children.push_back({{cursor, top.start, null_label}, {}});
        tree.children.push_back(build_subtree(top, spans.subspan(k + 1, inner_end - k - 1)));
        cursor = top.end;
        k = inner_end;
    }
    if (cursor < node.end) tree.children.push_back({{cursor, node.end, null_label}, {}});
    return tree;
}

void collect(EntityTree const& tree, std::vector<LabeledSpan>& out) {
    if (tree.node.label != null_label) out.push_back(tree.node);
    for (auto const& child : tree.children) collect(child, out);
}

bool well_formed(EntityTree const& tree) {
    int cursor = tree.node.start;
    for (auto const& child : tree.children) {
        if (child.node.start < cursor || child.node.end > tree.node.end) return false;
        if (child.node.start >= child.node.end) return false;
        if (child.node.start == tree.node.start && child.node.end == tree.node.end) return false;
        if (!well_formed(child)) return false;
        cursor = child.node.end;
    }
    return true;
}

void write_bracketed(EntityTree const& tree, LabelSet const& labels, std::ostream& os) {
    os << '(' << labels.name(tree.node.label) << ' ' << tree.node.start << ' ' << tree.node.end;
    for (auto const& child : tree.children) {
        os << ' ';
        write_bracketed(child, labels, os);
    }
    os << ')';
}

} // namespace

EntityTree entity_set_to_tree(EntitySet const& set, int n) {
    std::span<LabeledSpan const> spans{set.spans()};
    if (!spans.empty() && spans.front().start == 0 && spans.front().end == n)
        return build_subtree(spans.front(), spans.subspan(1));
    return build_subtree({0, n, null_label}, spans);
}

EntitySet tree_to_entity_set(EntityTree const& tree) {
    std::vector<LabeledSpan> out;
    collect(tree, out);
    return make_entity_set_unchecked(std::move(out));
}

bool is_well_formed(EntityTree const& tree, int n) {
    return tree.node.start == 0 && tree.node.end == n && well_formed(tree);
}

std::string bracketed(EntityTree const& tree, LabelSet const& labels) {
    std::ostringstream os;
    write_bracketed(tree, labels, os);
    return os.str();
}

std::vector<Sentence> sentences_of(std::span<AnnotatedSentence const> data) {
    std::vector<Sentence> out;
    out.reserve(data.size());
    for (auto const& item : data) out.push_back(item.sentence);
    return out;
}

} // namespace nenp
