#include "nenp/chart.hpp"

#include <cmath>
#include <map>

namespace nenp {

double tree_score(SpanScoreChart const& chart, EntitySet const& entities) {
    double total = 0.0;
    for (auto const& s : entities) {
        if (!chart.in_range(s.start, s.end) || s.label < 0 || s.label >= chart.label_count())
            throw validation_error("entity span outside the chart");
        total += chart(s.start, s.end, s.label);
    }
    return total;
}

namespace {

template <class Score>
ChartTables fill_tables(int n, int labels, Score&& score) {
    ChartTables tables;
    tables.length = n;
    auto const cells = static_cast<std::size_t>((n + 1) * (n + 1));
    tables.best.assign(cells, 0.0);
    tables.label.assign(cells, null_label);
    tables.split.assign(cells, -1);

    for (int len = 1; len <= n; ++len) {
        for (int i = 0; i + len <= n; ++i) {
            int const j = i + len;
            LabelId best_label = null_label;
            double best_label_score = score(i, j, null_label);
            for (LabelId l = 1; l < labels; ++l) {
                double const s = score(i, j, l);
                if (!std::isfinite(s)) throw validation_error("non-finite chart score");
                if (s > best_label_score) {
                    best_label_score = s;
                    best_label = l;
                }
            }
            if (!std::isfinite(best_label_score)) throw validation_error("non-finite chart score");

            double best_split_score = 0.0;
            int best_split = -1;
            for (int k = i + 1; k < j; ++k) {
                double const s = tables.best[tables.index(i, k)] + tables.best[tables.index(k, j)];
                if (best_split < 0 || s > best_split_score) {
                    best_split_score = s;
                    best_split = k;
                }
            }
            auto const cell = tables.index(i, j);
            tables.best[cell] = best_label_score + best_split_score;
            tables.label[cell] = best_label;
            tables.split[cell] = best_split;
        }
    }
    return tables;
}

EntityTree backtrack(ChartTables const& tables, int i, int j) {
    auto const cell = tables.index(i, j);
    EntityTree tree{{i, j, tables.label[cell]}, {}};
    if (int const k = tables.split[cell]; k >= 0) {
        tree.children.reserve(2);
        tree.children.push_back(backtrack(tables, i, k));
        tree.children.push_back(backtrack(tables, k, j));
    }
    return tree;
}

template <class Score>
DecodeResult decode(int n, int labels, Score&& score) {
    auto const tables = fill_tables(n, labels, score);
    DecodeResult result;
    result.tree = backtrack(tables, 0, n);
    result.entities = tree_to_entity_set(result.tree);
    result.score = tables.best[tables.index(0, n)];
    return result;
}

int count_mislabeled(EntityTree const& tree, EntitySet const& gold) {
    int cost = tree.node.label != gold.label_at(tree.node.start, tree.node.end) ? 1 : 0;
    for (auto const& child : tree.children) cost += count_mislabeled(child, gold);
    return cost;
}

} // namespace

DecodeResult cky_decode(SpanScoreChart const& chart) {
    return decode(chart.length(), chart.label_count(),
                  [&](int i, int j, LabelId l) { return chart(i, j, l); });
}

DecodeResult loss_augmented_decode(SpanScoreChart const& chart, EntitySet const& gold) {
    int const n = chart.length();
    std::vector<LabelId> gold_label(static_cast<std::size_t>((n + 1) * (n + 1)), null_label);
    for (auto const& s : gold) {
        if (!chart.in_range(s.start, s.end) || s.label >= chart.label_count())
            throw validation_error("gold span outside the chart");
        gold_label[static_cast<std::size_t>(s.start * (n + 1) + s.end)] = s.label;
    }
    return decode(n, chart.label_count(), [&](int i, int j, LabelId l) {
        double const cost = l != gold_label[static_cast<std::size_t>(i * (n + 1) + j)] ? 1.0 : 0.0;
        return chart(i, j, l) + cost;
    });
}

int hamming_loss(EntityTree const& tree, EntitySet const& gold) { return count_mislabeled(tree, gold); }

namespace {

struct Candidate {
    double score;
    EntityTree tree;
};

class BruteForce {
public:
    explicit BruteForce(SpanScoreChart const& chart) : chart_{chart} {}

    // All binary trees over [i, j), each with its best labeling, in (split, left, right) order.
    std::vector<Candidate> const& trees(int i, int j) {
        auto key = std::make_pair(i, j);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        LabelId label = null_label;
        double label_score = chart_(i, j, null_label);
        for (LabelId l = 1; l < chart_.label_count(); ++l) {
            if (chart_(i, j, l) > label_score) {
                label_score = chart_(i, j, l);
                label = l;
            }
        }

        std::vector<Candidate> out;
        if (j - i == 1) {
            out.push_back({label_score, {{i, j, label}, {}}});
        } else {
            for (int k = i + 1; k < j; ++k) {
                auto const& left = trees(i, k);
                auto const& right = trees(k, j);
                for (auto const& l : left)
                    for (auto const& r : right)
                        out.push_back({label_score + (l.score + r.score), {{i, j, label}, {l.tree, r.tree}}});
            }
        }
        return memo_.emplace(key, std::move(out)).first->second;
    }

private:
    SpanScoreChart const& chart_;
    std::map<std::pair<int, int>, std::vector<Candidate>> memo_;
};

} // namespace

DecodeResult brute_force_decode(SpanScoreChart const& chart) {
    int const n = chart.length();
    if (n > brute_force_max_length)
        throw validation_error("brute-force decoding is limited to n <= " +
                               std::to_string(brute_force_max_length));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (LabelId l = 0; l < chart.label_count(); ++l)
                if (!std::isfinite(chart(i, j, l))) throw validation_error("non-finite chart score");

    BruteForce search{chart};
    auto const& all = search.trees(0, n);
    std::size_t best = 0;
    for (std::size_t k = 1; k < all.size(); ++k)
        if (all[k].score > all[best].score) best = k;

    DecodeResult result;
    result.tree = all[best].tree;
    result.entities = tree_to_entity_set(result.tree);
    result.score = all[best].score;
    return result;
}

} // namespace nenp
