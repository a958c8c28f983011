#pragma once

#include <vector>

#include "nenp/core.hpp"
#include "nenp/span_chart.hpp"

namespace nenp {

struct DecodeResult {
    /// Full binary tree over [0, n); non-entity nodes carry O.
    EntityTree tree;
    EntitySet entities;
    double score = 0.0;
};

/// Best-score and back-pointer tables of one CKY run, indexed [i * (n + 1) + j].
struct ChartTables {
    int length = 0;
    std::vector<double> best;
    std::vector<LabelId> label;
    std::vector<int> split; // -1 for length-one spans

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(length + 1) +
               static_cast<std::size_t>(j);
    }
};

/// Sum of s(i, j, l) over the entity triplets.
double tree_score(SpanScoreChart const& chart, EntitySet const& entities);

/// Exact argmax over binary trees. Ties go to the lowest label index, then the smallest split.
DecodeResult cky_decode(SpanScoreChart const& chart);

/// CKY over s(i, j, l) + [l != gold(i, j)]; the returned score includes the Hamming term.
DecodeResult loss_augmented_decode(SpanScoreChart const& chart, EntitySet const& gold);

/// Hamming cost of a decoded tree against gold: nodes whose label differs from the gold label
/// of the same span (O when the span is not a gold entity).
int hamming_loss(EntityTree const& tree, EntitySet const& gold);

/// Exhaustive search over tree shapes and labelings; exponential, n <= 10.
DecodeResult brute_force_decode(SpanScoreChart const& chart);

inline constexpr int brute_force_max_length = 10;

} // namespace nenp
