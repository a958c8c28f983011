#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "nenp/core.hpp"

namespace nenp {

struct Metrics {
    std::int64_t true_positives = 0;
    std::int64_t predicted = 0;
    std::int64_t gold = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    static Metrics from_counts(std::int64_t tp, std::int64_t predicted, std::int64_t gold);
    /// "P\tR\tF1" with four decimals.
    std::string report() const;
};

/// Micro-averaged exact (i, j, label) matching over aligned sentences.
Metrics evaluate(std::span<EntitySet const> predicted, std::span<EntitySet const> gold);

/// Pairs sentences by id; throws a validation error when the id sets differ.
Metrics evaluate(std::span<AnnotatedSentence const> predicted,
                 std::span<AnnotatedSentence const> gold);

} // namespace nenp
