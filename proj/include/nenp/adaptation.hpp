#pragma once

#include <optional>
#include <span>

#include "nenp/corpus_stats.hpp"
#include "nenp/eval.hpp"
#include "nenp/model.hpp"
#include "nenp/train.hpp"

namespace nenp {

/// Continues training after the merge with unchanged hyperparameters.
struct RetrainSpec {
    std::span<AnnotatedSentence const> train;
    std::span<AnnotatedSentence const> dev;
    TrainConfig config;
};

struct AdaptationResult {
    Metrics before;
    Metrics after;
    NGramLexicon merged;
    ModelParams adapted;
};

/// Scores `test` with the base lexicon, merges n-grams from `external` into it, extends the
/// n-gram table (new columns start at their length bucket's centroid), optionally retrains, and
/// scores `test` again.
AdaptationResult run_adaptation(ModelParams const& params, NGramLexicon const& base,
                                std::span<Sentence const> external, FeatureKind kind,
                                Thresholds thresholds, std::span<AnnotatedSentence const> test,
                                std::optional<RetrainSpec> const& retrain = std::nullopt);

} // namespace nenp
