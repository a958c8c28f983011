#include "nenp/adaptation.hpp"

namespace nenp {

AdaptationResult run_adaptation(ModelParams const& params, NGramLexicon const& base,
                                std::span<Sentence const> external, FeatureKind kind,
                                Thresholds thresholds, std::span<AnnotatedSentence const> test,
                                std::optional<RetrainSpec> const& retrain) {
    AdaptationResult result{evaluate_model(test, params, base), {}, merge_lexicon(base, external, kind, thresholds),
                            params};
    extend_ngram_embeddings(result.adapted, result.merged);
    if (retrain)
        result.adapted = train(retrain->train, retrain->dev, result.merged, std::move(result.adapted),
                               retrain->config)
                             .best;
    result.after = evaluate_model(test, result.adapted, result.merged);
    return result;
}

} // namespace nenp
