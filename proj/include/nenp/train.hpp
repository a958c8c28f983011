#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nenp/chart.hpp"
#include "nenp/eval.hpp"
#include "nenp/model.hpp"

namespace nenp {

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 30;
    int batch_size = 16;
    std::uint64_t seed = 1;
    DropoutRates dropout;
    /// Dev evaluation every this many epochs (the last epoch is always evaluated).
    int eval_every = 1;
    /// Global gradient-norm clip; <= 0 disables.
    double clip_norm = 5.0;
    /// Stop once dev F1 reaches this value; > 1 never stops early.
    double stop_at_f1 = 2.0;

    void validate() const;
};

using GradientSet = ParamTensors;

struct HingeResult {
    double loss = 0.0;
    DecodeResult augmented;
};

/// max(0, max_T [s(T) + Hamming(T, gold)] - s(gold)).
HingeResult hinge_loss(SpanScoreChart const& chart, EntitySet const& gold);

struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
};

/// Structured-hinge subgradient with the loss-augmented tree held fixed.
BackwardResult backward(Sentence const& sentence, ModelParams const& params,
                        NGramLexicon const& lexicon, EntitySet const& gold,
                        DropoutContext const* dropout = nullptr);

struct AdamState {
    ParamTensors first_moment;
    ParamTensors second_moment;
    std::int64_t step = 0;

    static AdamState for_params(ParamTensors const& params);
};

/// One bias-corrected Adam update.
void adam_step(ParamTensors& params, GradientSet const& grads, TrainConfig const& config,
               AdamState& state);

/// Decodes with dropout off.
DecodeResult predict(Sentence const& sentence, ModelParams const& params,
                     NGramLexicon const& lexicon);

Metrics evaluate_model(std::span<AnnotatedSentence const> data, ModelParams const& params,
                       NGramLexicon const& lexicon);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    Metrics dev;
    bool evaluated = false;

    /// "epoch\tloss\tP\tR\tF1".
    std::string line() const;
};

struct TrainResult {
    ModelParams best;
    int best_epoch = 0; // 0 means the initial parameters
    std::vector<EpochLog> log;
};

/// Word and tag vocabularies come from the training sentences.
ModelParams init_for_corpus(std::span<AnnotatedSentence const> train_data, LabelSet const& labels,
                            ModelConfig const& config, std::size_t lexicon_size,
                            std::uint64_t seed);

/// Seeded minibatch hinge training. Returns the parameters with the best dev F1 (earliest on ties).
/// Each epoch's log line is written to `log_stream` when given.
TrainResult train(std::span<AnnotatedSentence const> train_data,
                  std::span<AnnotatedSentence const> dev_data, NGramLexicon const& lexicon,
                  ModelParams initial, TrainConfig const& config,
                  std::ostream* log_stream = nullptr);

struct GroupError {
    std::string name;
    double max_relative_error = 0.0;
    double analytic_max = 0.0;
    double numeric_max = 0.0;
};

struct GradCheckReport {
    std::vector<GroupError> groups;
    double tolerance = 0.0;
    bool passed = false;
    double loss = 0.0;

    std::vector<std::string> failing_groups() const;
};

/// Compares backward() against central differences for every tensor. Group error is
/// max |analytic - numeric| / max(max |analytic|, max |numeric|, 1e-6). `tamper` may alter the
/// analytic gradients before comparison.
GradCheckReport grad_check(ModelParams const& params, NGramLexicon const& lexicon,
                           Sentence const& sentence, EntitySet const& gold, double tolerance,
                           double step = 1e-4,
                           std::function<void(GradientSet&)> const& tamper = {});

} // namespace nenp
