#include "nenp/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

namespace nenp {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(epsilon > 0.0))
        throw validation_error("train config: learning rate and epsilon must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw validation_error("train config: Adam betas must be in [0, 1)");
    if (epochs < 0) throw validation_error("train config: epochs must be >= 0");
    if (batch_size < 1 || eval_every < 1)
        throw validation_error("train config: batch size and eval cadence must be >= 1");
    for (double rate : {dropout.attention, dropout.pos, dropout.residual, dropout.word})
        if (!(rate >= 0.0 && rate < 1.0))
            throw validation_error("train config: dropout rates must be in [0, 1)");
}

HingeResult hinge_loss(SpanScoreChart const& chart, EntitySet const& gold) {
    HingeResult result;
    result.augmented = loss_augmented_decode(chart, gold);
    result.loss = std::max(0.0, result.augmented.score - tree_score(chart, gold));
    return result;
}

namespace {

// Adds the subgradient of one sentence into `grads` and returns its hinge loss.
double accumulate_gradient(Sentence const& sentence, ModelParams const& params,
                           NGramLexicon const& lexicon, EntitySet const& gold,
                           DropoutContext const* dropout, GradientSet& grads) {
    ScoringPass pass{sentence, params, lexicon, dropout};
    auto const hinge = hinge_loss(pass.chart(), gold);
    if (!std::isfinite(hinge.loss))
        throw validation_error("non-finite loss on sentence '" + sentence.id() + "'");
    if (hinge.loss <= 0.0) return 0.0;

    std::vector<ScoringPass::ScoreGrad> score_grads;
    for (auto const& s : hinge.augmented.entities) score_grads.push_back({s.start, s.end, s.label, 1.0});
    for (auto const& s : gold) score_grads.push_back({s.start, s.end, s.label, -1.0});
    pass.backward(score_grads, grads);
    return hinge.loss;
}

} // namespace

BackwardResult backward(Sentence const& sentence, ModelParams const& params,
                        NGramLexicon const& lexicon, EntitySet const& gold,
                        DropoutContext const* dropout) {
    BackwardResult result{0.0, params.tensors.zeros_like()};
    result.loss = accumulate_gradient(sentence, params, lexicon, gold, dropout, result.grads);
    if (!result.grads.all_finite())
        throw validation_error("non-finite gradient on sentence '" + sentence.id() + "'");
    return result;
}

AdamState AdamState::for_params(ParamTensors const& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParamTensors& params, GradientSet const& grads, TrainConfig const& config,
               AdamState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
        !params.same_shape(state.second_moment))
        throw validation_error("adam: parameter, gradient and moment shapes differ");
    ++state.step;
    double const correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    double const correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    auto theta = params.refs();
    auto const g = grads.refs();
    auto m = state.first_moment.refs();
    auto v = state.second_moment.refs();
    for (std::size_t k = 0; k < theta.size(); ++k) {
        auto const grad = g[k].map().array();
        m[k].map().array() = config.beta1 * m[k].map().array() + (1.0 - config.beta1) * grad;
        v[k].map().array() = config.beta2 * v[k].map().array() + (1.0 - config.beta2) * grad.square();
        theta[k].map().array() -= config.learning_rate * (m[k].map().array() / correction1) /
                                  ((v[k].map().array() / correction2).sqrt() + config.epsilon);
    }
}

DecodeResult predict(Sentence const& sentence, ModelParams const& params,
                     NGramLexicon const& lexicon) {
    return cky_decode(score_spans(sentence, params, lexicon));
}

Metrics evaluate_model(std::span<AnnotatedSentence const> data, ModelParams const& params,
                       NGramLexicon const& lexicon) {
    std::vector<EntitySet> pred, gold;
    pred.reserve(data.size());
    gold.reserve(data.size());
    for (auto const& item : data) {
        pred.push_back(predict(item.sentence, params, lexicon).entities);
        gold.push_back(item.entities);
    }
    return evaluate(std::span<EntitySet const>{pred}, std::span<EntitySet const>{gold});
}

std::string EpochLog::line() const {
    char buf[128];
    if (evaluated)
        std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.4f\t%.4f\t%.4f", epoch, mean_loss,
                      dev.precision, dev.recall, dev.f1);
    else
        std::snprintf(buf, sizeof buf, "%d\t%.6f\t-\t-\t-", epoch, mean_loss);
    return buf;
}

ModelParams init_for_corpus(std::span<AnnotatedSentence const> train_data, LabelSet const& labels,
                            ModelConfig const& config, std::size_t lexicon_size,
                            std::uint64_t seed) {
    std::vector<std::string> words, tags;
    for (auto const& item : train_data)
        for (auto const& tok : item.sentence.tokens()) {
            words.push_back(tok.form);
            tags.push_back(tok.pos);
        }
    return init_params(config, Vocabulary{std::move(words)}, Vocabulary{std::move(tags)}, labels,
                       lexicon_size, seed);
}

TrainResult train(std::span<AnnotatedSentence const> train_data,
                  std::span<AnnotatedSentence const> dev_data, NGramLexicon const& lexicon,
                  ModelParams initial, TrainConfig const& config, std::ostream* log_stream) {
    config.validate();
    if (train_data.empty()) throw validation_error("training data is empty");
    if (initial.tensors.ngram_embedding.cols() != static_cast<Eigen::Index>(lexicon.size()))
        throw validation_error("lexicon size does not match the model's n-gram table");

    TrainResult result{initial, 0, {}};
    ModelParams params = std::move(initial);
    AdamState adam = AdamState::for_params(params.tensors);
    std::mt19937_64 rng{config.seed};
    DropoutContext dropout{config.dropout, &rng};
    double best_f1 = -1.0;

    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    GradientSet batch_grads = params.tensors.zeros_like();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            std::size_t const end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            batch_grads.scale(0.0);
            for (std::size_t k = begin; k < end; ++k) {
                auto const& item = train_data[order[k]];
                loss_sum += accumulate_gradient(item.sentence, params, lexicon, item.entities,
                                                &dropout, batch_grads);
            }
            batch_grads.scale(1.0 / static_cast<double>(end - begin));
            double const norm = std::sqrt(batch_grads.squared_norm());
            if (!std::isfinite(norm))
                throw validation_error("non-finite gradient in epoch " + std::to_string(epoch));
            if (config.clip_norm > 0.0 && norm > config.clip_norm)
                batch_grads.scale(config.clip_norm / norm);
            adam_step(params.tensors, batch_grads, config, adam);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_loss = loss_sum / static_cast<double>(train_data.size());
        if (!std::isfinite(entry.mean_loss))
            throw validation_error("non-finite mean loss in epoch " + std::to_string(epoch));
        bool const last = epoch == config.epochs;
        if (epoch % config.eval_every == 0 || last) {
            entry.evaluated = true;
            entry.dev = evaluate_model(dev_data, params, lexicon);
            if (entry.dev.f1 > best_f1) {
                best_f1 = entry.dev.f1;
                result.best = params;
                result.best_epoch = epoch;
            }
        }
        result.log.push_back(entry);
        if (log_stream) *log_stream << entry.line() << '\n' << std::flush;
        if (entry.evaluated && entry.dev.f1 >= config.stop_at_f1) break;
    }
    return result;
}

std::vector<std::string> GradCheckReport::failing_groups() const {
    std::vector<std::string> out;
    for (auto const& g : groups)
        if (!(g.max_relative_error < tolerance)) out.push_back(g.name);
    return out;
}

namespace {
double const grad_check_floor = 1e-6;
}

GradCheckReport grad_check(ModelParams const& params, NGramLexicon const& lexicon,
                           Sentence const& sentence, EntitySet const& gold, double tolerance,
                           double step, std::function<void(GradientSet&)> const& tamper) {
    auto analytic = backward(sentence, params, lexicon, gold);
    if (tamper) tamper(analytic.grads);

    GradCheckReport report;
    report.tolerance = tolerance;
    report.loss = analytic.loss;

    // loss-augmented tree held fixed, as in backward()
    auto const hinge = hinge_loss(score_spans(sentence, params, lexicon), gold);
    double const hamming = hamming_loss(hinge.augmented.tree, gold);
    ModelParams probe = params;
    auto objective = [&] {
        if (hinge.loss <= 0.0) return 0.0;
        auto const chart = score_spans(sentence, probe, lexicon);
        return tree_score(chart, hinge.augmented.entities) + hamming - tree_score(chart, gold);
    };

    auto probe_refs = probe.tensors.refs();
    auto const grad_refs = analytic.grads.refs();
    report.passed = true;
    for (std::size_t k = 0; k < probe_refs.size(); ++k) {
        auto values = probe_refs[k].map();
        auto const grad = grad_refs[k].map();
        GroupError group{probe_refs[k].name, 0.0, grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0, 0.0};
        double max_diff = 0.0;
        for (Eigen::Index e = 0; e < values.size(); ++e) {
            double const saved = values.data()[e];
            values.data()[e] = saved + step;
            double const plus = objective();
            values.data()[e] = saved - step;
            double const minus = objective();
            values.data()[e] = saved;
            double const numeric = (plus - minus) / (2.0 * step);
            group.numeric_max = std::max(group.numeric_max, std::abs(numeric));
            max_diff = std::max(max_diff, std::abs(numeric - grad.data()[e]));
        }
        // floor covers groups with vanishing gradient (key biases)
        double const scale = std::max({group.analytic_max, group.numeric_max, grad_check_floor});
        group.max_relative_error = max_diff / scale;
        if (!(group.max_relative_error < tolerance)) report.passed = false;
        report.groups.push_back(group);
    }
    return report;
}

} // namespace nenp
