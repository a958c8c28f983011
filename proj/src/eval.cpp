#include "nenp/eval.hpp"

#include <cstdio>
#include <map>

namespace nenp {

Metrics Metrics::from_counts(std::int64_t tp, std::int64_t predicted, std::int64_t gold) {
    Metrics m{tp, predicted, gold, 0.0, 0.0, 0.0};
    if (predicted > 0) m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    if (gold > 0) m.recall = static_cast<double>(tp) / static_cast<double>(gold);
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

std::string Metrics::report() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f\t%.4f\t%.4f", precision, recall, f1);
    return buf;
}

Metrics evaluate(std::span<EntitySet const> predicted, std::span<EntitySet const> gold) {
    if (predicted.size() != gold.size())
        throw validation_error("prediction and gold sentence counts differ");
    std::int64_t tp = 0, n_pred = 0, n_gold = 0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        for (auto const& span : predicted[k])
            if (gold[k].contains(span)) ++tp;
        n_pred += static_cast<std::int64_t>(predicted[k].size());
        n_gold += static_cast<std::int64_t>(gold[k].size());
    }
    return Metrics::from_counts(tp, n_pred, n_gold);
}

Metrics evaluate(std::span<AnnotatedSentence const> predicted,
                 std::span<AnnotatedSentence const> gold) {
    std::map<std::string, EntitySet const*> by_id;
    for (auto const& g : gold)
        if (!by_id.emplace(g.sentence.id(), &g.entities).second)
            throw validation_error("duplicate gold sentence id '" + g.sentence.id() + "'");
    if (predicted.size() != gold.size())
        throw validation_error("prediction and gold sentence counts differ");

    std::vector<EntitySet> pred_sets, gold_sets;
    for (auto const& p : predicted) {
        auto it = by_id.find(p.sentence.id());
        if (it == by_id.end() || it->second == nullptr)
            throw validation_error("prediction id '" + p.sentence.id() + "' has no unique gold match");
        pred_sets.push_back(p.entities);
        gold_sets.push_back(*it->second);
        it->second = nullptr;
    }
    return evaluate(std::span<EntitySet const>{pred_sets}, std::span<EntitySet const>{gold_sets});
}

} // namespace nenp
