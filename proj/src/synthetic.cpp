#include "nenp/synthetic.hpp"

#include <algorithm>
#include <random>

namespace nenp {

namespace {

struct Word {
    char const* form;
    char const* pos;
};

// Full names are fixed first/last pairs.
constexpr Word first_names[] = {{"john", "NNP"}, {"mary", "NNP"}, {"ahmed", "NNP"},
                                {"li", "NNP"},   {"sofia", "NNP"}, {"peter", "NNP"}};
constexpr Word last_names[] = {{"smith", "NNP"},  {"chen", "NNP"},   {"garcia", "NNP"},
                               {"novak", "NNP"},  {"okafor", "NNP"}, {"brown", "NNP"}};
constexpr std::size_t name_count = std::size(first_names);
constexpr Word cities[] = {{"paris", "NNP"}, {"lagos", "NNP"},  {"osaka", "NNP"},
                           {"lima", "NNP"},  {"denver", "NNP"}, {"kyiv", "NNP"}};
constexpr Word countries[] = {{"france", "NNP"}, {"peru", "NNP"}, {"japan", "NNP"}, {"kenya", "NNP"}};

struct DomainWords {
    // Organisation suffix cues ("<name> university") and the "<cue> of <place>" pattern.
    std::vector<Word> suffix_cues;
    Word of_cue;
    std::vector<std::pair<Word, Word>> org_names;
    std::vector<std::pair<Word, Word>> place_pairs;
};

DomainWords const& words_for(Domain domain) {
    static DomainWords const a{{{"university", "NN"}, {"motors", "NNS"}},
                               {"bank", "NN"},
                               {{{"apex", "NNP"}, {"motors", "NNS"}},
                                {{"delta", "NNP"}, {"university", "NN"}},
                                {{"summit", "NNP"}, {"motors", "NNS"}}},
                               {{{"new", "NNP"}, {"york", "NNP"}}, {{"hong", "NNP"}, {"kong", "NNP"}}}};
    static DomainWords const b{{{"institute", "NN"}, {"labs", "NNS"}},
                               {"clinic", "NN"},
                               {{{"orion", "NNP"}, {"labs", "NNS"}},
                                {{"vertex", "NNP"}, {"institute", "NN"}},
                                {{"zenith", "NNP"}, {"labs", "NNS"}}},
                               {{{"buenos", "NNP"}, {"aires", "NNP"}}, {{"san", "NNP"}, {"diego", "NNP"}}}};
    return domain == Domain::a ? a : b;
}

class Builder {
public:
    Builder(std::mt19937_64& rng, DomainWords const& words) : rng_{rng}, words_{words} {}

    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    // Integer percent draws keep the output identical across standard libraries.
    bool chance(int percent) { return static_cast<int>(rng_() % 100) < percent; }

    void word(Word w) { tokens_.push_back({w.form, w.pos}); }
    void word(char const* form, char const* pos) { tokens_.push_back({form, pos}); }
    template <std::size_t N>
    void any(Word const (&list)[N]) { word(list[pick(N)]); }

    int here() const { return static_cast<int>(tokens_.size()); }
    void mark(int start, char const* label) { spans_.push_back({start, here(), label}); }

    void person() {
        int const s = here();
        auto const k = pick(name_count);
        word(first_names[k]);
        word(last_names[k]);
        mark(s, "PER");
    }

    // "the lima of peru" nests two places inside a third.
    void place(bool allow_nested = true) {
        int const s = here();
        int const roll = static_cast<int>(pick(100));
        if (allow_nested && roll < 10) {
            word("the", "DT");
            int const c = here();
            any(cities);
            mark(c, "LOC");
            word("of", "IN");
            int const k = here();
            any(countries);
            mark(k, "LOC");
        } else if (roll < 45) {
            any(cities);
        } else if (roll < 75) {
            auto const& pair = words_.place_pairs[pick(words_.place_pairs.size())];
            word(pair.first);
            word(pair.second);
        } else {
            any(countries);
        }
        mark(s, "LOC");
    }

    void organisation() {
        int const s = here();
        int const roll = static_cast<int>(pick(100));
        if (roll < 12) {
            word(words_.of_cue);
            word("of", "IN");
            place();
        } else if (roll < 20) {
            int const c = here();
            any(cities);
            mark(c, "LOC");
            word(words_.suffix_cues[pick(words_.suffix_cues.size())]);
        } else if (roll < 25) {
            int const p = here();
            any(last_names);
            mark(p, "PER");
            word(words_.suffix_cues[pick(words_.suffix_cues.size())]);
        } else {
            auto const& name = words_.org_names[pick(words_.org_names.size())];
            word(name.first);
            word(name.second);
        }
        mark(s, "ORG");
    }

    void entity() {
        switch (pick(3)) {
        case 0: person(); break;
        case 1: organisation(); break;
        default: place(); break;
        }
    }

    void sentence() {
        switch (pick(6)) {
        case 0:
            person();
            word(chance(50) ? Word{"joined", "VBD"} : Word{"left", "VBD"});
            organisation();
            break;
        case 1:
            person();
            word("visited", "VBD");
            place();
            if (chance(50)) word("yesterday", "NN");
            break;
        case 2:
            word("officials", "NNS");
            word("from", "IN");
            organisation();
            word("met", "VBD");
            person();
            word("in", "IN");
            place();
            break;
        case 3:
            organisation();
            word("and", "CC");
            organisation();
            word("said", "VBD");
            word("today", "NN");
            break;
        case 4:
            entity();
            word("praised", "VBD");
            entity();
            break;
        default:
            word("at", "IN");
            place();
            word(",", ",");
            person();
            word("met", "VBD");
            word("with", "IN");
            entity();
            break;
        }
        word(".", ".");
    }

    AnnotatedSentence take(std::string id, LabelSet const& labels) {
        auto entities = validate_entity_set(here(), spans_, labels);
        AnnotatedSentence out{Sentence{std::move(id), std::move(tokens_)}, std::move(entities)};
        tokens_.clear();
        spans_.clear();
        return out;
    }

private:
    std::mt19937_64& rng_;
    DomainWords const& words_;
    std::vector<Token> tokens_;
    std::vector<RawSpan> spans_;
};

} // namespace

Domain parse_domain(std::string const& name) {
    if (name == "A" || name == "a") return Domain::a;
    if (name == "B" || name == "b") return Domain::b;
    throw usage_error("unknown domain '" + name + "' (expected A or B)");
}

LabelSet synthetic_labels() { return LabelSet{{"LOC", "ORG", "PER"}}; }

std::vector<AnnotatedSentence> generate_synthetic(std::uint64_t seed, int count, Domain domain,
                                                  std::string const& id_prefix) {
    if (count < 1) throw usage_error("sentence count must be at least 1");
    std::mt19937_64 rng{seed};
    auto const labels = synthetic_labels();
    Builder builder{rng, words_for(domain)};
    std::vector<AnnotatedSentence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        builder.sentence();
        out.push_back(builder.take(id_prefix + std::to_string(k), labels));
    }
    return out;
}

int max_entity_depth(EntitySet const& entities) {
    // Spans come in nesting order, so every ancestor precedes its descendants.
    std::vector<LabeledSpan> open;
    int depth = 0;
    for (auto const& s : entities) {
        while (!open.empty() && open.back().end <= s.start) open.pop_back();
        open.push_back(s);
        depth = std::max(depth, static_cast<int>(open.size()));
    }
    return depth;
}

double nested_sentence_rate(std::vector<AnnotatedSentence> const& data) {
    if (data.empty()) return 0.0;
    auto const nested = std::count_if(data.begin(), data.end(),
                                      [](auto const& s) { return max_entity_depth(s.entities) > 1; });
    return static_cast<double>(nested) / static_cast<double>(data.size());
}

} // namespace nenp
