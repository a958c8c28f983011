#include "nenp/dataset.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace nenp {

namespace {

std::vector<std::string> split(std::string const& text, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is{text};
    while (std::getline(is, field, sep)) out.push_back(field);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::string> words_of(std::string const& text) {
    std::vector<std::string> out;
    std::istringstream is{text};
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

int parse_int(std::string const& text, std::string const& where) {
    int value = 0;
    auto const* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw validation_error(where + ": bad integer '" + text + "'");
    return value;
}

} // namespace

std::vector<DatasetRecord> read_records(std::istream& is, std::string const& source) {
    std::vector<DatasetRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string const where = source + ":" + std::to_string(line_no);
        auto const fields = split(line, '\t');
        if (fields.size() < 3 || fields.size() > 5)
            throw validation_error(where + ": expected 4 tab-separated fields");

        DatasetRecord record;
        record.id = fields[0];
        record.line = line_no;
        if (record.id.empty()) throw validation_error(where + ": empty record id");
        auto const forms = words_of(fields[1]);
        auto const tags = words_of(fields[2]);
        if (forms.size() != tags.size())
            throw validation_error(where + " (" + record.id + "): " + std::to_string(forms.size()) +
                                   " tokens but " + std::to_string(tags.size()) + " POS tags");
        for (std::size_t k = 0; k < forms.size(); ++k) record.tokens.push_back({forms[k], tags[k]});

        if (fields.size() >= 4 && !fields[3].empty()) {
            for (auto const& triplet : split(fields[3], ';')) {
                if (triplet.empty()) continue;
                auto const parts = split(triplet, ',');
                if (parts.size() != 3 || parts[2].empty())
                    throw validation_error(where + " (" + record.id + "): bad triplet '" + triplet + "'");
                record.spans.push_back({parse_int(parts[0], where), parse_int(parts[1], where), parts[2]});
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<DatasetRecord> read_records(std::string const& path) {
    std::ifstream is{path};
    if (!is) throw io_error("cannot read '" + path + "'");
    return read_records(is, path);
}

LabelSet collect_labels(std::span<std::vector<DatasetRecord> const* const> record_lists) {
    std::set<std::string> names;
    for (auto const* records : record_lists)
        for (auto const& r : *records)
            for (auto const& s : r.spans)
                if (s.label != null_label_name) names.insert(s.label);
    return LabelSet{std::vector<std::string>(names.begin(), names.end())};
}

std::vector<AnnotatedSentence> resolve_records(std::vector<DatasetRecord> const& records,
                                               LabelSet const& labels, DuplicatePolicy policy) {
    std::vector<AnnotatedSentence> out;
    std::string failures;
    std::set<std::string> ids;
    for (auto const& r : records) {
        try {
            if (!ids.insert(r.id).second) throw validation_error("duplicate record id");
            Sentence sentence{r.id, r.tokens};
            auto entities = validate_entity_set(static_cast<int>(sentence.size()), r.spans, labels, policy);
            out.push_back({std::move(sentence), std::move(entities)});
        } catch (Error const& e) {
            failures += "\n  " + r.id + " (line " + std::to_string(r.line) + "): " + e.what();
        }
    }
    if (!failures.empty()) throw validation_error("invalid records:" + failures);
    return out;
}

std::vector<Sentence> sentences_of(std::vector<DatasetRecord> const& records) {
    std::vector<Sentence> out;
    out.reserve(records.size());
    for (auto const& r : records) out.emplace_back(r.id, r.tokens);
    return out;
}

void write_dataset(std::ostream& os, std::span<AnnotatedSentence const> data, LabelSet const& labels,
                   std::span<std::string const> trees) {
    if (!trees.empty() && trees.size() != data.size())
        throw validation_error("tree column does not align with the records");
    for (std::size_t k = 0; k < data.size(); ++k) {
        auto const& item = data[k];
        os << item.sentence.id() << '\t';
        auto const& tokens = item.sentence.tokens();
        for (std::size_t t = 0; t < tokens.size(); ++t) os << (t ? " " : "") << tokens[t].form;
        os << '\t';
        for (std::size_t t = 0; t < tokens.size(); ++t) os << (t ? " " : "") << tokens[t].pos;
        os << '\t';
        bool first = true;
        for (auto const& s : item.entities) {
            os << (first ? "" : ";") << s.start << ',' << s.end << ',' << labels.name(s.label);
            first = false;
        }
        if (!trees.empty()) os << '\t' << trees[k];
        os << '\n';
    }
}

void write_dataset(std::string const& path, std::span<AnnotatedSentence const> data,
                   LabelSet const& labels, std::span<std::string const> trees) {
    std::ofstream os{path, std::ios::binary};
    if (!os) throw io_error("cannot write '" + path + "'");
    write_dataset(os, data, labels, trees);
    if (!os) throw io_error("failed writing '" + path + "'");
}

namespace {

using Setter = std::function<void(RunConfig&, std::string const&)>;

double to_double(std::string const& key, std::string const& value) {
    try {
        std::size_t used = 0;
        double const v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument{value};
        return v;
    } catch (std::logic_error const&) {
        throw usage_error("config: '" + key + "' expects a number, got '" + value + "'");
    }
}

long long to_integer(std::string const& key, std::string const& value) {
    try {
        std::size_t used = 0;
        long long const v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument{value};
        return v;
    } catch (std::logic_error const&) {
        throw usage_error("config: '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::map<std::string, Setter> const& setters() {
    static std::map<std::string, Setter> const table = [] {
        std::map<std::string, Setter> m;
        auto int_field = [&](std::string key, auto member_of) {
            m[key] = [key, member_of](RunConfig& c, std::string const& v) {
                member_of(c) = static_cast<int>(to_integer(key, v));
            };
        };
        auto real_field = [&](std::string key, auto member_of) {
            m[key] = [key, member_of](RunConfig& c, std::string const& v) { member_of(c) = to_double(key, v); };
        };
        int_field("dim", [](RunConfig& c) -> int& { return c.model.dim; });
        int_field("layers", [](RunConfig& c) -> int& { return c.model.layers; });
        int_field("heads", [](RunConfig& c) -> int& { return c.model.heads; });
        int_field("ffn_dim", [](RunConfig& c) -> int& { return c.model.ffn_dim; });
        int_field("hidden", [](RunConfig& c) -> int& { return c.model.hidden; });
        int_field("categories", [](RunConfig& c) -> int& { return c.model.categories; });
        int_field("max_len", [](RunConfig& c) -> int& { return c.model.max_len; });
        real_field("layer_norm_eps", [](RunConfig& c) -> double& { return c.model.layer_norm_eps; });
        real_field("init_range", [](RunConfig& c) -> double& { return c.model.init_range; });
        real_field("learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; });
        real_field("beta1", [](RunConfig& c) -> double& { return c.train.beta1; });
        real_field("beta2", [](RunConfig& c) -> double& { return c.train.beta2; });
        real_field("epsilon", [](RunConfig& c) -> double& { return c.train.epsilon; });
        int_field("epochs", [](RunConfig& c) -> int& { return c.train.epochs; });
        int_field("batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; });
        m["seed"] = [](RunConfig& c, std::string const& v) {
            c.train.seed = static_cast<std::uint64_t>(to_integer("seed", v));
        };
        real_field("dropout_attention", [](RunConfig& c) -> double& { return c.train.dropout.attention; });
        real_field("dropout_pos", [](RunConfig& c) -> double& { return c.train.dropout.pos; });
        real_field("dropout_residual", [](RunConfig& c) -> double& { return c.train.dropout.residual; });
        real_field("dropout_word", [](RunConfig& c) -> double& { return c.train.dropout.word; });
        int_field("eval_every", [](RunConfig& c) -> int& { return c.train.eval_every; });
        real_field("clip_norm", [](RunConfig& c) -> double& { return c.train.clip_norm; });
        real_field("stop_at_f1", [](RunConfig& c) -> double& { return c.train.stop_at_f1; });
        return m;
    }();
    return table;
}

std::string trim(std::string const& s) {
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto const e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void set_config_value(RunConfig& config, std::string const& key, std::string const& value) {
    auto it = setters().find(key);
    if (it == setters().end()) throw usage_error("config: unknown key '" + key + "'");
    it->second(config, value);
}

RunConfig parse_run_config(std::istream& is) {
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto const text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        auto const eq = text.find('=');
        if (eq == std::string::npos)
            throw usage_error("config line " + std::to_string(line_no) + ": expected key=value");
        set_config_value(config, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    }
    config.model.validate();
    config.train.validate();
    return config;
}

RunConfig load_run_config(std::string const& path) {
    std::ifstream is{path};
    if (!is) throw io_error("cannot read config '" + path + "'");
    return parse_run_config(is);
}

} // namespace nenp
