#include "nenp/archive.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "nenp/dataset.hpp"

namespace nenp {

static_assert(std::endian::native == std::endian::little, "archive IO assumes a little-endian host");

namespace {

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<char const*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<char const*>(&v), 8); }

void get_bytes(std::istream& is, char* out, std::size_t n) {
    if (!is.read(out, static_cast<std::streamsize>(n))) throw validation_error("archive is truncated");
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    get_bytes(is, reinterpret_cast<char*>(&v), 4);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    get_bytes(is, reinterpret_cast<char*>(&v), 8);
    return v;
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string config_text(ModelArchive const& archive) {
    auto const& p = archive.params;
    auto const& c = p.config;
    std::ostringstream os;
    os << "dim=" << c.dim << '\n'
       << "layers=" << c.layers << '\n'
       << "heads=" << c.heads << '\n'
       << "ffn_dim=" << c.ffn_dim << '\n'
       << "hidden=" << c.hidden << '\n'
       << "categories=" << c.categories << '\n'
       << "max_len=" << c.max_len << '\n'
       << "layer_norm_eps=" << format_real(c.layer_norm_eps) << '\n'
       << "init_range=" << format_real(c.init_range) << '\n'
       << "lexicon_path=" << archive.lexicon_path << '\n';
    for (std::size_t k = 1; k < p.labels.size(); ++k) os << "label=" << p.labels.name(static_cast<LabelId>(k)) << '\n';
    // <unk> is implicit in both vocabularies.
    for (std::size_t k = 1; k < p.words.size(); ++k) os << "word=" << p.words.tokens()[k] << '\n';
    for (std::size_t k = 1; k < p.tags.size(); ++k) os << "tag=" << p.tags.tokens()[k] << '\n';
    return os.str();
}

} // namespace

void write_archive(std::ostream& os, ModelArchive const& archive) {
    os.write(archive_magic, sizeof archive_magic - 1);
    auto const text = config_text(archive);
    put_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));

    auto const refs = archive.params.tensors.refs();
    put_u32(os, static_cast<std::uint32_t>(refs.size()));
    std::vector<float> payload;
    for (auto const& t : refs) {
        put_u32(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        if (t.is_vector) {
            put_u32(os, 1);
            put_u32(os, static_cast<std::uint32_t>(t.rows));
        } else {
            put_u32(os, 2);
            put_u32(os, static_cast<std::uint32_t>(t.rows));
            put_u32(os, static_cast<std::uint32_t>(t.cols));
        }
        payload.resize(static_cast<std::size_t>(t.size()));
        for (Eigen::Index k = 0; k < t.size(); ++k) payload[static_cast<std::size_t>(k)] = static_cast<float>(t.data[k]);
        os.write(reinterpret_cast<char const*>(payload.data()),
                 static_cast<std::streamsize>(payload.size() * sizeof(float)));
    }
    put_u64(os, archive.lexicon_checksum);
}

ModelArchive read_archive(std::istream& is) {
    char magic[sizeof archive_magic - 1];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, archive_magic, sizeof magic) != 0)
        throw validation_error("not a model archive (bad magic)");

    std::string text(get_u32(is), '\0');
    get_bytes(is, text.data(), text.size());

    RunConfig run;
    ModelArchive archive;
    std::vector<std::string> labels, words, tags;
    std::istringstream lines{text};
    for (std::string line; std::getline(lines, line);) {
        auto const eq = line.find('=');
        if (eq == std::string::npos) throw validation_error("archive configuration line without '='");
        auto const key = line.substr(0, eq);
        auto const value = line.substr(eq + 1);
        if (key == "label") labels.push_back(value);
        else if (key == "word") words.push_back(value);
        else if (key == "tag") tags.push_back(value);
        else if (key == "lexicon_path") archive.lexicon_path = value;
        else set_config_value(run, key, value);
    }
    run.model.validate();

    std::uint32_t const count = get_u32(is);
    std::map<std::string, std::vector<std::uint32_t>> shapes;
    std::map<std::string, std::vector<float>> payloads;
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name(get_u32(is), '\0');
        get_bytes(is, name.data(), name.size());
        std::uint32_t const rank = get_u32(is);
        if (rank < 1 || rank > 2) throw validation_error("archive tensor '" + name + "' has bad rank");
        std::vector<std::uint32_t> dims(rank);
        std::size_t elements = 1;
        for (auto& d : dims) elements *= (d = get_u32(is));
        std::vector<float> values(elements);
        get_bytes(is, reinterpret_cast<char*>(values.data()), elements * sizeof(float));
        shapes[name] = dims;
        payloads[name] = std::move(values);
    }
    archive.lexicon_checksum = get_u64(is);
    if (is.peek() != std::char_traits<char>::eof()) throw validation_error("trailing bytes after archive");

    auto const lexicon_size = shapes.contains("ngram_embedding") && shapes["ngram_embedding"].size() == 2
                                  ? shapes["ngram_embedding"][1]
                                  : 0u;
    archive.params = init_params(run.model, Vocabulary{words}, Vocabulary{tags}, LabelSet{labels},
                                 lexicon_size, 0);
    auto refs = archive.params.tensors.refs();
    if (refs.size() != count) throw validation_error("archive tensor count does not match its configuration");
    for (auto& t : refs) {
        auto it = payloads.find(t.name);
        if (it == payloads.end()) throw validation_error("archive is missing tensor '" + t.name + "'");
        auto const& dims = shapes[t.name];
        bool const ok = t.is_vector ? dims.size() == 1 && dims[0] == t.rows
                                    : dims.size() == 2 && dims[0] == t.rows && dims[1] == t.cols;
        if (!ok) throw validation_error("archive tensor '" + t.name + "' has the wrong shape");
        for (Eigen::Index k = 0; k < t.size(); ++k) t.data[k] = static_cast<double>(it->second[static_cast<std::size_t>(k)]);
    }
    return archive;
}

void save_archive(std::string const& path, ModelArchive const& archive) {
    std::ofstream os{path, std::ios::binary};
    if (!os) throw io_error("cannot write '" + path + "'");
    write_archive(os, archive);
    if (!os) throw io_error("failed writing '" + path + "'");
}

ModelArchive load_archive(std::string const& path) {
    std::ifstream is{path, std::ios::binary};
    if (!is) throw io_error("cannot read '" + path + "'");
    return read_archive(is);
}

void verify_lexicon(ModelArchive const& archive, NGramLexicon const& lexicon) {
    if (lexicon.checksum() != archive.lexicon_checksum)
        throw checksum_error("lexicon checksum does not match the one recorded in the model archive");
    if (static_cast<Eigen::Index>(lexicon.size()) != archive.params.tensors.ngram_embedding.cols())
        throw checksum_error("lexicon size does not match the model's n-gram table");
}

} // namespace nenp
