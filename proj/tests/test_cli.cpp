#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nenp/archive.hpp"
#include "nenp/dataset.hpp"
#include "nenp/synthetic.hpp"

using namespace nenp;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    auto const dir = fs::temp_directory_path() / ("nenp_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(fs::path const& p) {
    std::ifstream in{p, std::ios::binary};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(fs::path const& p, std::string const& text) { std::ofstream{p, std::ios::binary} << text; }

struct Run {
    int code;
    std::string out;
};

Run nenp_cli(std::string const& args) {
    auto const out = scratch() / "stdout.txt";
    std::string const cmd = std::string{NENP_BIN} + " " + args + " > " + out.string() + " 2>/dev/null";
    int const status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

ModelArchive small_archive(NGramLexicon const& lexicon) {
    ModelConfig c;
    c.dim = 4;
    c.layers = 1;
    c.heads = 2;
    c.ffn_dim = 6;
    c.hidden = 5;
    c.categories = 2;
    c.max_len = 20;
    auto params = init_params(c, Vocabulary{{"a", "b"}}, Vocabulary{{"N"}}, LabelSet{{"ORG", "PER"}},
                              lexicon.size(), 9);
    return {std::move(params), "lex.txt", lexicon.checksum()};
}

} // namespace

TEST_CASE("dataset files parse and round trip") {
    std::istringstream in{"x1\tnew york\tNNP NNP\t0,2,LOC\n\nx2\tbank\tNN\t\nx3\tof\tIN\n"};
    auto const records = read_records(in, "mem");
    REQUIRE(records.size() == 3);
    CHECK(records[0].line == 1);
    CHECK(records[2].line == 4);
    std::vector<std::vector<DatasetRecord> const*> lists{&records};
    auto const labels = collect_labels(lists);
    CHECK(labels.entity_count() == 1);
    auto const data = resolve_records(records, labels);
    CHECK(data[0].entities.spans()[0] == LabeledSpan{0, 2, 1});
    CHECK(data[1].entities.empty());

    std::ostringstream out;
    write_dataset(out, data, labels);
    std::istringstream back{out.str()};
    auto const again = resolve_records(read_records(back, "mem"), labels);
    CHECK(again.size() == 3);
    CHECK(again[0].entities == data[0].entities);
}

TEST_CASE("dataset validation reports every bad record") {
    std::istringstream in{"a\tx y\tN N\t0,3,PER\nb\tx\tN\t0,1,PER\nc\tx y z\tN N N\t0,2,PER;1,3,PER\n"};
    auto const records = read_records(in, "mem");
    try {
        resolve_records(records, LabelSet{{"PER"}});
        FAIL("expected validation error");
    } catch (Error const& e) {
        CHECK(e.kind() == ErrorKind::validation);
        std::string const msg = e.what();
        CHECK(msg.find("a (line 1)") != std::string::npos);
        CHECK(msg.find("c (line 3)") != std::string::npos);
        CHECK(msg.find("b (line 2)") == std::string::npos);
    }
    std::istringstream twice{"a\tx\tN\t\na\ty\tN\t\n"};
    CHECK_THROWS_AS(resolve_records(read_records(twice, "mem"), LabelSet{{"PER"}}), Error);
    std::istringstream bad{"only-id\n"};
    CHECK_THROWS_AS(read_records(bad, "mem"), Error);
    std::istringstream uneven{"c\tx y\tN\t\n"};
    CHECK_THROWS_AS(read_records(uneven, "mem"), Error);
}

TEST_CASE("run config parsing") {
    std::istringstream in{"# comment\ndim=32\nheads=4\nlearning_rate=0.002\ndropout_word=0.1\nstop_at_f1=1\n"};
    auto const config = parse_run_config(in);
    CHECK(config.model.dim == 32);
    CHECK(config.train.learning_rate == 0.002);
    CHECK(config.train.dropout.word == 0.1);
    CHECK(config.train.stop_at_f1 == 1.0);
    std::istringstream unknown{"dimension=3\n"};
    CHECK_THROWS_AS(parse_run_config(unknown), Error);
    std::istringstream invalid{"dim=30\nheads=4\n"};
    CHECK_THROWS_AS(parse_run_config(invalid), Error);
}

TEST_CASE("archive save, load, save is byte-identical") {
    NGramLexicon lexicon{FeatureKind::word_pmi};
    lexicon.add({"a", "b"}, 3);
    lexicon.add({"b"}, 2);
    auto const archive = small_archive(lexicon);
    std::ostringstream first;
    write_archive(first, archive);
    CHECK(first.str().rfind(archive_magic, 0) == 0);
    std::istringstream in{first.str()};
    auto const loaded = read_archive(in);
    std::ostringstream second;
    write_archive(second, loaded);
    CHECK(first.str() == second.str());
    CHECK(loaded.params.config == archive.params.config);
    CHECK(loaded.params.words == archive.params.words);
    CHECK(loaded.lexicon_path == "lex.txt");
    CHECK((loaded.params.tensors.mlp_w1 - archive.params.tensors.mlp_w1).cwiseAbs().maxCoeff() < 1e-7);

    CHECK_NOTHROW(verify_lexicon(loaded, lexicon));
    auto other = lexicon;
    other.add({"c"}, 1);
    try {
        verify_lexicon(loaded, other);
        FAIL("expected checksum error");
    } catch (Error const& e) {
        CHECK(e.exit_code() == 4);
    }

    std::string truncated = first.str();
    truncated.resize(truncated.size() - 3);
    std::istringstream short_in{truncated};
    CHECK_THROWS_AS(read_archive(short_in), Error);
    std::istringstream trailing{first.str() + "x"};
    CHECK_THROWS_AS(read_archive(trailing), Error);
    std::istringstream wrong{"NENP9" + first.str().substr(5)};
    CHECK_THROWS_AS(read_archive(wrong), Error);
}

TEST_CASE("synthetic corpora") {
    auto const a = generate_synthetic(3, 50, Domain::a);
    auto const b = generate_synthetic(3, 50, Domain::a);
    REQUIRE(a.size() == 50);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].sentence.forms() == b[k].sentence.forms());
        CHECK(a[k].entities == b[k].entities);
    }
    CHECK(a[0].sentence.id() == "s0");

    for (auto domain : {Domain::a, Domain::b}) {
        auto const big = generate_synthetic(11, 1000, domain);
        double const rate = nested_sentence_rate(big);
        CHECK(rate >= 0.20);
        CHECK(rate <= 0.30);
        int deepest = 0;
        for (auto const& s : big) {
            deepest = std::max(deepest, max_entity_depth(s.entities));
            auto const tree = entity_set_to_tree(s.entities, static_cast<int>(s.sentence.size()));
            CHECK(is_well_formed(tree, static_cast<int>(s.sentence.size())));
        }
        CHECK(deepest >= 2);
        CHECK(deepest <= 3);
    }

    std::set<std::string> vocab_a, vocab_b;
    for (auto const& s : generate_synthetic(5, 500, Domain::a))
        for (auto const& f : s.sentence.forms()) vocab_a.insert(f);
    for (auto const& s : generate_synthetic(5, 500, Domain::b))
        for (auto const& f : s.sentence.forms()) vocab_b.insert(f);
    for (std::string cue : {"motors", "university", "bank"}) {
        CHECK(vocab_a.count(cue) == 1);
        CHECK(vocab_b.count(cue) == 0);
    }
    CHECK(vocab_a.size() + vocab_b.size() < 2 * 60);
    CHECK_THROWS_AS(parse_domain("C"), Error);
}

TEST_CASE("nenp evaluate and exit codes") {
    auto const dir = scratch();
    auto const gold = dir / "gold.tsv";
    put(gold, "s0\tjohn smith\tNNP NNP\t0,2,PER\ns1\tin peru\tIN NNP\t1,2,LOC\n");
    auto const run = nenp_cli("evaluate --pred " + gold.string() + " --gold " + gold.string());
    CHECK(run.code == 0);
    CHECK(run.out == "1.0000\t1.0000\t1.0000\n");

    auto const shifted = dir / "shifted.tsv";
    put(shifted, "s0\tjohn smith\tNNP NNP\t0,2,PER\ns9\tin peru\tIN NNP\t1,2,LOC\n");
    CHECK(nenp_cli("evaluate --pred " + shifted.string() + " --gold " + gold.string()).code == 2);
    CHECK(nenp_cli("evaluate --pred " + (dir / "missing.tsv").string() + " --gold " + gold.string()).code == 3);
    CHECK(nenp_cli("evaluate --gold " + gold.string()).code == 1);
    CHECK(nenp_cli("frobnicate").code == 1);
    CHECK(nenp_cli("--help").code == 0);
}

TEST_CASE("nenp build-lexicon, train, predict") {
    auto const dir = scratch();
    auto const corpus = dir / "toy.tsv";
    put(corpus, "t0\ta b a b\tX X X X\t\n");
    auto const lex = dir / "toy.lex";
    auto const built = nenp_cli("build-lexicon --corpus " + corpus.string() + " --kind word-freq --t-freq 2 --out " + lex.string());
    CHECK(built.code == 0);
    CHECK(slurp(lex) == "#nelex v1 word-freq\na b\tword-freq\t2\t0\n");

    auto const train_path = dir / "train.tsv";
    auto const test_path = dir / "test.tsv";
    CHECK(nenp_cli("gen-synthetic --seed 1 --count 20 --domain A --out " + train_path.string()).code == 0);
    CHECK(nenp_cli("gen-synthetic --seed 2 --count 5 --domain A --out " + test_path.string()).code == 0);
    CHECK(nenp_cli("gen-synthetic --seed 2 --count 5 --domain Q --out " + test_path.string()).code == 1);

    auto const word_lex = dir / "word.lex";
    REQUIRE(nenp_cli("build-lexicon --corpus " + train_path.string() + " --kind word-pmi --t-pmi 3 --out " + word_lex.string()).code == 0);
    auto const config = dir / "run.cfg";
    put(config, "dim=8\nlayers=1\nheads=2\nffn_dim=8\nhidden=8\nepochs=1\n");
    auto const model = dir / "model.bin";
    auto const trained = nenp_cli("train --train " + train_path.string() + " --dev " + test_path.string() +
                                  " --lexicon " + word_lex.string() + " --config " + config.string() +
                                  " --out " + model.string());
    CHECK(trained.code == 0);
    CHECK(trained.out.rfind("1\t", 0) == 0);
    CHECK(nenp_cli("train --train " + train_path.string() + " --dev " + test_path.string() +
                   " --config " + config.string() + " --out " + model.string()).code == 1);

    auto const pred = dir / "pred.tsv";
    CHECK(nenp_cli("predict --model " + model.string() + " --input " + test_path.string() + " --out " +
                   pred.string() + " --with-tree").code == 0);
    auto const lines = slurp(pred);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 5);
    CHECK(std::count(lines.begin(), lines.end(), '\t') == 5 * 4);
    CHECK(lines.find("\t(") != std::string::npos);
    CHECK(nenp_cli("evaluate --pred " + pred.string() + " --gold " + test_path.string()).code == 0);

    CHECK(nenp_cli("predict --model " + model.string() + " --input " + test_path.string() + " --out " +
                   pred.string() + " --lexicon " + lex.string()).code == 4);
    fs::remove_all(dir);
}
