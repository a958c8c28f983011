#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "nenp/archive.hpp"
#include "nenp/dataset.hpp"
#include "nenp/synthetic.hpp"
#include "nenp/train.hpp"

namespace {

using namespace nenp;

struct LexiconArgs {
    std::string corpus, kind = "word-pmi", out;
    std::optional<double> t_pmi;
    std::optional<std::int64_t> t_freq;
};

void build_lexicon_cmd(LexiconArgs const& args) {
    auto const kind = parse_feature_kind(args.kind);
    auto thresholds = Thresholds::defaults_for(kind);
    if (args.t_pmi) thresholds.pmi = *args.t_pmi;
    if (args.t_freq) thresholds.freq = *args.t_freq;
    auto const sentences = sentences_of(read_records(args.corpus));
    auto const lexicon = build_lexicon(sentences, kind, thresholds);
    lexicon.save(args.out);
    std::cout << lexicon.size() << '\n';
}

struct TrainArgs {
    std::string train, dev, lexicon, config, out;
    bool no_lexicon = false;
};

void train_cmd(TrainArgs const& args) {
    if (args.no_lexicon == !args.lexicon.empty())
        throw usage_error("train needs exactly one of --lexicon or --no-lexicon");
    RunConfig run;
    if (!args.config.empty()) run = load_run_config(args.config);

    auto const train_records = read_records(args.train);
    auto const dev_records = read_records(args.dev);
    std::vector<std::vector<DatasetRecord> const*> lists{&train_records, &dev_records};
    auto const labels = collect_labels(lists);
    auto const train_data = resolve_records(train_records, labels);
    auto const dev_data = resolve_records(dev_records, labels);

    NGramLexicon const lexicon = args.no_lexicon ? NGramLexicon{} : NGramLexicon::load(args.lexicon);
    auto initial = init_for_corpus(train_data, labels, run.model, lexicon.size(), run.train.seed);
    auto result = train(train_data, dev_data, lexicon, std::move(initial), run.train, &std::cout);
    save_archive(args.out, {std::move(result.best), args.lexicon, lexicon.checksum()});
}

struct PredictArgs {
    std::string model, input, out, lexicon;
    bool with_tree = false;
};

void predict_cmd(PredictArgs const& args) {
    auto const archive = load_archive(args.model);
    auto const lexicon_path = args.lexicon.empty() ? archive.lexicon_path : args.lexicon;
    NGramLexicon const lexicon = lexicon_path.empty() ? NGramLexicon{} : NGramLexicon::load(lexicon_path);
    verify_lexicon(archive, lexicon);

    auto const& params = archive.params;
    auto const sentences = sentences_of(read_records(args.input));
    std::vector<AnnotatedSentence> predictions;
    std::vector<std::string> trees;
    for (auto const& sentence : sentences) {
        auto decoded = predict(sentence, params, lexicon);
        if (args.with_tree)
            trees.push_back(bracketed(entity_set_to_tree(decoded.entities, static_cast<int>(sentence.size())),
                                      params.labels));
        predictions.push_back({sentence, std::move(decoded.entities)});
    }
    write_dataset(args.out, predictions, params.labels, trees);
}

void evaluate_cmd(std::string const& pred_path, std::string const& gold_path) {
    auto const pred_records = read_records(pred_path);
    auto const gold_records = read_records(gold_path);
    std::vector<std::vector<DatasetRecord> const*> lists{&pred_records, &gold_records};
    auto const labels = collect_labels(lists);
    auto const pred = resolve_records(pred_records, labels);
    auto const gold = resolve_records(gold_records, labels);
    std::cout << evaluate(std::span<AnnotatedSentence const>{pred}, std::span<AnnotatedSentence const>{gold}).report()
              << '\n';
}

void gen_synthetic_cmd(std::uint64_t seed, int count, std::string const& domain, std::string const& out) {
    auto const data = generate_synthetic(seed, count, parse_domain(domain));
    write_dataset(out, data, synthetic_labels());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nested named entity recognition by span scoring and CKY decoding"};
    app.require_subcommand(1);

    LexiconArgs lex;
    auto* lex_cmd = app.add_subcommand("build-lexicon", "Extract an n-gram lexicon from a corpus");
    lex_cmd->add_option("--corpus", lex.corpus, "Dataset file (entity field ignored)")->required();
    lex_cmd->add_option("--kind", lex.kind, "word-pmi, word-freq, pos-pmi or pos-freq");
    lex_cmd->add_option("--t-pmi", lex.t_pmi, "PMI threshold");
    lex_cmd->add_option("--t-freq", lex.t_freq, "Pair frequency threshold");
    lex_cmd->add_option("--out", lex.out)->required();

    TrainArgs tr;
    auto* train_sub = app.add_subcommand("train", "Train a model and write the dev-best archive");
    train_sub->add_option("--train", tr.train)->required();
    train_sub->add_option("--dev", tr.dev)->required();
    train_sub->add_option("--lexicon", tr.lexicon);
    train_sub->add_flag("--no-lexicon", tr.no_lexicon, "Train without n-gram features");
    train_sub->add_option("--config", tr.config, "key=value hyperparameter file");
    train_sub->add_option("--out", tr.out)->required();

    PredictArgs pr;
    auto* predict_sub = app.add_subcommand("predict", "Decode entities for every sentence");
    predict_sub->add_option("--model", pr.model)->required();
    predict_sub->add_option("--input", pr.input)->required();
    predict_sub->add_option("--out", pr.out)->required();
    predict_sub->add_option("--lexicon", pr.lexicon, "Overrides the lexicon path stored in the model");
    predict_sub->add_flag("--with-tree", pr.with_tree, "Append the bracketed tree with O spans");

    std::string pred_path, gold_path;
    auto* eval_sub = app.add_subcommand("evaluate", "Exact-match precision, recall and F1");
    eval_sub->add_option("--pred", pred_path)->required();
    eval_sub->add_option("--gold", gold_path)->required();

    std::uint64_t seed = 1;
    int count = 200;
    std::string domain = "A", synth_out;
    auto* gen_sub = app.add_subcommand("gen-synthetic", "Write a synthetic nested-NER corpus");
    gen_sub->add_option("--seed", seed);
    gen_sub->add_option("--count", count);
    gen_sub->add_option("--domain", domain, "A or B");
    gen_sub->add_option("--out", synth_out)->required();

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*lex_cmd) build_lexicon_cmd(lex);
        else if (*train_sub) train_cmd(tr);
        else if (*predict_sub) predict_cmd(pr);
        else if (*eval_sub) evaluate_cmd(pred_path, gold_path);
        else if (*gen_sub) gen_synthetic_cmd(seed, count, domain, synth_out);
    } catch (Error const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
