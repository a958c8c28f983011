#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "nenp/core.hpp"
#include "nenp/corpus_stats.hpp"
#include "nenp/nn.hpp"
#include "nenp/span_chart.hpp"

namespace nenp {

using Matrix = nn::Matrix<double>;
using Vector = nn::Vector<double>;

struct ModelConfig {
    int dim = 64;
    int layers = 2;
    int heads = 4;
    int ffn_dim = 128;
    int hidden = 128;
    /// Number of n-gram length buckets; lengths >= categories share the last bucket.
    int categories = 5;
    int max_len = 128;
    double layer_norm_eps = 1e-5;
    double init_range = 0.1;

    void validate() const;
    int feature_dim() const noexcept { return dim * (categories + 1); }
    friend bool operator==(ModelConfig const&, ModelConfig const&) = default;
};

struct DropoutRates {
    double attention = 0.2;
    double pos = 0.4;
    double residual = 0.5;
    /// Probability of replacing a word with "<unk>" during training.
    double word = 0.0;
};

/// Dropout is active only when a context is supplied to the forward pass.
struct DropoutContext {
    DropoutRates rates;
    std::mt19937_64* rng = nullptr;
};

/// Closed token inventory with row 0 reserved for unknown tokens.
class Vocabulary {
public:
    static constexpr int unknown = 0;
    static constexpr char const* unknown_token = "<unk>";

    Vocabulary() : Vocabulary{std::vector<std::string>{}} {}
    /// Sorted and de-duplicated; "<unk>" is prepended.
    explicit Vocabulary(std::vector<std::string> tokens);

    int lookup(std::string const& token) const;
    std::size_t size() const noexcept { return tokens_.size(); }
    std::vector<std::string> const& tokens() const noexcept { return tokens_; }

    friend bool operator==(Vocabulary const& a, Vocabulary const& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct EncoderLayerParams {
    Matrix query_w, key_w, value_w, out_w;
    Vector query_b, key_b, value_b, out_b;
    Vector norm1_gain, norm1_bias;
    Matrix ffn_in_w, ffn_out_w;
    Vector ffn_in_b, ffn_out_b;
    Vector norm2_gain, norm2_bias;
};

/// Mutable view of one named tensor, used to walk parameters, gradients and optimizer moments
/// in lockstep.
struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    bool is_vector;

    Eigen::Map<Matrix> map() const { return {data, rows, cols}; }
    Eigen::Index size() const { return rows * cols; }
};

/// Every trainable tensor. Embedding tables hold one entry per column.
struct ParamTensors {
    Matrix word_embedding;     // dim x |words|
    Matrix pos_embedding;      // dim x |tags|
    Matrix position_embedding; // dim x (max_len + 1)
    Vector boundary;           // h_0
    std::vector<EncoderLayerParams> layers;
    Matrix mlp_w1; // hidden x feature_dim
    Vector mlp_b1;
    Vector mlp_norm_gain, mlp_norm_bias;
    Matrix mlp_w2; // entity labels x hidden
    Vector mlp_b2;
    Matrix ngram_embedding; // dim x |lexicon|
    Vector category_weight; // one scalar per length bucket

    std::vector<TensorRef> refs();
    std::vector<TensorRef> refs() const { return const_cast<ParamTensors*>(this)->refs(); }

    ParamTensors zeros_like() const;
    bool same_shape(ParamTensors const& other) const;
    bool all_finite() const;
    double squared_norm() const;
    void scale(double factor);
    void add(ParamTensors const& other, double factor = 1.0);
};

struct ModelParams {
    ModelConfig config;
    Vocabulary words;
    Vocabulary tags;
    LabelSet labels;
    ParamTensors tensors;
};

/// Uniform(-init_range, init_range) everywhere except layer-norm gains (1) and category weights (1).
ModelParams init_params(ModelConfig const& config, Vocabulary words, Vocabulary tags,
                        LabelSet labels, std::size_t lexicon_size, std::uint64_t seed);

/// Appends embedding columns for lexicon ids added after training. Each new column starts at the
/// mean of the trained columns whose n-grams fall in the same length bucket (zero if none).
void extend_ngram_embeddings(ModelParams& params, NGramLexicon const& lexicon);

struct NGramMatch {
    int start = 0;
    int end = 0;
    int entry = 0; // lexicon embedding id

    friend bool operator==(NGramMatch const&, NGramMatch const&) = default;
};

/// Lexicon hits inside one span, bucketed by n-gram length (index u - 1 holds length u).
struct SpanMatchSet {
    std::vector<std::vector<NGramMatch>> categories;

    std::size_t total() const;
    bool empty() const { return total() == 0; }
};

/// Every lexicon n-gram inside [start, end), ordered by start then length.
SpanMatchSet collect_ngram_matches(Sentence const& sentence, int start, int end,
                                   NGramLexicon const& lexicon, int categories);

/// z_t = word + POS + position embedding, one column per token.
Matrix embed(Sentence const& sentence, ModelParams const& params,
             DropoutContext const* dropout = nullptr);

/// Encoder stack; returns dim x (n + 1) hidden states with h_0 in column 0.
Matrix encode(Matrix const& inputs, ModelParams const& params,
              DropoutContext const* dropout = nullptr);

Vector span_repr(Matrix const& hidden, int start, int end);

/// Per-bucket softmax over r . e, weighted average of embeddings, scaled by the bucket weight,
/// concatenated over buckets (dim * categories).
Vector span_attention(Vector const& span, SpanMatchSet const& matches, ModelParams const& params);

/// Full forward pass. `lexicon` may be empty (no n-gram features).
SpanScoreChart score_spans(Sentence const& sentence, ModelParams const& params,
                           NGramLexicon const& lexicon, DropoutContext const* dropout = nullptr);

namespace detail {

struct EncoderLayerCache {
    Matrix input, query, key, value;
    std::vector<Matrix> attention;      // per head, rows are queries
    std::vector<Matrix> attention_mask; // empty without dropout
    Matrix context;
    Matrix attn_residual_mask;
    nn::LayerNormCache<double> norm1;
    Matrix norm1_out;
    Matrix ffn_pre;
    Matrix ffn_residual_mask;
    nn::LayerNormCache<double> norm2;
};

Matrix encoder_layer_forward(EncoderLayerParams const& layer, ModelConfig const& config,
                             Matrix const& input, DropoutContext const* dropout,
                             EncoderLayerCache& cache);

/// Embedding sum; when dropout is active the POS mask is written to `pos_mask`. The word rows
/// actually used (after word dropout) go to `word_ids`.
Matrix embed_tokens(Sentence const& sentence, ModelParams const& params,
                    DropoutContext const* dropout, Matrix* pos_mask, std::vector<int>* word_ids);

} // namespace detail

/// Forward pass that keeps every intermediate so span-score gradients can be propagated back.
class ScoringPass {
public:
    ScoringPass(Sentence const& sentence, ModelParams const& params, NGramLexicon const& lexicon,
                DropoutContext const* dropout = nullptr);

    SpanScoreChart const& chart() const noexcept { return chart_; }

    /// `score_grads` maps (start, end, entity label) to d loss / d s. Adds into `grads`.
    struct ScoreGrad {
        int start;
        int end;
        LabelId label;
        double value;
    };
    void backward(std::vector<ScoreGrad> const& score_grads, ParamTensors& grads) const;

private:
    struct CategoryCache {
        std::vector<int> entries;
        Vector weights;
        Vector average; // before the bucket weight
    };

    int span_column(int start, int end) const { return span_index_[start * (n_ + 1) + end]; }
    Matrix backward_encoder_layer(EncoderLayerParams const& layer,
                                  detail::EncoderLayerCache const& cache, Matrix const& doutput,
                                  EncoderLayerParams& grads) const;

    ModelParams const& params_;
    DropoutContext const* dropout_;
    int n_;
    std::vector<int> word_ids_;
    std::vector<int> tag_ids_;
    Matrix pos_mask_;
    std::vector<detail::EncoderLayerCache> layers_;
    Matrix hidden_;
    std::vector<std::pair<int, int>> spans_;
    std::vector<int> span_index_;
    std::vector<std::vector<CategoryCache>> span_attention_;
    Matrix features_;
    Matrix mlp_pre_;
    nn::LayerNormCache<double> mlp_norm_;
    Matrix mlp_norm_out_;
    Matrix mlp_act_;
    SpanScoreChart chart_;
};

} // namespace nenp
