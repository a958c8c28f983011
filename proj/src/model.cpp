#include "nenp/model.hpp"

#include <algorithm>
#include <cmath>

namespace nenp {

void ModelConfig::validate() const {
    if (dim < 1 || layers < 0 || heads < 1 || ffn_dim < 1 || hidden < 1 || categories < 1 ||
        max_len < 1)
        throw validation_error("model config: sizes must be positive (layers >= 0)");
    if (dim % heads != 0) throw validation_error("model config: dim must be divisible by heads");
    if (!(layer_norm_eps > 0.0) || !(init_range > 0.0))
        throw validation_error("model config: layer_norm_eps and init_range must be positive");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    std::erase(tokens, std::string{unknown_token});
    tokens_.reserve(tokens.size() + 1);
    tokens_.push_back(unknown_token);
    for (auto& t : tokens) tokens_.push_back(std::move(t));
    for (std::size_t k = 0; k < tokens_.size(); ++k) index_.emplace(tokens_[k], static_cast<int>(k));
}

int Vocabulary::lookup(std::string const& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? unknown : it->second;
}

std::vector<TensorRef> ParamTensors::refs() {
    std::vector<TensorRef> out;
    auto add_matrix = [&](std::string name, Matrix& m) {
        out.push_back({std::move(name), m.data(), m.rows(), m.cols(), false});
    };
    auto add_vector = [&](std::string name, Vector& v) {
        out.push_back({std::move(name), v.data(), v.rows(), 1, true});
    };
    add_matrix("word_embedding", word_embedding);
    add_matrix("pos_embedding", pos_embedding);
    add_matrix("position_embedding", position_embedding);
    add_vector("boundary", boundary);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        auto& l = layers[k];
        std::string const p = "layer" + std::to_string(k) + ".";
        add_matrix(p + "query_w", l.query_w);
        add_vector(p + "query_b", l.query_b);
        add_matrix(p + "key_w", l.key_w);
        add_vector(p + "key_b", l.key_b);
        add_matrix(p + "value_w", l.value_w);
        add_vector(p + "value_b", l.value_b);
        add_matrix(p + "out_w", l.out_w);
        add_vector(p + "out_b", l.out_b);
        add_vector(p + "norm1_gain", l.norm1_gain);
        add_vector(p + "norm1_bias", l.norm1_bias);
        add_matrix(p + "ffn_in_w", l.ffn_in_w);
        add_vector(p + "ffn_in_b", l.ffn_in_b);
        add_matrix(p + "ffn_out_w", l.ffn_out_w);
        add_vector(p + "ffn_out_b", l.ffn_out_b);
        add_vector(p + "norm2_gain", l.norm2_gain);
        add_vector(p + "norm2_bias", l.norm2_bias);
    }
    add_matrix("mlp.w1", mlp_w1);
    add_vector("mlp.b1", mlp_b1);
    add_vector("mlp.norm_gain", mlp_norm_gain);
    add_vector("mlp.norm_bias", mlp_norm_bias);
    add_matrix("mlp.w2", mlp_w2);
    add_vector("mlp.b2", mlp_b2);
    add_matrix("ngram_embedding", ngram_embedding);
    add_vector("category_weight", category_weight);
    return out;
}

ParamTensors ParamTensors::zeros_like() const {
    ParamTensors out = *this;
    for (auto& t : out.refs()) t.map().setZero();
    return out;
}

bool ParamTensors::same_shape(ParamTensors const& other) const {
    auto const a = refs();
    auto const b = other.refs();
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k].name != b[k].name || a[k].rows != b[k].rows || a[k].cols != b[k].cols) return false;
    return true;
}

bool ParamTensors::all_finite() const {
    for (auto const& t : refs())
        if (!t.map().allFinite()) return false;
    return true;
}

double ParamTensors::squared_norm() const {
    double total = 0.0;
    for (auto const& t : refs()) total += t.map().squaredNorm();
    return total;
}

void ParamTensors::scale(double factor) {
    for (auto& t : refs()) t.map() *= factor;
}

void ParamTensors::add(ParamTensors const& other, double factor) {
    auto mine = refs();
    auto const theirs = other.refs();
    for (std::size_t k = 0; k < mine.size(); ++k) mine[k].map() += factor * theirs[k].map();
}

ModelParams init_params(ModelConfig const& config, Vocabulary words, Vocabulary tags,
                        LabelSet labels, std::size_t lexicon_size, std::uint64_t seed) {
    config.validate();
    if (labels.entity_count() == 0) throw validation_error("model needs at least one entity label");
    int const d = config.dim;
    auto const entity_labels = static_cast<Eigen::Index>(labels.entity_count());

    ParamTensors t;
    t.word_embedding.resize(d, static_cast<Eigen::Index>(words.size()));
    t.pos_embedding.resize(d, static_cast<Eigen::Index>(tags.size()));
    t.position_embedding.resize(d, config.max_len + 1);
    t.boundary.resize(d);
    t.layers.resize(static_cast<std::size_t>(config.layers));
    for (auto& l : t.layers) {
        for (Matrix* m : {&l.query_w, &l.key_w, &l.value_w, &l.out_w}) m->resize(d, d);
        for (Vector* v : {&l.query_b, &l.key_b, &l.value_b, &l.out_b, &l.norm1_gain, &l.norm1_bias,
                          &l.ffn_out_b, &l.norm2_gain, &l.norm2_bias})
            v->resize(d);
        l.ffn_in_w.resize(config.ffn_dim, d);
        l.ffn_in_b.resize(config.ffn_dim);
        l.ffn_out_w.resize(d, config.ffn_dim);
    }
    t.mlp_w1.resize(config.hidden, config.feature_dim());
    t.mlp_b1.resize(config.hidden);
    t.mlp_norm_gain.resize(config.hidden);
    t.mlp_norm_bias.resize(config.hidden);
    t.mlp_w2.resize(entity_labels, config.hidden);
    t.mlp_b2.resize(entity_labels);
    t.ngram_embedding.resize(d, static_cast<Eigen::Index>(lexicon_size));
    t.category_weight.resize(config.categories);

    std::mt19937_64 rng{seed};
    std::uniform_real_distribution<double> uniform{-config.init_range, config.init_range};
    for (auto& ref : t.refs()) {
        auto m = ref.map();
        bool const ones = ref.name.ends_with("_gain") || ref.name == "category_weight";
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = ones ? 1.0 : uniform(rng);
    }
    return {config, std::move(words), std::move(tags), std::move(labels), std::move(t)};
}

namespace {

int bucket_of(int length, int categories) { return std::min(length, categories) - 1; }

} // namespace

void extend_ngram_embeddings(ModelParams& params, NGramLexicon const& lexicon) {
    auto& table = params.tensors.ngram_embedding;
    auto const old_cols = table.cols();
    auto const new_cols = static_cast<Eigen::Index>(lexicon.size());
    if (new_cols < old_cols)
        throw validation_error("lexicon is smaller than the model's n-gram table");
    if (new_cols == old_cols) return;

    int const categories = params.config.categories;
    auto const rows = lexicon.by_id();
    Matrix centroid = Matrix::Zero(table.rows(), categories);
    std::vector<int> members(static_cast<std::size_t>(categories), 0);
    for (Eigen::Index id = 0; id < old_cols; ++id) {
        int const u = bucket_of(static_cast<int>(rows[static_cast<std::size_t>(id)].first.size()),
                                categories);
        centroid.col(u) += table.col(id);
        ++members[static_cast<std::size_t>(u)];
    }
    for (int u = 0; u < categories; ++u)
        if (members[static_cast<std::size_t>(u)] > 0) centroid.col(u) /= members[static_cast<std::size_t>(u)];

    Matrix grown(table.rows(), new_cols);
    grown.leftCols(old_cols) = table;
    for (Eigen::Index id = old_cols; id < new_cols; ++id)
        grown.col(id) = centroid.col(bucket_of(
            static_cast<int>(rows[static_cast<std::size_t>(id)].first.size()), categories));
    table = std::move(grown);
}

std::size_t SpanMatchSet::total() const {
    std::size_t total = 0;
    for (auto const& c : categories) total += c.size();
    return total;
}

namespace {

// All lexicon hits in the sentence, ordered by start then length.
std::vector<NGramMatch> lexicon_hits(Sentence const& sentence, NGramLexicon const& lexicon) {
    std::vector<NGramMatch> hits;
    if (lexicon.empty()) return hits;
    int const n = static_cast<int>(sentence.size());
    for (int s = 0; s < n; ++s) {
        NGram gram;
        for (int len = 1; len <= max_ngram_length && s + len <= n; ++len) {
            gram.push_back(sentence[static_cast<std::size_t>(s + len - 1)].form);
            if (auto const* entry = lexicon.find(gram)) hits.push_back({s, s + len, entry->id});
        }
    }
    return hits;
}

SpanMatchSet matches_within(std::vector<NGramMatch> const& hits, int start, int end,
                            int categories) {
    SpanMatchSet set;
    set.categories.resize(static_cast<std::size_t>(categories));
    for (auto const& h : hits)
        if (h.start >= start && h.end <= end)
            set.categories[static_cast<std::size_t>(bucket_of(h.end - h.start, categories))].push_back(h);
    return set;
}

} // namespace

SpanMatchSet collect_ngram_matches(Sentence const& sentence, int start, int end,
                                   NGramLexicon const& lexicon, int categories) {
    if (start < 0 || start >= end || end > static_cast<int>(sentence.size()))
        throw validation_error("span out of range for n-gram matching");
    return matches_within(lexicon_hits(sentence, lexicon), start, end, categories);
}

Matrix detail::embed_tokens(Sentence const& sentence, ModelParams const& params,
                           DropoutContext const* dropout, Matrix* pos_mask, std::vector<int>* word_ids) {
    auto const& t = params.tensors;
    int const n = static_cast<int>(sentence.size());
    if (n > params.config.max_len)
        throw validation_error("sentence '" + sentence.id() + "' is longer than max_len");
    Matrix pos(params.config.dim, n);
    for (int k = 0; k < n; ++k)
        pos.col(k) = t.pos_embedding.col(params.tags.lookup(sentence[static_cast<std::size_t>(k)].pos));
    if (dropout && dropout->rng) {
        Matrix mask = nn::dropout_mask<double>(pos.rows(), n, dropout->rates.pos, *dropout->rng);
        pos.array() *= mask.array();
        if (pos_mask) *pos_mask = std::move(mask);
    }

    std::vector<int> ids;
    for (auto const& tok : sentence.tokens()) ids.push_back(params.words.lookup(tok.form));
    if (dropout && dropout->rng && dropout->rates.word > 0.0) {
        std::bernoulli_distribution unknown{dropout->rates.word};
        for (auto& id : ids)
            if (unknown(*dropout->rng)) id = Vocabulary::unknown;
    }

    Matrix z(params.config.dim, n);
    for (int k = 0; k < n; ++k)
        z.col(k) = t.word_embedding.col(ids[static_cast<std::size_t>(k)]) + pos.col(k) +
                   t.position_embedding.col(k + 1);
    if (word_ids) *word_ids = std::move(ids);
    return z;
}

Matrix embed(Sentence const& sentence, ModelParams const& params, DropoutContext const* dropout) {
    return detail::embed_tokens(sentence, params, dropout, nullptr, nullptr);
}

Matrix detail::encoder_layer_forward(EncoderLayerParams const& layer, ModelConfig const& cfg,
                                     Matrix const& input, DropoutContext const* dropout,
                                     EncoderLayerCache& cache) {
    bool const drop = dropout && dropout->rng;
    auto const d = input.rows();
    auto const n = input.cols();
    int const dk = cfg.dim / cfg.heads;
    double const scale = 1.0 / std::sqrt(static_cast<double>(dk));

    cache.input = input;
    cache.query = (layer.query_w * input).colwise() + layer.query_b;
    cache.key = (layer.key_w * input).colwise() + layer.key_b;
    cache.value = (layer.value_w * input).colwise() + layer.value_b;
    cache.context.resize(d, n);
    cache.attention.resize(static_cast<std::size_t>(cfg.heads));
    cache.attention_mask.assign(drop ? static_cast<std::size_t>(cfg.heads) : 0, Matrix{});
    for (int h = 0; h < cfg.heads; ++h) {
        auto const q = cache.query.middleRows(h * dk, dk);
        auto const k = cache.key.middleRows(h * dk, dk);
        auto const v = cache.value.middleRows(h * dk, dk);
        auto& attn = cache.attention[static_cast<std::size_t>(h)];
        attn = nn::softmax_rows(Matrix(scale * (q.transpose() * k)));
        if (drop) {
            auto& mask = cache.attention_mask[static_cast<std::size_t>(h)];
            mask = nn::dropout_mask<double>(n, n, dropout->rates.attention, *dropout->rng);
            cache.context.middleRows(h * dk, dk) = v * attn.cwiseProduct(mask).transpose();
        } else {
            cache.context.middleRows(h * dk, dk) = v * attn.transpose();
        }
    }
    Matrix attended = (layer.out_w * cache.context).colwise() + layer.out_b;
    if (drop) {
        cache.attn_residual_mask = nn::dropout_mask<double>(d, n, dropout->rates.residual, *dropout->rng);
        attended.array() *= cache.attn_residual_mask.array();
    }
    cache.norm1_out = nn::layer_norm(Matrix(input + attended), layer.norm1_gain, layer.norm1_bias,
                                     cfg.layer_norm_eps, cache.norm1);

    cache.ffn_pre = (layer.ffn_in_w * cache.norm1_out).colwise() + layer.ffn_in_b;
    Matrix ffn = (layer.ffn_out_w * nn::relu(cache.ffn_pre)).colwise() + layer.ffn_out_b;
    if (drop) {
        cache.ffn_residual_mask = nn::dropout_mask<double>(d, n, dropout->rates.residual, *dropout->rng);
        ffn.array() *= cache.ffn_residual_mask.array();
    }
    return nn::layer_norm(Matrix(cache.norm1_out + ffn), layer.norm2_gain, layer.norm2_bias,
                          cfg.layer_norm_eps, cache.norm2);
}

Vector span_repr(Matrix const& hidden, int start, int end) {
    if (start < 0 || start >= end || end >= hidden.cols())
        throw validation_error("span out of range for hidden states");
    return hidden.col(end) - hidden.col(start);
}

Vector span_attention(Vector const& span, SpanMatchSet const& matches, ModelParams const& params) {
    auto const& t = params.tensors;
    int const d = params.config.dim;
    int const categories = params.config.categories;
    Vector out = Vector::Zero(static_cast<Eigen::Index>(d) * categories);
    for (int u = 0; u < categories && u < static_cast<int>(matches.categories.size()); ++u) {
        auto const& bucket = matches.categories[static_cast<std::size_t>(u)];
        if (bucket.empty()) continue;
        Matrix embeddings(d, static_cast<Eigen::Index>(bucket.size()));
        for (std::size_t v = 0; v < bucket.size(); ++v)
            embeddings.col(static_cast<Eigen::Index>(v)) = t.ngram_embedding.col(bucket[v].entry);
        Vector const weights = nn::softmax<double>(embeddings.transpose() * span);
        out.segment(static_cast<Eigen::Index>(u) * d, d) = t.category_weight(u) * (embeddings * weights);
    }
    return out;
}

ScoringPass::ScoringPass(Sentence const& sentence, ModelParams const& params,
                         NGramLexicon const& lexicon, DropoutContext const* dropout)
    : params_{params}, dropout_{dropout && dropout->rng ? dropout : nullptr},
      n_{static_cast<int>(sentence.size())},
      chart_{static_cast<int>(sentence.size()), static_cast<int>(params.labels.size())} {
    auto const& cfg = params.config;
    auto const& t = params.tensors;
    if (n_ > cfg.max_len)
        throw validation_error("sentence '" + sentence.id() + "' is longer than max_len");
    if (t.ngram_embedding.cols() != static_cast<Eigen::Index>(lexicon.size()))
        throw validation_error("lexicon size does not match the model's n-gram table");
    int const d = cfg.dim;

    for (auto const& tok : sentence.tokens()) tag_ids_.push_back(params.tags.lookup(tok.pos));
    Matrix x = detail::embed_tokens(sentence, params, dropout_, &pos_mask_, &word_ids_);
    layers_.resize(t.layers.size());
    for (std::size_t l = 0; l < t.layers.size(); ++l)
        x = detail::encoder_layer_forward(t.layers[l], cfg, x, dropout_, layers_[l]);
    hidden_.resize(d, n_ + 1);
    hidden_.col(0) = t.boundary;
    hidden_.rightCols(n_) = x;

    span_index_.assign(static_cast<std::size_t>((n_ + 1) * (n_ + 1)), -1);
    for (int len = 1; len <= n_; ++len)
        for (int i = 0; i + len <= n_; ++i) {
            span_index_[static_cast<std::size_t>(i * (n_ + 1) + i + len)] = static_cast<int>(spans_.size());
            spans_.emplace_back(i, i + len);
        }

    auto const hits = lexicon_hits(sentence, lexicon);
    auto const span_count = static_cast<Eigen::Index>(spans_.size());
    features_ = Matrix::Zero(cfg.feature_dim(), span_count);
    span_attention_.resize(spans_.size());
    for (Eigen::Index c = 0; c < span_count; ++c) {
        auto const [i, j] = spans_[static_cast<std::size_t>(c)];
        Vector const r = hidden_.col(j) - hidden_.col(i);
        features_.col(c).head(d) = r;
        auto& caches = span_attention_[static_cast<std::size_t>(c)];
        caches.resize(static_cast<std::size_t>(cfg.categories));
        if (hits.empty()) continue;
        auto const matches = matches_within(hits, i, j, cfg.categories);
        for (int u = 0; u < cfg.categories; ++u) {
            auto const& bucket = matches.categories[static_cast<std::size_t>(u)];
            if (bucket.empty()) continue;
            auto& cache = caches[static_cast<std::size_t>(u)];
            Matrix embeddings(d, static_cast<Eigen::Index>(bucket.size()));
            for (std::size_t v = 0; v < bucket.size(); ++v) {
                cache.entries.push_back(bucket[v].entry);
                embeddings.col(static_cast<Eigen::Index>(v)) = t.ngram_embedding.col(bucket[v].entry);
            }
            cache.weights = nn::softmax<double>(embeddings.transpose() * r);
            cache.average = embeddings * cache.weights;
            features_.col(c).segment(static_cast<Eigen::Index>(u + 1) * d, d) =
                t.category_weight(u) * cache.average;
        }
    }

    mlp_pre_ = (t.mlp_w1 * features_).colwise() + t.mlp_b1;
    mlp_norm_out_ = nn::layer_norm(mlp_pre_, t.mlp_norm_gain, t.mlp_norm_bias, cfg.layer_norm_eps, mlp_norm_);
    mlp_act_ = nn::relu(mlp_norm_out_);
    Matrix const scores = (t.mlp_w2 * mlp_act_).colwise() + t.mlp_b2;
    if (!scores.allFinite()) throw validation_error("non-finite span scores");
    for (Eigen::Index c = 0; c < span_count; ++c) {
        auto const [i, j] = spans_[static_cast<std::size_t>(c)];
        for (Eigen::Index l = 0; l < scores.rows(); ++l)
            chart_.set(i, j, static_cast<LabelId>(l + 1), scores(l, c));
    }
}

Matrix ScoringPass::backward_encoder_layer(EncoderLayerParams const& layer,
                                           detail::EncoderLayerCache const& cache,
                                           Matrix const& doutput, EncoderLayerParams& g) const {
    auto const& cfg = params_.config;
    int const dk = cfg.dim / cfg.heads;
    double const scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Matrix const dsum2 = nn::layer_norm_backward(doutput, layer.norm2_gain, cache.norm2,
                                                 g.norm2_gain, g.norm2_bias);
    Matrix dffn = dsum2;
    if (dropout_) dffn.array() *= cache.ffn_residual_mask.array();
    Matrix const ffn_act = nn::relu(cache.ffn_pre);
    g.ffn_out_w += dffn * ffn_act.transpose();
    g.ffn_out_b += dffn.rowwise().sum();
    Matrix const dffn_pre = nn::relu_backward(Matrix(layer.ffn_out_w.transpose() * dffn), cache.ffn_pre);
    g.ffn_in_w += dffn_pre * cache.norm1_out.transpose();
    g.ffn_in_b += dffn_pre.rowwise().sum();
    Matrix const dnorm1_out = dsum2 + layer.ffn_in_w.transpose() * dffn_pre;

    Matrix const dsum1 = nn::layer_norm_backward(dnorm1_out, layer.norm1_gain, cache.norm1,
                                                 g.norm1_gain, g.norm1_bias);
    Matrix dattended = dsum1;
    if (dropout_) dattended.array() *= cache.attn_residual_mask.array();
    g.out_w += dattended * cache.context.transpose();
    g.out_b += dattended.rowwise().sum();
    Matrix const dcontext = layer.out_w.transpose() * dattended;

    Matrix dquery(cfg.dim, n_), dkey(cfg.dim, n_), dvalue(cfg.dim, n_);
    for (int h = 0; h < cfg.heads; ++h) {
        auto const& attn = cache.attention[static_cast<std::size_t>(h)];
        Matrix const dctx = dcontext.middleRows(h * dk, dk);
        Matrix const dropped =
            dropout_ ? Matrix(attn.cwiseProduct(cache.attention_mask[static_cast<std::size_t>(h)])) : attn;
        dvalue.middleRows(h * dk, dk) = dctx * dropped;
        Matrix dattn = dctx.transpose() * cache.value.middleRows(h * dk, dk);
        if (dropout_) dattn.array() *= cache.attention_mask[static_cast<std::size_t>(h)].array();
        Matrix const dlogits = nn::softmax_rows_backward(attn, dattn);
        dquery.middleRows(h * dk, dk) = scale * (cache.key.middleRows(h * dk, dk) * dlogits.transpose());
        dkey.middleRows(h * dk, dk) = scale * (cache.query.middleRows(h * dk, dk) * dlogits);
    }

    Matrix dinput = dsum1;
    g.query_w += dquery * cache.input.transpose();
    g.query_b += dquery.rowwise().sum();
    dinput += layer.query_w.transpose() * dquery;
    g.key_w += dkey * cache.input.transpose();
    g.key_b += dkey.rowwise().sum();
    dinput += layer.key_w.transpose() * dkey;
    g.value_w += dvalue * cache.input.transpose();
    g.value_b += dvalue.rowwise().sum();
    dinput += layer.value_w.transpose() * dvalue;
    return dinput;
}

void ScoringPass::backward(std::vector<ScoreGrad> const& score_grads, ParamTensors& g) const {
    auto const& cfg = params_.config;
    auto const& t = params_.tensors;
    int const d = cfg.dim;
    auto const entity_labels = t.mlp_w2.rows();

    // Only spans that carry a score gradient need the scorer backward.
    std::vector<int> active;
    std::vector<int> slot(spans_.size(), -1);
    for (auto const& sg : score_grads) {
        if (sg.label == null_label || sg.value == 0.0) continue;
        if (!chart_.in_range(sg.start, sg.end) || sg.label >= chart_.label_count())
            throw validation_error("score gradient outside the chart");
        int const c = span_column(sg.start, sg.end);
        if (slot[static_cast<std::size_t>(c)] < 0) {
            slot[static_cast<std::size_t>(c)] = static_cast<int>(active.size());
            active.push_back(c);
        }
    }
    if (active.empty()) return;

    auto const count = static_cast<Eigen::Index>(active.size());
    Matrix dscores = Matrix::Zero(entity_labels, count);
    for (auto const& sg : score_grads) {
        if (sg.label == null_label || sg.value == 0.0) continue;
        dscores(sg.label - 1, slot[static_cast<std::size_t>(span_column(sg.start, sg.end))]) += sg.value;
    }

    Matrix act(cfg.hidden, count), norm_out(cfg.hidden, count), features(cfg.feature_dim(), count);
    nn::LayerNormCache<double> norm;
    norm.normalized.resize(cfg.hidden, count);
    norm.inv_std.resize(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        int const c = active[static_cast<std::size_t>(k)];
        act.col(k) = mlp_act_.col(c);
        norm_out.col(k) = mlp_norm_out_.col(c);
        features.col(k) = features_.col(c);
        norm.normalized.col(k) = mlp_norm_.normalized.col(c);
        norm.inv_std(k) = mlp_norm_.inv_std(c);
    }

    g.mlp_w2 += dscores * act.transpose();
    g.mlp_b2 += dscores.rowwise().sum();
    Matrix const dnorm_out = nn::relu_backward(Matrix(t.mlp_w2.transpose() * dscores), norm_out);
    Matrix const dpre = nn::layer_norm_backward(dnorm_out, t.mlp_norm_gain, norm, g.mlp_norm_gain,
                                                g.mlp_norm_bias);
    g.mlp_w1 += dpre * features.transpose();
    g.mlp_b1 += dpre.rowwise().sum();
    Matrix const dfeatures = t.mlp_w1.transpose() * dpre;

    Matrix dhidden = Matrix::Zero(d, n_ + 1);
    for (Eigen::Index k = 0; k < count; ++k) {
        int const c = active[static_cast<std::size_t>(k)];
        auto const [i, j] = spans_[static_cast<std::size_t>(c)];
        Vector const r = features_.col(c).head(d);
        Vector dr = dfeatures.col(k).head(d);
        auto const& caches = span_attention_[static_cast<std::size_t>(c)];
        for (int u = 0; u < cfg.categories; ++u) {
            auto const& cache = caches[static_cast<std::size_t>(u)];
            if (cache.entries.empty()) continue;
            Vector const dblock = dfeatures.col(k).segment(static_cast<Eigen::Index>(u + 1) * d, d);
            g.category_weight(u) += dblock.dot(cache.average);
            Vector const daverage = t.category_weight(u) * dblock;
            auto const m = static_cast<Eigen::Index>(cache.entries.size());
            Vector dweights(m);
            for (Eigen::Index v = 0; v < m; ++v)
                dweights(v) = daverage.dot(t.ngram_embedding.col(cache.entries[static_cast<std::size_t>(v)]));
            double const mean = cache.weights.dot(dweights);
            for (Eigen::Index v = 0; v < m; ++v) {
                int const id = cache.entries[static_cast<std::size_t>(v)];
                double const dlogit = cache.weights(v) * (dweights(v) - mean);
                g.ngram_embedding.col(id) += cache.weights(v) * daverage + dlogit * r;
                dr += dlogit * t.ngram_embedding.col(id);
            }
        }
        dhidden.col(j) += dr;
        dhidden.col(i) -= dr;
    }

    g.boundary += dhidden.col(0);
    Matrix dx = dhidden.rightCols(n_);
    for (std::size_t l = layers_.size(); l-- > 0;)
        dx = backward_encoder_layer(t.layers[l], layers_[l], dx, g.layers[l]);

    for (int k = 0; k < n_; ++k) {
        g.word_embedding.col(word_ids_[static_cast<std::size_t>(k)]) += dx.col(k);
        if (dropout_)
            g.pos_embedding.col(tag_ids_[static_cast<std::size_t>(k)]) +=
                dx.col(k).cwiseProduct(pos_mask_.col(k));
        else
            g.pos_embedding.col(tag_ids_[static_cast<std::size_t>(k)]) += dx.col(k);
        g.position_embedding.col(k + 1) += dx.col(k);
    }
}

Matrix encode(Matrix const& inputs, ModelParams const& params, DropoutContext const* dropout) {
    if (inputs.rows() != params.config.dim)
        throw validation_error("encoder input dimension does not match the model");
    Matrix x = inputs;
    detail::EncoderLayerCache cache;
    for (auto const& layer : params.tensors.layers)
        x = detail::encoder_layer_forward(layer, params.config, x, dropout, cache);
    Matrix hidden(params.config.dim, x.cols() + 1);
    hidden.col(0) = params.tensors.boundary;
    hidden.rightCols(x.cols()) = x;
    return hidden;
}

SpanScoreChart score_spans(Sentence const& sentence, ModelParams const& params,
                           NGramLexicon const& lexicon, DropoutContext const* dropout) {
    return ScoringPass{sentence, params, lexicon, dropout}.chart();
}

} // namespace nenp
