#include "pairctx/net.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace pairctx {

namespace {

constexpr double kNormEps = 1e-12;
constexpr double kInitStd = 0.02;

using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct NormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                  NormCache& cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  cache.xhat.resize(n, d);
  cache.inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).mean();
    RowVector centered = x.row(i).array() - mu;
    const double var = centered.squaredNorm() / static_cast<double>(d);
    cache.inv_std(i) = 1.0 / std::sqrt(var + kNormEps);
    cache.xhat.row(i) = centered * cache.inv_std(i);
  }
  Matrix y = cache.xhat * gamma.row(0).asDiagonal();
  y.rowwise() += beta.row(0);
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const NormCache& cache,
                           const Matrix& gamma, Matrix& dgamma,
                           Matrix& dbeta) {
  dgamma.row(0) += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
  dbeta.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy * gamma.row(0).asDiagonal();
  const double d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double sum = dxhat.row(i).sum();
    const double dot = dxhat.row(i).dot(cache.xhat.row(i));
    dx.row(i) = (cache.inv_std(i) / d) *
                (d * dxhat.row(i).array() - sum -
                 cache.xhat.row(i).array() * dot)
                    .matrix();
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi /
                     std::numbers::sqrt2;
  return cdf + x * pdf;
}

void softmax_in_place(Eigen::Ref<Matrix> s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp().matrix();
    s.row(i) /= s.row(i).sum();
  }
}

struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // one n x n matrix per head
  Matrix context;
  NormCache attn_norm;
  Matrix h1;
  Matrix ffn_pre;
  Matrix ffn_act;
  NormCache ffn_norm;
};

struct ExampleCache {
  std::vector<Eigen::Index> positions;
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> segments;
  NormCache embed_norm;
  std::vector<LayerCache> layers;
  Matrix output;
};

// Runs the encoder over the unmasked positions of row b; returns the final
// hidden state of position 0.
RowVector encode_row(const ModelParams& p, const Batch& batch, std::size_t b,
                     ExampleCache& c) {
  const ModelConfig& cfg = p.config;
  c.positions.clear();
  c.tokens.clear();
  c.segments.clear();
  for (std::size_t t = 0; t < batch.seq_len; ++t) {
    if (batch.attention_mask[b * batch.seq_len + t] == 0) continue;
    const TokenId tok = batch.token(b, t);
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg.vocab_size) {
      throw std::out_of_range("token id " + std::to_string(tok) +
                              " outside vocabulary of size " +
                              std::to_string(cfg.vocab_size));
    }
    if (t >= cfg.max_positions) {
      throw std::out_of_range("position " + std::to_string(t) +
                              " beyond max_positions " +
                              std::to_string(cfg.max_positions));
    }
    c.positions.push_back(static_cast<Eigen::Index>(t));
    c.tokens.push_back(tok);
    c.segments.push_back(batch.segment_ids[b * batch.seq_len + t] ? 1 : 0);
  }
  if (c.positions.empty() || c.positions.front() != 0) {
    throw std::invalid_argument("position 0 of every row must be unmasked");
  }

  const auto n = static_cast<Eigen::Index>(c.positions.size());
  const auto hdim = static_cast<Eigen::Index>(cfg.hidden_dim);
  Matrix x(n, hdim);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = p.token_embedding.row(c.tokens[i]) +
               p.position_embedding.row(c.positions[i]) +
               p.segment_embedding.row(c.segments[i]);
  }
  Matrix e = layer_norm(x, p.embed_norm_gamma, p.embed_norm_beta, c.embed_norm);

  const auto dh = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& w = p.layers[l];
    LayerCache& lc = c.layers[l];
    lc.input = std::move(e);
    lc.q = lc.input * w.query_w;
    lc.q.rowwise() += w.query_b.row(0);
    lc.k = lc.input * w.key_w;
    lc.k.rowwise() += w.key_b.row(0);
    lc.v = lc.input * w.value_w;
    lc.v.rowwise() += w.value_b.row(0);
    lc.context.resize(n, hdim);
    lc.probs.resize(cfg.num_heads);
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      Matrix s = lc.q.middleCols(off, dh) * lc.k.middleCols(off, dh).transpose();
      s *= scale;
      softmax_in_place(s);
      lc.context.middleCols(off, dh) = s * lc.v.middleCols(off, dh);
      lc.probs[h] = std::move(s);
    }
    Matrix attn = lc.context * w.output_w;
    attn.rowwise() += w.output_b.row(0);
    lc.h1 = layer_norm(lc.input + attn, w.attn_norm_gamma, w.attn_norm_beta,
                       lc.attn_norm);
    lc.ffn_pre = lc.h1 * w.ffn_in_w;
    lc.ffn_pre.rowwise() += w.ffn_in_b.row(0);
    lc.ffn_act = lc.ffn_pre.unaryExpr(&gelu);
    Matrix ffn = lc.ffn_act * w.ffn_out_w;
    ffn.rowwise() += w.ffn_out_b.row(0);
    e = layer_norm(lc.h1 + ffn, w.ffn_norm_gamma, w.ffn_norm_beta, lc.ffn_norm);
  }
  c.output = std::move(e);
  return c.output.row(0);
}

// Backpropagates d(loss)/d(hidden state at position 0) through the encoder.
void backward_row(const ModelParams& p, const ExampleCache& c,
                  const RowVector& d_cls, ModelParams& g) {
  const ModelConfig& cfg = p.config;
  const Eigen::Index n = c.output.rows();
  const auto dh = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix de = Matrix::Zero(n, c.output.cols());
  de.row(0) = d_cls;
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const LayerParams& w = p.layers[li];
    LayerParams& gw = g.layers[li];
    const LayerCache& lc = c.layers[li];

    Matrix d_sum2 = layer_norm_backward(de, lc.ffn_norm, w.ffn_norm_gamma,
                                        gw.ffn_norm_gamma, gw.ffn_norm_beta);
    gw.ffn_out_w.noalias() += lc.ffn_act.transpose() * d_sum2;
    gw.ffn_out_b.row(0) += d_sum2.colwise().sum();
    Matrix d_act = d_sum2 * w.ffn_out_w.transpose();
    Matrix d_pre = d_act.array() * lc.ffn_pre.unaryExpr(&gelu_grad).array();
    gw.ffn_in_w.noalias() += lc.h1.transpose() * d_pre;
    gw.ffn_in_b.row(0) += d_pre.colwise().sum();
    Matrix d_h1 = d_sum2 + d_pre * w.ffn_in_w.transpose();

    Matrix d_sum1 = layer_norm_backward(d_h1, lc.attn_norm, w.attn_norm_gamma,
                                        gw.attn_norm_gamma, gw.attn_norm_beta);
    gw.output_w.noalias() += lc.context.transpose() * d_sum1;
    gw.output_b.row(0) += d_sum1.colwise().sum();
    Matrix d_ctx = d_sum1 * w.output_w.transpose();

    Matrix dq(n, lc.q.cols()), dk(n, lc.k.cols()), dv(n, lc.v.cols());
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      const Matrix& a = lc.probs[h];
      Matrix d_ctx_h = d_ctx.middleCols(off, dh);
      Matrix da = d_ctx_h * lc.v.middleCols(off, dh).transpose();
      dv.middleCols(off, dh) = a.transpose() * d_ctx_h;
      Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      Matrix ds = a.array() * (da.colwise() - row_dot).array();
      ds *= scale;
      dq.middleCols(off, dh) = ds * lc.k.middleCols(off, dh);
      dk.middleCols(off, dh) = ds.transpose() * lc.q.middleCols(off, dh);
    }
    gw.query_w.noalias() += lc.input.transpose() * dq;
    gw.query_b.row(0) += dq.colwise().sum();
    gw.key_w.noalias() += lc.input.transpose() * dk;
    gw.key_b.row(0) += dk.colwise().sum();
    gw.value_w.noalias() += lc.input.transpose() * dv;
    gw.value_b.row(0) += dv.colwise().sum();
    de = d_sum1 + dq * w.query_w.transpose() + dk * w.key_w.transpose() +
         dv * w.value_w.transpose();
  }

  Matrix dx = layer_norm_backward(de, c.embed_norm, p.embed_norm_gamma,
                                  g.embed_norm_gamma, g.embed_norm_beta);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.token_embedding.row(c.tokens[i]) += dx.row(i);
    g.position_embedding.row(c.positions[i]) += dx.row(i);
    g.segment_embedding.row(c.segments[i]) += dx.row(i);
  }
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols,
                     std::mt19937_64& rng, double stddev = kInitStd) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid model config: " + what);
  };
  if (num_layers < 1) fail("num_layers must be >= 1");
  if (num_heads < 1) fail("num_heads must be >= 1");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (ffn_dim < 1) fail("ffn_dim must be >= 1");
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (hidden_dim % num_heads != 0) {
    fail("hidden_dim " + std::to_string(hidden_dim) +
         " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (max_positions < kMaxSequenceLength) {
    fail("max_positions must be >= " + std::to_string(kMaxSequenceLength));
  }
  if (num_classes != kNumLabels) fail("num_classes must be 5");
}

std::vector<TensorView> ModelParams::tensors() {
  std::vector<TensorView> out = {
      {"embeddings.token", &token_embedding},
      {"embeddings.position", &position_embedding},
      {"embeddings.segment", &segment_embedding},
      {"embeddings.norm.gamma", &embed_norm_gamma},
      {"embeddings.norm.beta", &embed_norm_beta},
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string pre = "layer." + std::to_string(l) + ".";
    LayerParams& w = layers[l];
    for (auto& [name, m] : std::initializer_list<std::pair<const char*, Matrix*>>{
             {"attention.query.weight", &w.query_w},
             {"attention.query.bias", &w.query_b},
             {"attention.key.weight", &w.key_w},
             {"attention.key.bias", &w.key_b},
             {"attention.value.weight", &w.value_w},
             {"attention.value.bias", &w.value_b},
             {"attention.output.weight", &w.output_w},
             {"attention.output.bias", &w.output_b},
             {"attention.norm.gamma", &w.attn_norm_gamma},
             {"attention.norm.beta", &w.attn_norm_beta},
             {"ffn.in.weight", &w.ffn_in_w},
             {"ffn.in.bias", &w.ffn_in_b},
             {"ffn.out.weight", &w.ffn_out_w},
             {"ffn.out.bias", &w.ffn_out_b},
             {"ffn.norm.gamma", &w.ffn_norm_gamma},
             {"ffn.norm.beta", &w.ffn_norm_beta}}) {
      out.push_back({pre + name, m});
    }
  }
  out.push_back({"classifier.weight", &classifier_w});
  out.push_back({"classifier.bias", &classifier_b});
  return out;
}

std::vector<ConstTensorView> ModelParams::tensors() const {
  std::vector<ConstTensorView> out;
  for (auto& t : const_cast<ModelParams*>(this)->tensors()) {
    out.push_back({std::move(t.name), t.value});
  }
  return out;
}

std::size_t ModelParams::num_scalars() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.value->size());
  return n;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
  const auto f = static_cast<Eigen::Index>(cfg.ffn_dim);
  ModelParams p;
  p.config = cfg;
  p.token_embedding = Matrix::Zero(static_cast<Eigen::Index>(cfg.vocab_size), h);
  p.position_embedding =
      Matrix::Zero(static_cast<Eigen::Index>(cfg.max_positions), h);
  p.segment_embedding = Matrix::Zero(2, h);
  p.embed_norm_gamma = Matrix::Zero(1, h);
  p.embed_norm_beta = Matrix::Zero(1, h);
  p.layers.resize(cfg.num_layers);
  for (auto& w : p.layers) {
    for (Matrix* m : {&w.query_w, &w.key_w, &w.value_w, &w.output_w}) {
      *m = Matrix::Zero(h, h);
    }
    for (Matrix* m : {&w.query_b, &w.key_b, &w.value_b, &w.output_b,
                      &w.attn_norm_gamma, &w.attn_norm_beta, &w.ffn_out_b,
                      &w.ffn_norm_gamma, &w.ffn_norm_beta}) {
      *m = Matrix::Zero(1, h);
    }
    w.ffn_in_w = Matrix::Zero(h, f);
    w.ffn_in_b = Matrix::Zero(1, f);
    w.ffn_out_w = Matrix::Zero(f, h);
  }
  p.classifier_w =
      Matrix::Zero(h, static_cast<Eigen::Index>(cfg.num_classes));
  p.classifier_b =
      Matrix::Zero(1, static_cast<Eigen::Index>(cfg.num_classes));
  return p;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(cfg);
  std::mt19937_64 rng(seed);
  for (auto& t : p.tensors()) {
    const std::string& name = t.name;
    Matrix& m = *t.value;
    if (name.ends_with(".gamma")) {
      m.setOnes();
    } else if (name.ends_with(".bias") || name.ends_with(".beta")) {
      m.setZero();
    } else if (name.starts_with("layer.")) {
      // Encoder projections are scaled by fan-in so that a randomly
      // initialized stack still passes token information up to [CLS].
      m = normal_matrix(m.rows(), m.cols(), rng,
                        1.0 / std::sqrt(static_cast<double>(m.rows())));
    } else {
      m = normal_matrix(m.rows(), m.cols(), rng);
    }
  }
  return p;
}

void reinit_classifier(ModelParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params.classifier_w = normal_matrix(params.classifier_w.rows(),
                                      params.classifier_w.cols(), rng);
  params.classifier_b.setZero();
}

Matrix forward(const ModelParams& params, const Batch& batch) {
  Matrix logits(static_cast<Eigen::Index>(batch.batch_size),
                static_cast<Eigen::Index>(params.config.num_classes));
  ExampleCache cache;
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    RowVector h = encode_row(params, batch, b, cache);
    logits.row(static_cast<Eigen::Index>(b)) =
        h * params.classifier_w + params.classifier_b;
  }
  return logits;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  softmax_in_place(p);
  return p;
}

double nll_loss(const Matrix& logits, std::span<const Label> golds) {
  if (static_cast<std::size_t>(logits.rows()) != golds.size()) {
    throw std::invalid_argument("logits/labels size mismatch");
  }
  if (golds.empty()) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, label_index(golds[i]));
  }
  return total / static_cast<double>(golds.size());
}

std::vector<Label> argmax_labels(const Matrix& logits) {
  std::vector<Label> out;
  out.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    out.push_back(label_from_index(static_cast<int>(best)));
  }
  return out;
}

std::vector<Label> predict(const ModelParams& params, const Batch& batch) {
  return argmax_labels(forward(params, batch));
}

GradResult grad(const ModelParams& params, const Batch& batch,
                const GradOptions& options) {
  const double drop = options.classifier_dropout;
  if (drop < 0.0 || drop >= 1.0) {
    throw std::invalid_argument("dropout must be in [0,1)");
  }
  if (drop > 0.0 && options.rng == nullptr) {
    throw std::invalid_argument("dropout needs a random generator");
  }
  const auto batch_size = static_cast<Eigen::Index>(batch.batch_size);
  const auto classes = static_cast<Eigen::Index>(params.config.num_classes);
  GradResult out;
  out.grad = ModelParams::zeros(params.config);
  out.logits.resize(batch_size, classes);
  if (batch_size == 0) return out;

  std::bernoulli_distribution keep(1.0 - drop);
  ExampleCache cache;
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch_size; ++b) {
    RowVector h = encode_row(params, batch, static_cast<std::size_t>(b), cache);
    RowVector mask = RowVector::Ones(h.size());
    if (drop > 0.0) {
      for (Eigen::Index j = 0; j < mask.size(); ++j) {
        mask(j) = keep(*options.rng) ? 1.0 / (1.0 - drop) : 0.0;
      }
    }
    const RowVector hd = h.cwiseProduct(mask);
    RowVector logits = hd * params.classifier_w + params.classifier_b;
    out.logits.row(b) = logits;

    const double m = logits.maxCoeff();
    RowVector prob = (logits.array() - m).exp().matrix();
    const double z = prob.sum();
    prob /= z;
    const int gold = label_index(batch.labels[static_cast<std::size_t>(b)]);
    loss += (m + std::log(z)) - logits(gold);

    RowVector dlogits = prob;
    dlogits(gold) -= 1.0;
    dlogits /= static_cast<double>(batch_size);
    out.grad.classifier_w.noalias() += hd.transpose() * dlogits;
    out.grad.classifier_b.row(0) += dlogits;
    RowVector dh =
        (dlogits * params.classifier_w.transpose()).cwiseProduct(mask);
    backward_row(params, cache, dh, out.grad);
  }
  out.loss = loss / static_cast<double>(batch_size);

  for (const auto& t : out.grad.tensors()) {
    if (!t.value->allFinite()) throw NonFiniteGradient(t.name);
  }
  return out;
}

void sgd_step(ModelParams& params, const ModelParams& grad,
              double learning_rate) {
  auto dst = params.tensors();
  auto src = grad.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    *dst[i].value -= learning_rate * *src[i].value;
  }
}

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'C', 'T', 'X', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF),
                     static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF),
                     static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error("checkpoint truncated");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("value too large for checkpoint field");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_checkpoint(const ModelParams& params, std::ostream& out) {
  const ModelConfig& c = params.config;
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kFormatVersion);
  for (std::size_t v : {c.num_layers, c.num_heads, c.hidden_dim, c.ffn_dim,
                        c.vocab_size, c.max_positions, c.num_classes}) {
    put_u32(out, checked_u32(v));
  }
  const auto tensors = params.tensors();
  put_u32(out, checked_u32(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, checked_u32(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, 2);
    put_u32(out, checked_u32(static_cast<std::size_t>(t.value->rows())));
    put_u32(out, checked_u32(static_cast<std::size_t>(t.value->cols())));
    for (Eigen::Index i = 0; i < t.value->size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(
                       static_cast<float>(t.value->data()[i])));
    }
  }
  if (!out) throw IoError("failed writing checkpoint");
}

ModelParams read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error("not a checkpoint (bad magic)");
  }
  if (get_u32(in) != kFormatVersion) throw Error("unsupported checkpoint version");
  ModelConfig c;
  for (std::size_t* f : {&c.num_layers, &c.num_heads, &c.hidden_dim, &c.ffn_dim,
                         &c.vocab_size, &c.max_positions, &c.num_classes}) {
    *f = get_u32(in);
  }
  ModelParams p = ModelParams::zeros(c);
  auto tensors = p.tensors();
  if (get_u32(in) != tensors.size()) throw Error("checkpoint tensor count mismatch");
  for (auto& t : tensors) {
    const std::uint32_t len = get_u32(in);
    if (len > 4096) throw Error("checkpoint tensor name too long");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw Error("checkpoint truncated");
    if (name != t.name) {
      throw Error("checkpoint tensor '" + name + "' where '" + t.name +
                  "' was expected");
    }
    if (get_u32(in) != 2) throw Error("checkpoint tensor " + name + " not rank 2");
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    if (rows != t.value->rows() || cols != t.value->cols()) {
      throw Error("checkpoint tensor " + name + " has shape " +
                  std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (Eigen::Index i = 0; i < t.value->size(); ++i) {
      t.value->data()[i] = std::bit_cast<float>(get_u32(in));
    }
  }
  return p;
}

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(params, out);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace pairctx
