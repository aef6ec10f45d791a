#ifndef PAIRCTX_NET_H_
#define PAIRCTX_NET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pairctx/encoder_input.h"
#include "pairctx/errors.h"
#include "pairctx/label.h"

namespace pairctx {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t hidden_dim = 64;
  std::size_t ffn_dim = 128;
  std::size_t vocab_size = 0;
  std::size_t max_positions = kMaxSequenceLength;
  std::size_t num_classes = kNumLabels;

  std::size_t head_dim() const { return hidden_dim / num_heads; }
  // Throws std::invalid_argument describing the first broken constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Mutable view of one named parameter tensor.
struct TensorView {
  std::string name;
  Matrix* value;
};

struct ConstTensorView {
  std::string name;
  const Matrix* value;
};

// All tensors are row-major matrices; biases and norm parameters are 1 x n.
struct LayerParams {
  Matrix query_w, query_b;
  Matrix key_w, key_b;
  Matrix value_w, value_b;
  Matrix output_w, output_b;
  Matrix attn_norm_gamma, attn_norm_beta;
  Matrix ffn_in_w, ffn_in_b;
  Matrix ffn_out_w, ffn_out_b;
  Matrix ffn_norm_gamma, ffn_norm_beta;
};

struct ModelParams {
  ModelConfig config;
  Matrix token_embedding;     // vocab_size x hidden
  Matrix position_embedding;  // max_positions x hidden
  Matrix segment_embedding;   // 2 x hidden
  Matrix embed_norm_gamma, embed_norm_beta;
  std::vector<LayerParams> layers;
  Matrix classifier_w;  // hidden x num_classes
  Matrix classifier_b;  // 1 x num_classes

  // Every tensor in a fixed order with dotted names such as
  // "layer.0.attention.query.weight".
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t num_scalars() const;

  // Same shapes, all entries zero.
  static ModelParams zeros(const ModelConfig& cfg);
};

// N(0, 0.02) for weight matrices, embeddings and the classifier; zero biases;
// unit norm gains. Deterministic in (cfg, seed).
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// Redraws only the classifier layer from `seed`. Used when the encoder comes
// from pretrained weights.
void reinit_classifier(ModelParams& params, std::uint64_t seed);

// Logits (batch x num_classes) from the final hidden state at position 0.
// Masked positions take no part in attention. Throws std::out_of_range for a
// token id outside the vocabulary or a sequence longer than max_positions.
Matrix forward(const ModelParams& params, const Batch& batch);

Matrix softmax_rows(const Matrix& logits);

// Mean over rows of -log softmax(logits)[gold], in nats.
double nll_loss(const Matrix& logits, std::span<const Label> golds);

// Argmax per row; ties go to the lowest class index.
std::vector<Label> argmax_labels(const Matrix& logits);
std::vector<Label> predict(const ModelParams& params, const Batch& batch);

class NonFiniteGradient : public Error {
 public:
  explicit NonFiniteGradient(const std::string& tensor)
      : Error("non-finite gradient in " + tensor), tensor_(tensor) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

struct GradOptions {
  // Dropout on the [CLS] state feeding the classifier; needs `rng` when > 0.
  double classifier_dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

struct GradResult {
  ModelParams grad;
  double loss = 0.0;
  Matrix logits;
};

// Exact gradient of nll_loss over the batch with respect to every parameter.
// Throws NonFiniteGradient naming the first offending tensor.
GradResult grad(const ModelParams& params, const Batch& batch,
                const GradOptions& options = {});

// params -= learning_rate * grad
void sgd_step(ModelParams& params, const ModelParams& grad,
              double learning_rate);

// Binary checkpoint: magic "PCTXCKPT", u32 format version, the seven
// ModelConfig fields as u32, u32 tensor count, then per tensor u32 name
// length, name bytes, u32 rank, u32 dims, and little-endian float32 data in
// row-major order.
void write_checkpoint(const ModelParams& params, std::ostream& out);
ModelParams read_checkpoint(std::istream& in);
void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace pairctx

#endif  // PAIRCTX_NET_H_
