#include "pairctx/net.h"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "test_util.h"

namespace pairctx {
namespace {

using testing::separable_examples;
using testing::toy_model_config;
using testing::toy_vocab;

Batch toy_batch(std::size_t n, std::uint64_t seed) {
  static const Vocab vocab = toy_vocab();
  auto exs = separable_examples(vocab, n, seed);
  return make_batch(exs, vocab.pad());
}

TEST_CASE("init_params") {
  const ModelConfig cfg = toy_model_config();
  const ModelParams a = init_params(cfg, 1);
  const ModelParams b = init_params(cfg, 1);
  const ModelParams c = init_params(cfg, 2);
  auto ta = a.tensors(), tb = b.tensors(), tc = c.tensors();
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(*ta[i].value == *tb[i].value);
  }
  CHECK(a.classifier_w != c.classifier_w);
  CHECK(a.classifier_b.isZero());
  CHECK(a.layers[0].attn_norm_gamma.isOnes());
  CHECK(a.classifier_w.rows() == 16);
  CHECK(a.classifier_w.cols() == 5);

  // Sample spread of a large weight tensor is close to 0.02.
  const Matrix& e = a.token_embedding;
  const double mean = e.mean();
  const double sd =
      std::sqrt((e.array() - mean).square().sum() / (e.size() - 1.0));
  CHECK(std::abs(mean) < 0.005);
  CHECK(sd == doctest::Approx(0.02).epsilon(0.15));

  ModelConfig wide = cfg;
  wide.hidden_dim = 32;
  wide.num_heads = 4;
  CHECK(wide.head_dim() == 8);

  ModelConfig bad = cfg;
  bad.num_heads = 3;
  CHECK_THROWS_AS(init_params(bad, 0), std::invalid_argument);
  bad = cfg;
  bad.num_classes = 4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward shape and padding invariance") {
  const ModelParams p = init_params(toy_model_config(), 3);
  const Batch batch = toy_batch(7, 1);
  Matrix logits = forward(p, batch);
  CHECK(logits.rows() == 7);
  CHECK(logits.cols() == 5);
  CHECK(logits.allFinite());

  // The same example alone and padded inside a batch with a longer one.
  const Vocab vocab = toy_vocab();
  auto exs = separable_examples(vocab, 20, 2);
  std::size_t shortest = 0, longest = 0;
  for (std::size_t i = 0; i < exs.size(); ++i) {
    if (exs[i].size() < exs[shortest].size()) shortest = i;
    if (exs[i].size() > exs[longest].size()) longest = i;
  }
  REQUIRE(exs[shortest].size() < exs[longest].size());
  std::vector<std::size_t> alone = {shortest};
  std::vector<std::size_t> padded = {shortest, longest};
  Matrix a = forward(p, make_batch(exs, alone, vocab.pad()));
  Matrix b = forward(p, make_batch(exs, padded, vocab.pad()));
  CHECK((a.row(0) - b.row(0)).cwiseAbs().maxCoeff() <= 1e-5);
  CHECK(forward(p, batch) == logits);
}

TEST_CASE("zero classifier gives uniform probabilities") {
  ModelParams p = init_params(toy_model_config(), 4);
  p.classifier_w.setZero();
  p.classifier_b.setZero();
  const Batch batch = toy_batch(5, 3);
  Matrix logits = forward(p, batch);
  CHECK(logits.isZero());
  Matrix probs = softmax_rows(logits);
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    CHECK(probs.data()[i] == doctest::Approx(0.2).epsilon(1e-12));
  }
  CHECK(nll_loss(logits, batch.labels) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("nll_loss values") {
  Matrix perfect(1, 5);
  perfect << 60, 0, 0, 0, 0;
  Matrix uniform = Matrix::Zero(1, 5);
  std::vector<Label> gold = {Label::kNoRel};
  CHECK(nll_loss(perfect, gold) < 1e-20);
  CHECK(nll_loss(uniform, gold) == doctest::Approx(1.6094379).epsilon(1e-7));
  Matrix both(2, 5);
  both << 60, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  std::vector<Label> golds = {Label::kNoRel, Label::kCom};
  CHECK(nll_loss(both, golds) == doctest::Approx(0.8047190).epsilon(1e-7));
  // Large logits stay finite.
  Matrix big(1, 5);
  big << 1000, -1000, 0, 0, 0;
  CHECK(std::isfinite(nll_loss(big, std::vector<Label>{Label::kLof})));
}

TEST_CASE("gradient matches central differences") {
  const ModelParams p = init_params(toy_model_config(), 5);
  const Batch batch = toy_batch(4, 7);
  auto check = testing::grad_check(p, batch, 400, 11);
  INFO("worst tensor: " << check.worst_tensor);
  CHECK(check.coords >= 400);
  CHECK(check.max_rel_error <= 1e-4);
}

TEST_CASE("classifier bias gradient has the closed form") {
  const ModelParams p = init_params(toy_model_config(), 6);
  const Batch batch = toy_batch(6, 9);
  GradResult g = grad(p, batch);
  Matrix probs = softmax_rows(forward(p, batch));
  Matrix expected = Matrix::Zero(1, 5);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    expected += probs.row(b);
    expected(0, label_index(batch.labels[b])) -= 1.0;
  }
  expected /= static_cast<double>(batch.batch_size);
  CHECK((g.grad.classifier_b - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g.loss == doctest::Approx(nll_loss(g.logits, batch.labels)));
}

TEST_CASE("saturated loss has a vanishing gradient") {
  ModelParams p = init_params(toy_model_config(), 7);
  p.classifier_w.setZero();
  p.classifier_b << 0, 0, 0, 0, 0;
  p.classifier_b(0, 0) = 60;
  Batch batch = toy_batch(5, 1);
  std::fill(batch.labels.begin(), batch.labels.end(), Label::kNoRel);
  GradResult g = grad(p, batch);
  double norm = 0;
  for (const auto& t : g.grad.tensors()) norm += t.value->squaredNorm();
  CHECK(std::sqrt(norm) < 1e-20);
}

TEST_CASE("classifier dropout") {
  const ModelParams p = init_params(toy_model_config(), 8);
  const Batch batch = toy_batch(5, 2);
  GradOptions opts;
  opts.classifier_dropout = 0.5;
  CHECK_THROWS_AS(grad(p, batch, opts), std::invalid_argument);
  std::mt19937_64 r1(1), r2(1);
  opts.rng = &r1;
  GradResult a = grad(p, batch, opts);
  opts.rng = &r2;
  GradResult b = grad(p, batch, opts);
  CHECK(a.loss == b.loss);
  CHECK(a.grad.classifier_w == b.grad.classifier_w);
  // Training-mode logits differ from inference logits.
  CHECK(a.logits != forward(p, batch));
}

TEST_CASE("predict") {
  Matrix tied(2, 5);
  tied << 1, 1, 0, 0, 0, 0, 0, 2, 2, 2;
  auto labels = argmax_labels(tied);
  CHECK(labels[0] == Label::kNoRel);
  CHECK(labels[1] == Label::kGof);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix m(3, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    Matrix shifted = m.array() + 3.25;
    CHECK(argmax_labels(shifted) == argmax_labels(m));
  }

  const ModelParams p = init_params(toy_model_config(), 9);
  const Batch batch = toy_batch(4, 4);
  CHECK(predict(p, batch) == argmax_labels(forward(p, batch)));
}

TEST_CASE("forward rejects bad input") {
  const ModelParams p = init_params(toy_model_config(), 10);
  Batch batch = toy_batch(2, 5);
  batch.token_ids[1] = 50;
  CHECK_THROWS_AS(forward(p, batch), std::out_of_range);
  batch.token_ids[1] = -1;
  CHECK_THROWS_AS(forward(p, batch), std::out_of_range);
}

TEST_CASE("checkpoint round trip") {
  const ModelParams p = init_params(toy_model_config(), 11);
  std::stringstream ss;
  write_checkpoint(p, ss);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 8) == "PCTXCKPT");
  ModelParams back = read_checkpoint(ss);
  CHECK(back.config == p.config);
  auto a = p.tensors();
  auto b = back.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    // Stored as float32: half an ulp of relative error at most.
    const double scale = std::max(1e-30, a[i].value->cwiseAbs().maxCoeff());
    CHECK((*a[i].value - *b[i].value).cwiseAbs().maxCoeff() <= 6e-8 * scale);
  }
  // A reloaded model serializes to the same bytes.
  std::stringstream again;
  write_checkpoint(back, again);
  CHECK(again.str() == bytes);

  testing::TempDir dir;
  save_checkpoint(p, dir / "m.ckpt");
  CHECK(testing::read_file(dir / "m.ckpt") == bytes);
  CHECK(load_checkpoint(dir / "m.ckpt").config == p.config);

  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS(read_checkpoint(truncated));
  std::istringstream wrong_magic("NOTACKPT" + bytes.substr(8));
  CHECK_THROWS(read_checkpoint(wrong_magic));
}

TEST_CASE("sgd_step") {
  ModelParams p = init_params(toy_model_config(), 12);
  const Batch batch = toy_batch(5, 6);
  const double before = nll_loss(forward(p, batch), batch.labels);
  for (int i = 0; i < 5; ++i) sgd_step(p, grad(p, batch).grad, 0.1);
  CHECK(nll_loss(forward(p, batch), batch.labels) < before);
}

}  // namespace
}  // namespace pairctx
