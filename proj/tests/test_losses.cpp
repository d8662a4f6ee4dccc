#include <gtest/gtest.h>

#include <cmath>

#include "agra/losses.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace agra;

namespace {

LinearModel scaled_one_hot_model() {
  // K = D = 2; logits ±50 make softmax outputs one-hot to double precision.
  LinearModel m(2, 2);
  m.weight(0, 0) = 50;
  m.weight(0, 1) = -50;
  m.weight(1, 0) = -50;
  m.weight(1, 1) = 50;
  return m;
}

const std::vector<SparseEntry> kE0{{0, 1.0}};
const std::vector<SparseEntry> kE1{{1, 1.0}};

}  // namespace

TEST(F1MacroSingle, OneHotOutputsGiveEpsilonLoss) {
  Batch b(TaskKind::SingleLabel, 2);
  b.push_single(kE0, 0);
  b.push_single(kE1, 1);
  // each class: tp = 1, fp = fn = 0 -> 1 - 2/(2 + eps)
  EXPECT_NEAR(loss_value(LossKind::F1MacroSingle, scaled_one_hot_model(), b), 1.0 - 2.0 / (2.0 + 1e-5), 1e-15);
}

TEST(F1MacroSingle, UniformProbabilities) {
  Batch b(TaskKind::SingleLabel, 2);
  b.push_single(kE0, 0);
  b.push_single(kE1, 1);
  // tp = fp = fn = 0.5 per class -> 1 - 1/(2 + eps)
  EXPECT_NEAR(loss_value(LossKind::F1MacroSingle, LinearModel(2, 2), b), 1.0 - 1.0 / (2.0 + 1e-5), 1e-15);
}

TEST(CrossEntropy, ZeroModelIsLogK) {
  Rng rng(4);
  for (std::size_t k : {2u, 3u, 7u}) {
    auto x = fixtures::random_features(5, 4, false, rng);
    auto b = fixtures::random_single_batch(x, k, rng);
    EXPECT_DOUBLE_EQ(loss_value(LossKind::CrossEntropy, LinearModel(k, 4), b), std::log(static_cast<double>(k)));
  }
}

TEST(CrossEntropy, ClosedFormGradientSingleSample) {
  std::vector<SparseEntry> x{{0, 1.0}};
  Batch b2(TaskKind::SingleLabel, 2);
  b2.push_single(x, 0);
  auto g = loss_gradient(LossKind::CrossEntropy, LinearModel(2, 1), b2);
  EXPECT_EQ(g.values, (std::vector<double>{-0.5, 0.5, -0.5, 0.5}));
}

TEST(CrossEntropy, LargeLogitsStayFinite) {
  LinearModel m(2, 1);
  m.weight(0, 0) = 1e4;
  std::vector<SparseEntry> x{{0, 1.0}};
  Batch b(TaskKind::SingleLabel, 2);
  b.push_single(x, 1);
  EXPECT_DOUBLE_EQ(loss_value(LossKind::CrossEntropy, m, b), 1e4);
  EXPECT_TRUE(loss_gradient(LossKind::CrossEntropy, m, b).all_finite());
}

TEST(F1Binary, AllNegativeBatchHasConstantLoss) {
  // With no positives tp is identically zero, so the loss is 1 for every
  // model and the gradient vanishes exactly.
  Rng rng(8);
  auto m = fixtures::random_model(2, 3, rng);
  auto x = fixtures::random_features(4, 3, true, rng);
  Batch b(TaskKind::SingleLabel, 2);
  for (std::size_t i = 0; i < 4; ++i) b.push_single(x.row(i), 0);
  EXPECT_DOUBLE_EQ(loss_value(LossKind::F1Binary, m, b), 1.0);
  for (double g : loss_gradient(LossKind::F1Binary, m, b).values) EXPECT_EQ(g, 0.0);
}

TEST(F1Binary, NegativeSamplePushesPositiveProbabilityDown) {
  // One positive and one negative sample: descending the gradient lowers the
  // positive-class logit of the negative sample.
  LinearModel m(2, 2);
  Batch b(TaskKind::SingleLabel, 2);
  b.push_single(kE0, 1);
  b.push_single(kE1, 0);
  auto g = loss_gradient(LossKind::F1Binary, m, b);
  // d loss / d W[1][1] > 0: the negative sample's feature raises fp.
  EXPECT_GT(g.values[1 * 2 + 1], 0.0);
  EXPECT_LT(g.values[1 * 2 + 0], 0.0);
}

TEST(Losses, F1ValuesStayInUnitInterval) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(4);
    auto m = fixtures::random_model(k, 5, rng, 3.0);
    auto x = fixtures::random_features(1 + rng.uniform_index(6), 5, trial % 2 == 0, rng);
    auto single = fixtures::random_single_batch(x, k, rng);
    auto multi = fixtures::random_multi_batch(x, k, rng);
    for (double v : {loss_value(LossKind::F1MacroSingle, m, single), loss_value(LossKind::F1MacroMulti, m, multi)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (k == 2) {
      const double v = loss_value(LossKind::F1Binary, m, single);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Losses, FiniteDifferencesMatchEveryKind) {
  Rng rng(2024);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t k = trial % 2 == 0 ? 2 : 4;
    const std::size_t d = 6;
    auto m = fixtures::random_model(k, d, rng);
    auto x = fixtures::random_features(1 + trial % 5, d, trial % 3 != 0, rng);
    auto single = fixtures::random_single_batch(x, k, rng);
    auto multi = fixtures::random_multi_batch(x, k, rng);
    auto masked = fixtures::random_multi_batch(x, k, rng, 0.3);
    std::vector<std::pair<LossKind, const Batch*>> cases = {
        {LossKind::CrossEntropy, &single}, {LossKind::F1MacroSingle, &single},
        {LossKind::BinaryCrossEntropy, &multi}, {LossKind::F1MacroMulti, &multi},
        {LossKind::MaskedBCE, &masked}};
    if (k == 2) cases.push_back({LossKind::F1Binary, &single});
    for (auto [kind, batch] : cases) {
      auto analytic = loss_gradient(kind, m, *batch).values;
      auto numeric = fixtures::finite_difference_gradient(kind, m, *batch);
      auto check = fixtures::compare_gradients(analytic, numeric);
      EXPECT_TRUE(check.ok) << to_string(kind) << " trial " << trial << " rel " << check.worst_relative << " abs "
                            << check.worst_absolute;
    }
  }
}

TEST(Losses, ValuesMatchReferenceImplementation) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = trial % 2 == 0 ? 2 : 3;
    auto m = fixtures::random_model(k, 5, rng, 2.0);
    auto x = fixtures::random_features(1 + trial % 6, 5, trial % 3 == 0, rng);
    auto single = fixtures::random_single_batch(x, k, rng);
    auto multi = fixtures::random_multi_batch(x, k, rng);
    auto masked = fixtures::random_multi_batch(x, k, rng, 0.4);
    std::vector<std::pair<LossKind, const Batch*>> cases = {
        {LossKind::CrossEntropy, &single}, {LossKind::F1MacroSingle, &single},
        {LossKind::BinaryCrossEntropy, &multi}, {LossKind::F1MacroMulti, &multi},
        {LossKind::MaskedBCE, &masked}};
    if (k == 2) cases.push_back({LossKind::F1Binary, &single});
    for (auto [kind, batch] : cases) {
      const double ref = static_cast<double>(fixtures::reference_loss(kind, m, *batch));
      EXPECT_NEAR(loss_value(kind, m, *batch), ref, 1e-12 * std::max(1.0, std::abs(ref))) << to_string(kind);
    }
  }
}

TEST(Losses, LossAndGradientAgreeWithSeparateCalls) {
  Rng rng(3);
  auto m = fixtures::random_model(3, 4, rng);
  auto x = fixtures::random_features(5, 4, true, rng);
  auto b = fixtures::random_single_batch(x, 3, rng);
  auto both = loss_and_gradient(LossKind::CrossEntropy, m, b);
  EXPECT_EQ(both.value, loss_value(LossKind::CrossEntropy, m, b));
  EXPECT_EQ(both.gradient.values, loss_gradient(LossKind::CrossEntropy, m, b).values);
}

TEST(MaskedBCE, NoMaskEqualsPlainBCE) {
  Rng rng(5);
  auto m = fixtures::random_model(3, 4, rng);
  auto x = fixtures::random_features(6, 4, false, rng);
  auto b = fixtures::random_multi_batch(x, 3, rng);
  EXPECT_DOUBLE_EQ(loss_value(LossKind::MaskedBCE, m, b), loss_value(LossKind::BinaryCrossEntropy, m, b));
}

TEST(MaskedBCE, FullyMaskedClassContributesNothing) {
  Rng rng(6);
  auto m = fixtures::random_model(3, 4, rng);
  auto x = fixtures::random_features(5, 4, true, rng);
  auto b = fixtures::random_multi_batch(x, 3, rng);
  for (std::size_t t = 0; t < b.size(); ++t) b.label_vector(t)[1] = kIgnoreLabel;
  auto g = loss_gradient(LossKind::MaskedBCE, m, b);
  for (double v : g.class_weights(1)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.bias_block()[1], 0.0);
}

TEST(MaskedBCE, AddingAFullyMaskedSampleChangesNothing) {
  Rng rng(7);
  auto m = fixtures::random_model(3, 4, rng);
  auto x = fixtures::random_features(6, 4, true, rng);
  auto b = fixtures::random_multi_batch(x, 3, rng, 0.2);
  auto base = loss_and_gradient(LossKind::MaskedBCE, m, b);
  std::vector<std::int8_t> ignored(3, kIgnoreLabel);
  b.push_multi(x.row(0), ignored);
  auto extended = loss_and_gradient(LossKind::MaskedBCE, m, b);
  EXPECT_EQ(base.value, extended.value);
  EXPECT_EQ(base.gradient.values, extended.gradient.values);
}

TEST(MaskedBCE, EverythingMaskedIsZero) {
  LinearModel m(2, 1);
  std::vector<SparseEntry> x{{0, 1.0}};
  Batch b(TaskKind::MultiLabel, 2);
  std::vector<std::int8_t> ignored(2, kIgnoreLabel);
  b.push_multi(x, ignored);
  EXPECT_EQ(loss_value(LossKind::MaskedBCE, m, b), 0.0);
  for (double v : loss_gradient(LossKind::MaskedBCE, m, b).values) EXPECT_EQ(v, 0.0);
}

TEST(MaskedBCE, MatchesBruteForceEntrySum) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = fixtures::random_model(4, 5, rng);
    auto x = fixtures::random_features(7, 5, trial % 2 == 0, rng);
    auto b = fixtures::random_multi_batch(x, 4, rng, 0.4);
    auto analytic = loss_gradient(LossKind::MaskedBCE, m, b).values;
    auto brute = fixtures::brute_force_masked_bce_gradient(m, b);
    for (std::size_t i = 0; i < analytic.size(); ++i) EXPECT_NEAR(analytic[i], brute[i], 1e-14);
  }
}

TEST(Losses, IncompatibleKindsAndEmptyBatchesFail) {
  LinearModel m(3, 2);
  Batch single(TaskKind::SingleLabel, 3), multi(TaskKind::MultiLabel, 3);
  EXPECT_THROW(loss_value(LossKind::CrossEntropy, m, single), Error);
  std::vector<SparseEntry> x{{0, 1.0}};
  single.push_single(x, 1);
  std::vector<std::int8_t> y{1, kIgnoreLabel, 0};
  multi.push_multi(x, y);
  EXPECT_THROW(loss_value(LossKind::F1Binary, m, single), Error);  // K != 2
  EXPECT_THROW(loss_value(LossKind::MaskedBCE, m, single), Error);
  EXPECT_THROW(loss_value(LossKind::CrossEntropy, m, multi), Error);
  EXPECT_THROW(loss_value(LossKind::BinaryCrossEntropy, m, multi), Error);  // ignore entry
  EXPECT_NO_THROW(loss_value(LossKind::MaskedBCE, m, multi));
}
