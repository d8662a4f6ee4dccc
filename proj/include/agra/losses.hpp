#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agra/dataset.hpp"
#include "agra/error.hpp"
#include "agra/model.hpp"
#include "agra/sparse.hpp"

namespace agra {

// Stabilizer added to every F1 denominator.
inline constexpr double kF1Epsilon = 1e-5;

enum class LossKind {
  CrossEntropy,
  BinaryCrossEntropy,
  F1Binary,
  F1MacroSingle,
  F1MacroMulti,
  MaskedBCE,
};

inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "cross_entropy";
    case LossKind::BinaryCrossEntropy: return "bce";
    case LossKind::F1Binary: return "f1_binary";
    case LossKind::F1MacroSingle: return "f1_macro";
    case LossKind::F1MacroMulti: return "f1_macro_multi";
    case LossKind::MaskedBCE: return "masked_bce";
  }
  return "unknown";
}

inline std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (auto kind : {LossKind::CrossEntropy, LossKind::BinaryCrossEntropy, LossKind::F1Binary,
                    LossKind::F1MacroSingle, LossKind::F1MacroMulti, LossKind::MaskedBCE})
    if (to_string(kind) == name) return kind;
  if (name == "ce") return LossKind::CrossEntropy;
  return std::nullopt;
}

// A minibatch of rows viewed from a Dataset. Multi-label entries may hold
// kIgnoreLabel, which only MaskedBCE accepts.
struct Batch {
  TaskKind task = TaskKind::SingleLabel;
  std::size_t n_classes = 0;
  std::vector<SparseRowView> xs;
  std::vector<int> labels;
  std::vector<std::int8_t> label_bits;
  std::vector<std::size_t> source_rows;

  Batch() = default;
  Batch(TaskKind t, std::size_t k) : task(t), n_classes(k) {}

  std::size_t size() const noexcept { return xs.size(); }
  bool empty() const noexcept { return xs.empty(); }

  void push_single(SparseRowView x, int y, std::size_t row = 0) {
    xs.push_back(x);
    labels.push_back(y);
    source_rows.push_back(row);
  }

  void push_multi(SparseRowView x, std::span<const std::int8_t> y, std::size_t row = 0) {
    require(y.size() == n_classes, ErrorCode::DimensionMismatch, "label vector length != K");
    xs.push_back(x);
    label_bits.insert(label_bits.end(), y.begin(), y.end());
    source_rows.push_back(row);
  }

  std::span<const std::int8_t> label_vector(std::size_t t) const {
    return std::span<const std::int8_t>(label_bits).subspan(t * n_classes, n_classes);
  }
  std::span<std::int8_t> label_vector(std::size_t t) {
    return std::span<std::int8_t>(label_bits).subspan(t * n_classes, n_classes);
  }

  bool has_ignored_entries() const {
    return std::find(label_bits.begin(), label_bits.end(), kIgnoreLabel) != label_bits.end();
  }

  // Singleton batch holding sample t (optionally with a replacement label).
  Batch singleton(std::size_t t, std::optional<int> label_override = std::nullopt) const {
    Batch out(task, n_classes);
    if (task == TaskKind::SingleLabel)
      out.push_single(xs[t], label_override.value_or(labels[t]), source_rows[t]);
    else
      out.push_multi(xs[t], label_vector(t), source_rows[t]);
    return out;
  }
};

inline Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows) {
  Batch batch(ds.task(), ds.n_classes());
  for (std::size_t r : rows) {
    if (ds.task() == TaskKind::SingleLabel)
      batch.push_single(ds.features.row(r), ds.noisy.class_of(r), r);
    else
      batch.push_multi(ds.features.row(r), ds.noisy.vector_of(r), r);
  }
  return batch;
}

namespace detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void check_compatible(LossKind kind, const Batch& batch) {
  require(!batch.empty(), ErrorCode::EmptyInput, "empty batch");
  const bool single = batch.task == TaskKind::SingleLabel;
  const std::string name(to_string(kind));
  switch (kind) {
    case LossKind::CrossEntropy:
    case LossKind::F1MacroSingle:
      require(single, ErrorCode::InvalidArgument, name + " requires a single-label task");
      break;
    case LossKind::F1Binary:
      require(single && batch.n_classes == 2, ErrorCode::InvalidArgument,
              name + " requires a binary single-label task");
      break;
    case LossKind::BinaryCrossEntropy:
    case LossKind::F1MacroMulti:
      require(!single, ErrorCode::InvalidArgument, name + " requires a multi-label task");
      require(!batch.has_ignored_entries(), ErrorCode::InvalidArgument,
              name + " does not accept ignored label entries");
      break;
    case LossKind::MaskedBCE:
      require(!single, ErrorCode::InvalidArgument, name + " requires a multi-label task");
      break;
  }
  if (single) {
    for (int y : batch.labels)
      require(y >= 0 && static_cast<std::size_t>(y) < batch.n_classes, ErrorCode::LabelOutOfRange,
              "batch label out of range");
  }
}

// Loss value plus dL/dlogits (M×K, row-major) when requested.
struct LossEvaluation {
  double value = 0.0;
  std::vector<double> dlogits;
};

// Soft F1 over the classes in `classes`, given probabilities and 0/1
// targets; fills dL/dprob when `dprob` is non-empty.
inline double soft_f1_loss(std::span<const double> prob, std::span<const double> target,
                           std::size_t m, std::size_t k, std::span<const std::size_t> classes,
                           std::span<double> dprob) {
  const double scale = 1.0 / static_cast<double>(classes.size());
  double mean_f1 = 0.0;
  for (std::size_t c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t t = 0; t < m; ++t) {
      const double p = prob[t * k + c], y = target[t * k + c];
      tp += p * y;
      fp += p * (1.0 - y);
      fn += (1.0 - p) * y;
    }
    const double denom = 2.0 * tp + fp + fn + kF1Epsilon;
    mean_f1 += scale * 2.0 * tp / denom;
    if (!dprob.empty())
      for (std::size_t t = 0; t < m; ++t)
        dprob[t * k + c] = -scale * (2.0 * target[t * k + c] / denom - 2.0 * tp / (denom * denom));
  }
  return 1.0 - mean_f1;
}

inline LossEvaluation evaluate_loss(LossKind kind, const LinearModel& model, const Batch& batch,
                                    bool want_gradient) {
  check_compatible(kind, batch);
  const std::size_t m = batch.size();
  const std::size_t k = model.n_classes();
  require(k == batch.n_classes, ErrorCode::DimensionMismatch, "model and batch disagree on K");

  std::vector<double> z(m * k);
  for (std::size_t t = 0; t < m; ++t) model.logits(batch.xs[t], std::span<double>(z).subspan(t * k, k));

  LossEvaluation out;
  if (want_gradient) out.dlogits.assign(m * k, 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);

  switch (kind) {
    case LossKind::CrossEntropy: {
      for (std::size_t t = 0; t < m; ++t) {
        const double* zt = &z[t * k];
        const double zmax = *std::max_element(zt, zt + k);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(zt[c] - zmax);
        const double log_norm = zmax + std::log(sum);
        const auto y = static_cast<std::size_t>(batch.labels[t]);
        out.value += log_norm - zt[y];
        if (want_gradient)
          for (std::size_t c = 0; c < k; ++c)
            out.dlogits[t * k + c] = (std::exp(zt[c] - log_norm) - (c == y ? 1.0 : 0.0)) * inv_m;
      }
      out.value /= static_cast<double>(m);
      break;
    }
    case LossKind::BinaryCrossEntropy:
    case LossKind::MaskedBCE: {
      // Per-class mean over retained entries; classes with none retained are
      // dropped from the average over classes.
      std::vector<std::size_t> retained(k, 0);
      for (std::size_t t = 0; t < m; ++t)
        for (std::size_t c = 0; c < k; ++c)
          if (batch.label_vector(t)[c] != kIgnoreLabel) ++retained[c];
      const auto active = static_cast<std::size_t>(
          std::count_if(retained.begin(), retained.end(), [](std::size_t r) { return r > 0; }));
      if (active == 0) break;
      for (std::size_t c = 0; c < k; ++c) {
        if (retained[c] == 0) continue;
        const double w = 1.0 / (static_cast<double>(active) * static_cast<double>(retained[c]));
        for (std::size_t t = 0; t < m; ++t) {
          const auto y = batch.label_vector(t)[c];
          if (y == kIgnoreLabel) continue;
          const double zc = z[t * k + c];
          out.value += w * (y ? softplus(-zc) : softplus(zc));
          if (want_gradient) out.dlogits[t * k + c] = w * (sigmoid(zc) - static_cast<double>(y));
        }
      }
      break;
    }
    case LossKind::F1Binary:
    case LossKind::F1MacroSingle: {
      std::vector<double> prob(m * k), target(m * k, 0.0);
      for (std::size_t t = 0; t < m; ++t) {
        const double* zt = &z[t * k];
        const double zmax = *std::max_element(zt, zt + k);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(zt[c] - zmax);
        for (std::size_t c = 0; c < k; ++c) prob[t * k + c] = std::exp(zt[c] - zmax) / sum;
        target[t * k + static_cast<std::size_t>(batch.labels[t])] = 1.0;
      }
      std::vector<std::size_t> classes;
      if (kind == LossKind::F1Binary)
        classes = {1};
      else
        for (std::size_t c = 0; c < k; ++c) classes.push_back(c);
      std::vector<double> dprob(want_gradient ? m * k : 0, 0.0);
      out.value = soft_f1_loss(prob, target, m, k, classes, dprob);
      if (want_gradient) {
        // softmax Jacobian: dz_j = p_j (a_j − Σ_c a_c p_c)
        for (std::size_t t = 0; t < m; ++t) {
          double dot = 0.0;
          for (std::size_t c = 0; c < k; ++c) dot += dprob[t * k + c] * prob[t * k + c];
          for (std::size_t c = 0; c < k; ++c)
            out.dlogits[t * k + c] = prob[t * k + c] * (dprob[t * k + c] - dot);
        }
      }
      break;
    }
    case LossKind::F1MacroMulti: {
      std::vector<double> prob(m * k), target(m * k);
      for (std::size_t i = 0; i < m * k; ++i) {
        prob[i] = sigmoid(z[i]);
        target[i] = static_cast<double>(batch.label_bits[i]);
      }
      std::vector<std::size_t> classes(k);
      for (std::size_t c = 0; c < k; ++c) classes[c] = c;
      std::vector<double> dprob(want_gradient ? m * k : 0, 0.0);
      out.value = soft_f1_loss(prob, target, m, k, classes, dprob);
      if (want_gradient)
        for (std::size_t i = 0; i < m * k; ++i) out.dlogits[i] = dprob[i] * prob[i] * (1.0 - prob[i]);
      break;
    }
  }
  return out;
}

// Accumulates dL/dlogits into parameter space: dW[k] = Σ_t G[t,k]·x_t,
// db[k] = Σ_t G[t,k].
inline FlatGradient backprop_linear(const LinearModel& model, const Batch& batch,
                                    std::span<const double> dlogits) {
  const std::size_t k = model.n_classes();
  const std::size_t d = model.n_features();
  FlatGradient grad(k, d);
  auto w = grad.weight_block();
  auto b = grad.bias_block();
  for (std::size_t t = 0; t < batch.size(); ++t) {
    for (std::size_t c = 0; c < k; ++c) {
      const double g = dlogits[t * k + c];
      if (g == 0.0) continue;
      b[c] += g;
      double* row = w.data() + c * d;
      for (const auto& e : batch.xs[t]) row[e.col] += g * e.value;
    }
  }
  return grad;
}

}  // namespace detail

inline double loss_value(LossKind kind, const LinearModel& model, const Batch& batch) {
  return detail::evaluate_loss(kind, model, batch, false).value;
}

// Exact gradient of loss_value with respect to every weight and bias.
inline FlatGradient loss_gradient(LossKind kind, const LinearModel& model, const Batch& batch) {
  auto eval = detail::evaluate_loss(kind, model, batch, true);
  return detail::backprop_linear(model, batch, eval.dlogits);
}

struct LossAndGradient {
  double value;
  FlatGradient gradient;
};

inline LossAndGradient loss_and_gradient(LossKind kind, const LinearModel& model, const Batch& batch) {
  auto eval = detail::evaluate_loss(kind, model, batch, true);
  return {eval.value, detail::backprop_linear(model, batch, eval.dlogits)};
}

}  // namespace agra
