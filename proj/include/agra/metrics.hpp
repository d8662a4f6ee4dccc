#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "agra/error.hpp"

namespace agra {

inline double accuracy(std::span<const int> preds, std::span<const int> golds) {
  require(preds.size() == golds.size(), ErrorCode::DimensionMismatch, "accuracy: length mismatch");
  require(!preds.empty(), ErrorCode::EmptyInput, "accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

// F1 from confusion counts; 0 when the denominator is zero.
inline double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline std::vector<double> per_class_f1(std::span<const int> preds, std::span<const int> golds,
                                        std::size_t n_classes) {
  require(preds.size() == golds.size(), ErrorCode::DimensionMismatch, "f1: length mismatch");
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i] >= 0 && static_cast<std::size_t>(preds[i]) < n_classes && golds[i] >= 0 &&
                static_cast<std::size_t>(golds[i]) < n_classes,
            ErrorCode::LabelOutOfRange, "f1: label out of range");
    const auto p = static_cast<std::size_t>(preds[i]);
    const auto g = static_cast<std::size_t>(golds[i]);
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  std::vector<double> out(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k) out[k] = f1_from_counts(tp[k], fp[k], fn[k]);
  return out;
}

enum class F1Average { BinaryPositive, Macro };

// BinaryPositive reports the F1 of class 1 and requires K = 2.
inline double f1_scores(std::span<const int> preds, std::span<const int> golds, std::size_t n_classes,
                        F1Average average) {
  require(!preds.empty(), ErrorCode::EmptyInput, "f1: empty input");
  if (average == F1Average::BinaryPositive)
    require(n_classes == 2, ErrorCode::InvalidArgument, "binary F1 requires K = 2");
  const auto per_class = per_class_f1(preds, golds, n_classes);
  if (average == F1Average::BinaryPositive) return per_class[1];
  return std::accumulate(per_class.begin(), per_class.end(), 0.0) / static_cast<double>(n_classes);
}

// Per-class F1 for multi-label predictions given as M×K 0/1 matrices.
inline std::vector<double> per_class_f1_multilabel(std::span<const std::int8_t> preds,
                                                   std::span<const std::int8_t> golds,
                                                   std::size_t n_classes) {
  require(preds.size() == golds.size() && preds.size() % n_classes == 0, ErrorCode::DimensionMismatch,
          "f1: shape mismatch");
  std::vector<double> out(n_classes);
  const std::size_t m = preds.size() / n_classes;
  for (std::size_t k = 0; k < n_classes; ++k) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t t = 0; t < m; ++t) {
      const bool p = preds[t * n_classes + k] == 1, g = golds[t * n_classes + k] == 1;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    out[k] = f1_from_counts(tp, fp, fn);
  }
  return out;
}

// Mann-Whitney estimate of P(score_pos > score_neg) + ½ P(tie), via
// average ranks. Returns nullopt when either class is empty.
inline std::optional<double> binary_auroc(std::span<const double> scores, std::span<const std::int8_t> positive) {
  require(scores.size() == positive.size(), ErrorCode::DimensionMismatch, "auroc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t r = i; r < j; ++r)
      if (positive[order[r]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

struct AurocResult {
  double macro = 0.0;
  std::vector<double> per_class;  // NaN for excluded classes
  std::size_t n_included = 0;
};

// Macro AUROC over classes with at least `min_positives` positives and at
// least one negative. scores and golds are M×K row-major.
inline AurocResult macro_auroc(std::span<const double> scores, std::span<const std::int8_t> golds,
                               std::size_t n_classes, std::size_t min_positives = 2) {
  require(n_classes >= 1 && scores.size() == golds.size() && scores.size() % n_classes == 0,
          ErrorCode::DimensionMismatch, "auroc: shape mismatch");
  const std::size_t m = scores.size() / n_classes;
  require(m >= 2, ErrorCode::EmptyInput, "auroc needs at least 2 rows");
  AurocResult result;
  result.per_class.assign(n_classes, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::vector<double> col(m);
  std::vector<std::int8_t> pos(m);
  for (std::size_t k = 0; k < n_classes; ++k) {
    std::size_t n_pos = 0;
    for (std::size_t t = 0; t < m; ++t) {
      col[t] = scores[t * n_classes + k];
      pos[t] = golds[t * n_classes + k] == 1 ? 1 : 0;
      n_pos += pos[t];
    }
    if (n_pos < min_positives || n_pos == m) continue;
    const double auc = *binary_auroc(col, pos);
    result.per_class[k] = auc;
    sum += auc;
    ++result.n_included;
  }
  require(result.n_included > 0, ErrorCode::InvalidArgument, "auroc: no class has enough positives and negatives");
  result.macro = sum / static_cast<double>(result.n_included);
  return result;
}

struct EvalReport {
  std::map<std::string, double> metrics;
  std::map<std::string, std::vector<double>> per_class;
  std::size_t n = 0;

  double at(const std::string& name) const {
    auto it = metrics.find(name);
    require(it != metrics.end(), ErrorCode::InvalidArgument, "metric '" + name + "' not in report");
    return it->second;
  }

  // {"metric": value, ..., "per_class": {...}, "n": M}; excluded classes are null.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    for (const auto& [name, value] : metrics) j[name] = value;
    nlohmann::ordered_json pc = nlohmann::ordered_json::object();
    for (const auto& [name, values] : per_class) {
      auto arr = nlohmann::ordered_json::array();
      for (double v : values) arr.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
      pc[name] = arr;
    }
    j["per_class"] = pc;
    j["n"] = n;
    return j;
  }
};

}  // namespace agra
