#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "agra/error.hpp"
#include "agra/model.hpp"
#include "agra/text_format.hpp"

namespace agra {

// Cosine similarity, undefined when either vector has zero norm.
class SimilarityScore {
 public:
  SimilarityScore() = default;
  explicit SimilarityScore(double value) : value_(value) {}
  static SimilarityScore undefined() { return SimilarityScore(); }

  bool defined() const noexcept { return value_.has_value(); }
  double value() const { return value_.value(); }

  // Undefined orders below every defined score.
  double ordering_key() const noexcept {
    return value_ ? *value_ : -std::numeric_limits<double>::infinity();
  }
  bool positive() const noexcept { return value_ && *value_ > 0.0; }

  std::string to_string() const { return value_ ? text::format_real(*value_) : "undefined"; }

  friend bool operator==(const SimilarityScore&, const SimilarityScore&) = default;

 private:
  std::optional<double> value_;
};

inline SimilarityScore cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "similarity of unequal lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return SimilarityScore::undefined();
  return SimilarityScore(dot / (std::sqrt(na) * std::sqrt(nb)));
}

// Cosine between a per-sample gradient and the comparison gradient. With
// `exclude_bias` only the weight blocks are compared.
inline SimilarityScore similarity(const FlatGradient& g, const FlatGradient& g_com,
                                  bool exclude_bias = true) {
  require(g.same_layout(g_com), ErrorCode::DimensionMismatch, "gradient layouts differ");
  if (exclude_bias) return cosine_similarity(g.weight_block(), g_com.weight_block());
  return cosine_similarity(g.values, g_com.values);
}

// Per-class similarity on the class-k slices (weight row, plus the bias entry
// when `exclude_bias` is off).
inline SimilarityScore class_similarity(const FlatGradient& g, const FlatGradient& g_com, std::size_t k,
                                        bool exclude_bias = true) {
  require(g.same_layout(g_com), ErrorCode::DimensionMismatch, "gradient layouts differ");
  require(k < g.n_classes, ErrorCode::InvalidArgument, "class index out of range");
  if (exclude_bias) return cosine_similarity(g.class_weights(k), g_com.class_weights(k));
  return cosine_similarity(g.slice(k), g_com.slice(k));
}

enum class DecisionKind { Keep, Remove, Relabel };

struct BatchDecision {
  DecisionKind kind = DecisionKind::Keep;
  int new_label = -1;  // set for Relabel

  static BatchDecision keep() { return {DecisionKind::Keep, -1}; }
  static BatchDecision remove() { return {DecisionKind::Remove, -1}; }
  static BatchDecision relabel(int y) { return {DecisionKind::Relabel, y}; }

  friend bool operator==(const BatchDecision&, const BatchDecision&) = default;
};

inline std::string to_string(const BatchDecision& d) {
  switch (d.kind) {
    case DecisionKind::Keep: return "keep";
    case DecisionKind::Remove: return "remove";
    case DecisionKind::Relabel: return "relabel:" + std::to_string(d.new_label);
  }
  return "unknown";
}

// Without an alternative label: remove iff the score is non-positive or
// undefined.
inline BatchDecision decide_single(const SimilarityScore& sim_y) {
  return sim_y.positive() ? BatchDecision::keep() : BatchDecision::remove();
}

// With alternative label `alt`: remove when neither score is positive,
// relabel when the alternative is positive and strictly higher, keep
// otherwise (ties keep the original label).
inline BatchDecision decide_single_alt(const SimilarityScore& sim_y, const SimilarityScore& sim_alt,
                                       int alt) {
  if (!sim_y.positive() && !sim_alt.positive()) return BatchDecision::remove();
  if (sim_alt.positive() && sim_alt.ordering_key() > sim_y.ordering_key())
    return BatchDecision::relabel(alt);
  return BatchDecision::keep();
}

}  // namespace agra
