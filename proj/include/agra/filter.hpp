#pragma once

#include <optional>
#include <vector>

#include "agra/error.hpp"
#include "agra/losses.hpp"
#include "agra/model.hpp"
#include "agra/parallel.hpp"
#include "agra/similarity.hpp"

namespace agra {

struct FilterConfig {
  LossKind comparison_loss = LossKind::CrossEntropy;
  std::optional<int> alternative_label;
  bool exclude_bias = true;
  std::size_t threads = 1;
};

struct SampleOutcome {
  BatchDecision decision;
  SimilarityScore sim_y;
  std::optional<SimilarityScore> sim_alt;
};

struct SingleFilterResult {
  Batch filtered;  // survivors in original order, relabels applied
  std::vector<SampleOutcome> outcomes;
};

// Single-label filtering step: one comparison gradient, then a singleton
// gradient per sample under its label (and under the alternative label when
// configured), compared by cosine similarity.
inline SingleFilterResult filter_batch_single(const LinearModel& model, const Batch& batch,
                                              const Batch& comparison, const FilterConfig& cfg) {
  require(batch.task == TaskKind::SingleLabel, ErrorCode::InvalidArgument,
          "filter_batch_single needs a single-label batch");
  if (cfg.alternative_label)
    require(*cfg.alternative_label >= 0 &&
                static_cast<std::size_t>(*cfg.alternative_label) < batch.n_classes,
            ErrorCode::InvalidArgument, "alternative label out of range");

  const FlatGradient g_com = loss_gradient(cfg.comparison_loss, model, comparison);
  std::vector<SampleOutcome> outcomes(batch.size());
  parallel_for(batch.size(), cfg.threads, [&](std::size_t t) {
    const auto g = loss_gradient(cfg.comparison_loss, model, batch.singleton(t));
    SampleOutcome& out = outcomes[t];
    out.sim_y = similarity(g, g_com, cfg.exclude_bias);
    if (cfg.alternative_label) {
      const auto g_alt = loss_gradient(cfg.comparison_loss, model, batch.singleton(t, *cfg.alternative_label));
      out.sim_alt = similarity(g_alt, g_com, cfg.exclude_bias);
      out.decision = decide_single_alt(out.sim_y, *out.sim_alt, *cfg.alternative_label);
    } else {
      out.decision = decide_single(out.sim_y);
    }
  });

  SingleFilterResult result{Batch(batch.task, batch.n_classes), std::move(outcomes)};
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& d = result.outcomes[t].decision;
    if (d.kind == DecisionKind::Keep)
      result.filtered.push_single(batch.xs[t], batch.labels[t], batch.source_rows[t]);
    else if (d.kind == DecisionKind::Relabel)
      result.filtered.push_single(batch.xs[t], d.new_label, batch.source_rows[t]);
  }
  return result;
}

struct MultiFilterResult {
  Batch masked;                               // ignored entries hold kIgnoreLabel
  std::vector<std::int8_t> keep_mask;         // M×K, 1 = entry retained
  std::vector<SimilarityScore> similarities;  // M×K per-class scores

  std::size_t n_masked() const {
    return static_cast<std::size_t>(std::count(keep_mask.begin(), keep_mask.end(), std::int8_t{0}));
  }
};

// Multi-label filtering: per-class similarity between the class slices of
// each singleton gradient and the comparison gradient; entries with a
// non-positive or undefined score are ignored in the update.
inline MultiFilterResult filter_batch_multi(const LinearModel& model, const Batch& batch,
                                            const Batch& comparison, const FilterConfig& cfg) {
  require(batch.task == TaskKind::MultiLabel, ErrorCode::InvalidArgument,
          "filter_batch_multi needs a multi-label batch");
  require(cfg.comparison_loss == LossKind::BinaryCrossEntropy ||
              cfg.comparison_loss == LossKind::F1MacroMulti,
          ErrorCode::InvalidArgument, "multi-label comparison loss must be bce or f1_macro_multi");
  require(!cfg.alternative_label, ErrorCode::InvalidArgument,
          "alternative labels are single-label only");

  const std::size_t k = batch.n_classes;
  const FlatGradient g_com = loss_gradient(cfg.comparison_loss, model, comparison);
  MultiFilterResult result{batch, std::vector<std::int8_t>(batch.size() * k, 1),
                           std::vector<SimilarityScore>(batch.size() * k)};
  parallel_for(batch.size(), cfg.threads, [&](std::size_t t) {
    const auto g = loss_gradient(cfg.comparison_loss, model, batch.singleton(t));
    auto labels = result.masked.label_vector(t);
    for (std::size_t c = 0; c < k; ++c) {
      const auto sim = class_similarity(g, g_com, c, cfg.exclude_bias);
      result.similarities[t * k + c] = sim;
      if (!sim.positive()) {
        result.keep_mask[t * k + c] = 0;
        labels[c] = kIgnoreLabel;
      }
    }
  });
  return result;
}

}  // namespace agra
