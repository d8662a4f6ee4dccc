#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agra/adam.hpp"
#include "agra/audit.hpp"
#include "agra/dataset.hpp"
#include "agra/error.hpp"
#include "agra/filter.hpp"
#include "agra/losses.hpp"
#include "agra/metrics.hpp"
#include "agra/model.hpp"
#include "agra/parallel.hpp"
#include "agra/rng.hpp"
#include "agra/sampler.hpp"

namespace agra {

enum class Method { Agra, NoDenoising };

inline std::string_view to_string(Method m) { return m == Method::Agra ? "agra" : "none"; }

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 1e-2;
  double weight_decay = 0.0;
  LossKind comparison_loss = LossKind::CrossEntropy;
  LossKind update_loss = LossKind::CrossEntropy;
  SamplerMode sampler_mode = SamplerMode::Uniform;
  std::optional<int> alternative_label;
  bool exclude_bias = true;
  Method method = Method::Agra;
  std::string selection_metric = "accuracy";
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: AGRA_THREADS or 1
  bool log_decisions = false;
};

inline bool loss_fits_task(LossKind kind, TaskKind task, std::size_t n_classes) {
  switch (kind) {
    case LossKind::CrossEntropy:
    case LossKind::F1MacroSingle: return task == TaskKind::SingleLabel;
    case LossKind::F1Binary: return task == TaskKind::SingleLabel && n_classes == 2;
    case LossKind::BinaryCrossEntropy:
    case LossKind::F1MacroMulti:
    case LossKind::MaskedBCE: return task == TaskKind::MultiLabel;
  }
  return false;
}

inline std::vector<std::string> selection_metrics_for(TaskKind task, std::size_t n_classes) {
  if (task == TaskKind::MultiLabel) return {"auroc_macro", "f1_macro"};
  if (n_classes == 2) return {"accuracy", "f1_macro", "f1_binary"};
  return {"accuracy", "f1_macro"};
}

inline void validate_config(const TrainConfig& cfg, TaskKind task, std::size_t n_classes) {
  require(cfg.batch_size >= 1, ErrorCode::Config, "batch_size must be >= 1");
  require(cfg.lr > 0 && std::isfinite(cfg.lr), ErrorCode::Config, "lr must be > 0");
  require(cfg.weight_decay >= 0 && std::isfinite(cfg.weight_decay), ErrorCode::Config,
          "weight_decay must be >= 0");
  require(loss_fits_task(cfg.update_loss, task, n_classes), ErrorCode::Config,
          "update_loss " + std::string(to_string(cfg.update_loss)) + " does not fit the task");
  if (task == TaskKind::MultiLabel)
    require(cfg.update_loss == LossKind::MaskedBCE || cfg.update_loss == LossKind::BinaryCrossEntropy,
            ErrorCode::Config, "multi-label update_loss must be masked_bce");
  if (cfg.method == Method::Agra) {
    require(loss_fits_task(cfg.comparison_loss, task, n_classes) && cfg.comparison_loss != LossKind::MaskedBCE,
            ErrorCode::Config,
            "comparison_loss " + std::string(to_string(cfg.comparison_loss)) + " does not fit the task");
  }
  if (cfg.alternative_label) {
    require(task == TaskKind::SingleLabel, ErrorCode::Config, "alternative_label requires a single-label task");
    require(cfg.method == Method::Agra, ErrorCode::Config, "alternative_label requires method agra");
    require(*cfg.alternative_label >= 0 && static_cast<std::size_t>(*cfg.alternative_label) < n_classes,
            ErrorCode::Config, "alternative_label out of range");
  }
  if (cfg.sampler_mode == SamplerMode::ClassWeighted)
    require(task == TaskKind::SingleLabel, ErrorCode::Config, "weighted sampling requires a single-label task");
  const auto allowed = selection_metrics_for(task, n_classes);
  require(std::find(allowed.begin(), allowed.end(), cfg.selection_metric) != allowed.end(), ErrorCode::Config,
          "selection_metric '" + cfg.selection_metric + "' is not valid for this task");
}

// Task-appropriate metrics against the dataset's reference labels: argmax
// predictions for single-label (lowest index wins ties), sigmoid scores for
// multi-label (positive at p >= 0.5 for F1).
inline EvalReport evaluate(const LinearModel& model, const Dataset& ds) {
  require(model.n_features() == ds.n_features() && model.n_classes() == ds.n_classes(),
          ErrorCode::DimensionMismatch,
          "model is " + std::to_string(model.n_classes()) + "x" + std::to_string(model.n_features()) +
              ", dataset has K=" + std::to_string(ds.n_classes()) + " D=" + std::to_string(ds.n_features()));
  require(ds.n_rows() > 0, ErrorCode::EmptyInput, "evaluation set is empty");
  const std::size_t k = ds.n_classes();
  const Labels& ref = ds.reference_labels();
  EvalReport report;
  report.n = ds.n_rows();
  std::vector<double> z(k);
  if (ds.task() == TaskKind::SingleLabel) {
    std::vector<int> preds(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      model.logits(ds.features.row(i), z);
      preds[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    }
    report.metrics["accuracy"] = accuracy(preds, ref.classes);
    auto f1 = per_class_f1(preds, ref.classes, k);
    report.metrics["f1_macro"] = std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(k);
    if (k == 2) report.metrics["f1_binary"] = f1[1];
    report.per_class["f1"] = std::move(f1);
  } else {
    std::vector<double> scores(ds.n_rows() * k);
    std::vector<std::int8_t> preds(ds.n_rows() * k);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      model.logits(ds.features.row(i), z);
      for (std::size_t c = 0; c < k; ++c) {
        scores[i * k + c] = detail::sigmoid(z[c]);
        preds[i * k + c] = scores[i * k + c] >= 0.5 ? 1 : 0;
      }
    }
    auto f1 = per_class_f1_multilabel(preds, ref.bits, k);
    report.metrics["f1_macro"] = std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(k);
    report.per_class["f1"] = std::move(f1);
    if (ds.n_rows() >= 2) {
      try {
        auto auc = macro_auroc(scores, ref.bits, k);
        report.metrics["auroc_macro"] = auc.macro;
        report.per_class["auroc"] = std::move(auc.per_class);
      } catch (const Error&) {
        // no includable class; AUROC is left out of the report
      }
    }
  }
  return report;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();  // mean over executed updates
  std::size_t n_updates = 0;
  std::size_t n_skipped = 0;  // batches left empty by filtering
  std::size_t n_processed = 0;
  std::size_t n_removed = 0;
  std::size_t n_relabeled = 0;
  std::size_t n_masked_entries = 0;
  EvalReport dev;
  double selection_value = 0.0;
};

struct DecisionLogRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t sample_index = 0;
  SimilarityScore sim_y;
  std::optional<SimilarityScore> sim_alt;
  std::string decision;
};

struct TrainResult {
  LinearModel model;  // best dev snapshot
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
  std::vector<AuditRecord> audit;
  std::vector<DecisionLogRow> decisions;
  std::uint64_t comparison_draws = 0;
};

namespace detail {

inline void audit_single(AuditRecord& rec, const Dataset& train, const Batch& batch,
                         const std::vector<SampleOutcome>* outcomes) {
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const std::size_t row = batch.source_rows[t];
    const int gold = train.gold->class_of(row);
    const bool correct = batch.labels[t] == gold;
    const auto kind = outcomes ? (*outcomes)[t].decision.kind : DecisionKind::Keep;
    switch (kind) {
      case DecisionKind::Keep: ++(correct ? rec.correct_kept : rec.mislabeled_kept); break;
      case DecisionKind::Remove: ++(correct ? rec.correct_removed : rec.mislabeled_removed); break;
      case DecisionKind::Relabel:
        ++((*outcomes)[t].decision.new_label == gold ? rec.relabeled_to_gold : rec.relabeled_away);
        break;
    }
  }
}

inline void audit_multi(AuditRecord& rec, const Dataset& train, const Batch& batch,
                        const std::vector<std::int8_t>* keep_mask) {
  const std::size_t k = batch.n_classes;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    auto gold = train.gold->vector_of(batch.source_rows[t]);
    auto noisy = batch.label_vector(t);
    for (std::size_t c = 0; c < k; ++c) {
      const bool correct = noisy[c] == gold[c];
      const bool kept = keep_mask == nullptr || (*keep_mask)[t * k + c] == 1;
      if (kept)
        ++(correct ? rec.correct_kept : rec.mislabeled_kept);
      else
        ++(correct ? rec.correct_removed : rec.mislabeled_removed);
    }
  }
}

}  // namespace detail

// Epoch loop: seeded reshuffle, per-batch comparison sampling and filtering
// (Agra), an Adam step on the survivors, and dev evaluation after every
// epoch. Returns the snapshot with the best dev value (earliest on ties).
inline TrainResult train(const Dataset& train_set, const Dataset& dev, const TrainConfig& cfg) {
  train_set.validate();
  dev.validate();
  require(train_set.n_rows() > 0, ErrorCode::EmptyInput, "training set is empty");
  require(dev.n_rows() > 0, ErrorCode::EmptyInput, "dev set is empty");
  require(train_set.n_features() == dev.n_features(), ErrorCode::DimensionMismatch,
          "train and dev feature dimensions differ");
  require(train_set.n_classes() == dev.n_classes() && train_set.task() == dev.task(),
          ErrorCode::DimensionMismatch, "train and dev label spaces differ");
  validate_config(cfg, train_set.task(), train_set.n_classes());

  const TaskKind task = train_set.task();
  const std::size_t threads = resolve_thread_count(cfg.threads);
  const bool agra = cfg.method == Method::Agra;
  const bool audit = train_set.gold.has_value();
  const LossKind update_loss =
      task == TaskKind::MultiLabel ? LossKind::MaskedBCE : cfg.update_loss;

  LinearModel model(train_set.n_classes(), train_set.n_features());
  AdamState optimizer(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}, model.n_params());
  TrainResult result;
  result.model = model;
  if (cfg.epochs == 0) return result;

  Rng shuffle_rng(cfg.seed, Stream::Shuffle);
  Rng comparison_rng(cfg.seed, Stream::Comparison);
  std::optional<ComparisonSampler> sampler;
  if (agra) sampler.emplace(train_set, cfg.sampler_mode);
  const FilterConfig filter_cfg{cfg.comparison_loss, cfg.alternative_label, cfg.exclude_bias, threads};

  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_set.n_rows());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    double loss_sum = 0.0;
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, shuffle_rng);

    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      ++batch_index;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Batch batch = make_batch(train_set, rows);
      record.n_processed += batch.size();

      Batch update = batch;
      bool has_signal = true;
      AuditRecord rec{epoch, batch_index};
      if (agra) {
        const Batch comparison = sampler->sample(batch.size(), comparison_rng);
        if (task == TaskKind::SingleLabel) {
          auto filtered = filter_batch_single(model, batch, comparison, filter_cfg);
          for (std::size_t t = 0; t < batch.size(); ++t) {
            const auto& out = filtered.outcomes[t];
            record.n_removed += out.decision.kind == DecisionKind::Remove;
            record.n_relabeled += out.decision.kind == DecisionKind::Relabel;
            if (cfg.log_decisions)
              result.decisions.push_back(
                  {epoch, batch_index, batch.source_rows[t], out.sim_y, out.sim_alt, to_string(out.decision)});
          }
          if (audit) detail::audit_single(rec, train_set, batch, &filtered.outcomes);
          update = std::move(filtered.filtered);
          has_signal = !update.empty();
        } else {
          auto filtered = filter_batch_multi(model, batch, comparison, filter_cfg);
          record.n_masked_entries += filtered.n_masked();
          if (cfg.log_decisions)
            for (std::size_t t = 0; t < batch.size(); ++t)
              for (std::size_t c = 0; c < batch.n_classes; ++c)
                result.decisions.push_back({epoch, batch_index, batch.source_rows[t],
                                            filtered.similarities[t * batch.n_classes + c], std::nullopt,
                                            (filtered.keep_mask[t * batch.n_classes + c] ? "keep:" : "mask:") +
                                                std::to_string(c)});
          if (audit) detail::audit_multi(rec, train_set, batch, &filtered.keep_mask);
          has_signal = filtered.n_masked() < filtered.keep_mask.size();
          update = std::move(filtered.masked);
        }
      } else if (audit) {
        if (task == TaskKind::SingleLabel)
          detail::audit_single(rec, train_set, batch, nullptr);
        else
          detail::audit_multi(rec, train_set, batch, nullptr);
      }
      if (audit) result.audit.push_back(rec);

      if (!has_signal) {
        ++record.n_skipped;
        continue;
      }
      auto [loss, grad] = loss_and_gradient(update_loss, model, update);
      if (!std::isfinite(loss))
        throw Error(ErrorCode::NonFinite, "non-finite training loss at epoch " + std::to_string(epoch) +
                                              ", batch " + std::to_string(batch_index));
      adam_step(model, optimizer, grad);
      loss_sum += loss;
      ++record.n_updates;
    }
    if (record.n_updates > 0) record.train_loss = loss_sum / static_cast<double>(record.n_updates);

    record.dev = evaluate(model, dev);
    auto metric = record.dev.metrics.find(cfg.selection_metric);
    record.selection_value = metric != record.dev.metrics.end() ? metric->second
                                                                : -std::numeric_limits<double>::infinity();
    if (record.selection_value > best_value) {
      best_value = record.selection_value;
      result.model = model;
      result.best_epoch = epoch;
    }
    result.history.push_back(std::move(record));
  }
  result.comparison_draws = comparison_rng.draws();
  return result;
}

inline nlohmann::ordered_json history_to_json(const TrainResult& result, const TrainConfig& cfg) {
  auto real_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(cfg.method));
  j["selection_metric"] = cfg.selection_metric;
  j["best_epoch"] = result.best_epoch;
  auto epochs = nlohmann::ordered_json::array();
  for (const auto& r : result.history) {
    nlohmann::ordered_json e;
    e["epoch"] = r.epoch;
    e["train_loss"] = real_or_null(r.train_loss);
    e["n_updates"] = r.n_updates;
    e["n_skipped"] = r.n_skipped;
    e["n_processed"] = r.n_processed;
    e["n_removed"] = r.n_removed;
    e["n_relabeled"] = r.n_relabeled;
    e["n_masked_entries"] = r.n_masked_entries;
    e["selection_value"] = real_or_null(r.selection_value);
    e["dev"] = r.dev.to_json();
    epochs.push_back(std::move(e));
  }
  j["epochs"] = std::move(epochs);
  return j;
}

inline std::string format_decisions_csv(const std::vector<DecisionLogRow>& rows) {
  std::string out = "epoch,batch,sample_index,sim_y,sim_alt,decision\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.batch) + "," + std::to_string(r.sample_index) + "," +
           r.sim_y.to_string() + "," + (r.sim_alt ? r.sim_alt->to_string() : std::string()) + "," + r.decision +
           "\n";
  }
  return out;
}

}  // namespace agra
