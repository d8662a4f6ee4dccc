#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "agra/error.hpp"
#include "agra/losses.hpp"
#include "agra/text_format.hpp"
#include "agra/trainer.hpp"

namespace agra {

// Experiment file: TrainConfig keys plus the data and output directories.
// Loss names and the selection metric stay symbolic until the task is known
// ("f1" picks the F1 variant that fits the task).
struct ExperimentConfig {
  std::string train_dir;
  std::string dev_dir;
  std::string test_dir;
  std::string out_dir;

  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 1e-2;
  double weight_decay = 0.0;
  std::string comparison_loss = "cross_entropy";
  std::optional<std::string> update_loss;
  std::string sampler_mode = "uniform";
  std::optional<int> alternative_label;
  bool exclude_bias = true;
  std::string method = "agra";
  std::optional<std::string> selection_metric;
  std::uint64_t seed = 0;
  bool log_decisions = false;
};

inline LossKind resolve_loss_name(const std::string& name, TaskKind task, std::size_t n_classes) {
  if (name == "f1") {
    if (task == TaskKind::MultiLabel) return LossKind::F1MacroMulti;
    return n_classes == 2 ? LossKind::F1Binary : LossKind::F1MacroSingle;
  }
  if (name == "bce" && task == TaskKind::MultiLabel) return LossKind::BinaryCrossEntropy;
  if (auto kind = parse_loss_kind(name)) return *kind;
  throw Error(ErrorCode::Config, "unknown loss '" + name + "'");
}

inline Method parse_method(const std::string& name) {
  if (name == "agra") return Method::Agra;
  if (name == "none" || name == "no_denoising") return Method::NoDenoising;
  throw Error(ErrorCode::Config, "unknown method '" + name + "' (expected agra|none)");
}

inline SamplerMode parse_sampler_mode(const std::string& name) {
  if (name == "uniform") return SamplerMode::Uniform;
  if (name == "class_weighted" || name == "weighted") return SamplerMode::ClassWeighted;
  throw Error(ErrorCode::Config, "unknown sampler_mode '" + name + "' (expected uniform|class_weighted)");
}

inline ExperimentConfig parse_experiment_config(const std::string& content) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::Config, "config must be a JSON object");
  static const std::set<std::string> known = {
      "train_dir", "dev_dir", "test_dir", "out_dir", "epochs", "batch_size", "lr", "weight_decay",
      "comparison_loss", "update_loss", "sampler_mode", "alternative_label", "exclude_bias", "method",
      "selection_metric", "seed", "log_decisions"};
  for (const auto& [key, value] : j.items())
    require(known.count(key) > 0, ErrorCode::Config, "unknown config key '" + key + "'");

  ExperimentConfig cfg;
  try {
    cfg.train_dir = j.at("train_dir").get<std::string>();
    cfg.dev_dir = j.at("dev_dir").get<std::string>();
    cfg.test_dir = j.at("test_dir").get<std::string>();
    cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
    if (j.contains("weight_decay")) cfg.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("comparison_loss")) cfg.comparison_loss = j["comparison_loss"].get<std::string>();
    if (j.contains("update_loss")) cfg.update_loss = j["update_loss"].get<std::string>();
    if (j.contains("sampler_mode")) cfg.sampler_mode = j["sampler_mode"].get<std::string>();
    if (j.contains("alternative_label") && !j["alternative_label"].is_null())
      cfg.alternative_label = j["alternative_label"].get<int>();
    if (j.contains("exclude_bias")) cfg.exclude_bias = j["exclude_bias"].get<bool>();
    if (j.contains("method")) cfg.method = j["method"].get<std::string>();
    if (j.contains("selection_metric")) cfg.selection_metric = j["selection_metric"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("log_decisions")) cfg.log_decisions = j["log_decisions"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: ") + e.what());
  }
  for (const auto* dir : {&cfg.train_dir, &cfg.dev_dir, &cfg.test_dir})
    require(std::filesystem::is_directory(*dir), ErrorCode::Config, "config path does not exist: " + *dir);
  parse_method(cfg.method);
  parse_sampler_mode(cfg.sampler_mode);
  return cfg;
}

inline TrainConfig to_train_config(const ExperimentConfig& cfg, TaskKind task, std::size_t n_classes) {
  TrainConfig out;
  out.epochs = cfg.epochs;
  out.batch_size = cfg.batch_size;
  out.lr = cfg.lr;
  out.weight_decay = cfg.weight_decay;
  out.comparison_loss = resolve_loss_name(cfg.comparison_loss, task, n_classes);
  out.update_loss = cfg.update_loss ? resolve_loss_name(*cfg.update_loss, task, n_classes)
                                    : (task == TaskKind::SingleLabel ? LossKind::CrossEntropy : LossKind::MaskedBCE);
  out.sampler_mode = parse_sampler_mode(cfg.sampler_mode);
  out.alternative_label = cfg.alternative_label;
  out.exclude_bias = cfg.exclude_bias;
  out.method = parse_method(cfg.method);
  out.selection_metric = cfg.selection_metric.value_or(task == TaskKind::SingleLabel ? "accuracy" : "auroc_macro");
  out.seed = cfg.seed;
  out.log_decisions = cfg.log_decisions;
  validate_config(out, task, n_classes);
  return out;
}

}  // namespace agra
