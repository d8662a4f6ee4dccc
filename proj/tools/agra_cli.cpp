// agra: command-line front end for featurization, noise injection, splitting,
// training with gradient-similarity filtering, evaluation and audit reports.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "agra/agra.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Errors raised before any work starts are usage errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_usage_code(agra::ErrorCode code) {
  return code == agra::ErrorCode::Config || code == agra::ErrorCode::InvalidArgument;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ---- featurize -----------------------------------------------------------

struct FeaturizeArgs {
  std::string input;
  std::string out;
  std::size_t vocab_cap = 0;
  std::string vocab_file;
  std::size_t n_classes = 0;
  std::string class_names;
};

struct JsonlCorpus {
  std::vector<std::string> texts;
  std::vector<nlohmann::json> labels;
  std::vector<nlohmann::json> noisy_labels;
};

JsonlCorpus read_jsonl(const std::string& path) {
  JsonlCorpus corpus;
  const auto content = agra::text::read_file(path);
  const auto lines = agra::text::split_lines(content);
  std::size_t n_noisy = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
      corpus.texts.push_back(j.at("text").get<std::string>());
      corpus.labels.push_back(j.at("label"));
    } catch (const nlohmann::json::exception& e) {
      throw agra::Error(agra::ErrorCode::Parse,
                        path + ": line " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
    if (j.contains("noisy_label")) {
      corpus.noisy_labels.push_back(j["noisy_label"]);
      ++n_noisy;
    } else {
      corpus.noisy_labels.push_back(nullptr);
    }
  }
  if (n_noisy != 0 && n_noisy != corpus.texts.size())
    throw agra::Error(agra::ErrorCode::Parse, path + ": noisy_label must be present on every line or none");
  if (n_noisy == 0) corpus.noisy_labels.clear();
  return corpus;
}

struct LabelCoding {
  agra::TaskKind task = agra::TaskKind::SingleLabel;
  std::size_t n_classes = 0;
  std::vector<std::string> names;
};

LabelCoding infer_coding(const std::vector<nlohmann::json>& labels, const FeaturizeArgs& args) {
  LabelCoding coding;
  if (!args.class_names.empty()) coding.names = split_commas(args.class_names);
  const auto& first = labels.front();
  if (first.is_array()) {
    coding.task = agra::TaskKind::MultiLabel;
    coding.n_classes = first.size();
  } else if (first.is_number_integer()) {
    int max_label = 1;
    for (const auto& l : labels)
      if (l.is_number_integer()) max_label = std::max(max_label, l.get<int>());
    coding.n_classes = std::max<std::size_t>(args.n_classes, static_cast<std::size_t>(max_label) + 1);
  } else if (first.is_string() && coding.names.empty()) {
    std::set<std::string> names;
    for (const auto& l : labels)
      if (l.is_string()) names.insert(l.get<std::string>());
    coding.names.assign(names.begin(), names.end());
  }
  if (!coding.names.empty()) {
    if (coding.n_classes == 0) coding.n_classes = coding.names.size();
    if (coding.names.size() != coding.n_classes)
      throw agra::Error(agra::ErrorCode::Config, "--class-names does not match the number of classes");
  }
  if (args.n_classes > 0 && coding.task == agra::TaskKind::SingleLabel) coding.n_classes = std::max(coding.n_classes, args.n_classes);
  if (coding.names.empty())
    for (std::size_t k = 0; k < coding.n_classes; ++k) coding.names.push_back(std::to_string(k));
  if (coding.n_classes < 2) throw agra::Error(agra::ErrorCode::Config, "need at least 2 classes");
  return coding;
}

agra::Labels encode_labels(const std::vector<nlohmann::json>& raw, const LabelCoding& coding) {
  agra::Labels labels{coding.task, coding.n_classes, {}, {}};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& l = raw[i];
    const auto where = "label on record " + std::to_string(i + 1);
    if (coding.task == agra::TaskKind::MultiLabel) {
      if (!l.is_array() || l.size() != coding.n_classes)
        throw agra::Error(agra::ErrorCode::Parse, where + ": expected an array of length " +
                                                      std::to_string(coding.n_classes), i + 1);
      for (const auto& b : l) labels.bits.push_back(static_cast<std::int8_t>(b.get<int>()));
    } else if (l.is_number_integer()) {
      labels.classes.push_back(l.get<int>());
    } else if (l.is_string()) {
      auto it = std::find(coding.names.begin(), coding.names.end(), l.get<std::string>());
      if (it == coding.names.end())
        throw agra::Error(agra::ErrorCode::LabelOutOfRange, where + ": unknown class '" + l.get<std::string>() + "'", i + 1);
      labels.classes.push_back(static_cast<int>(it - coding.names.begin()));
    } else {
      throw agra::Error(agra::ErrorCode::Parse, where + ": unsupported label type", i + 1);
    }
  }
  labels.validate();
  return labels;
}

int cmd_featurize(const FeaturizeArgs& args) {
  const auto corpus = read_jsonl(args.input);
  if (corpus.texts.empty()) throw agra::Error(agra::ErrorCode::EmptyInput, args.input + ": empty corpus");
  const auto coding = infer_coding(corpus.labels, args);

  agra::Dataset ds;
  agra::Vocabulary vocab;
  if (!args.vocab_file.empty()) {
    vocab = agra::Vocabulary::from_text(agra::text::read_file(args.vocab_file));
    ds.features = agra::tfidf_transform(corpus.texts, vocab);
  } else {
    auto result = agra::tfidf_featurize(corpus.texts, args.vocab_cap);
    ds.features = std::move(result.features);
    vocab = std::move(result.vocabulary);
  }
  ds.gold = encode_labels(corpus.labels, coding);
  ds.noisy = corpus.noisy_labels.empty() ? *ds.gold : encode_labels(corpus.noisy_labels, coding);
  ds.class_names = coding.names;
  ds.validate();

  fs::create_directories(args.out);
  const fs::path out(args.out);
  agra::text::write_file((out / "features.sfm").string(), agra::format_sfm(ds.features));
  agra::text::write_file((out / "labels_gold.txt").string(), agra::detail::format_labels(*ds.gold));
  if (!corpus.noisy_labels.empty())
    agra::text::write_file((out / "labels_noisy.txt").string(), agra::detail::format_labels(ds.noisy));
  agra::text::write_file((out / "meta.json").string(), agra::format_meta(ds));
  agra::text::write_file((out / "vocab.txt").string(), vocab.to_text());
  std::cerr << "featurize: " << ds.n_rows() << " rows, " << ds.n_features() << " features\n";
  return 0;
}

// ---- inject-noise --------------------------------------------------------

struct NoiseArgs {
  double rate = 0.0;
  double sparsity = 0.0;
  std::string kind = "uniform";
  std::uint64_t seed = 0;
  std::string input;
  std::string out;
};

int cmd_inject_noise(const NoiseArgs& args) {
  agra::NoiseSpec spec;
  spec.kind = args.kind == "matrix" ? agra::NoiseKind::MatrixFlip : agra::NoiseKind::UniformFlip;
  spec.rate = args.rate;
  spec.sparsity = args.sparsity;
  spec.seed = args.seed;
  if (!fs::is_directory(args.input)) throw UsageError("missing dataset directory " + args.input);
  const auto ds = agra::load_dataset(args.input);
  const auto noisy = agra::inject_noise(ds, spec);
  agra::write_dataset(noisy, args.out);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < noisy.n_rows(); ++i) flipped += !noisy.noisy.same_as(*noisy.gold, i, i);
  std::cerr << "inject-noise: flipped " << flipped << " of " << noisy.n_rows() << " labels\n";
  return 0;
}

// ---- split ---------------------------------------------------------------

struct SplitArgs {
  std::string input;
  std::string out;
  std::vector<double> fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& args) {
  if (args.fractions.size() != 3) throw UsageError("--fractions takes three values");
  if (!fs::is_directory(args.input)) throw UsageError("missing dataset directory " + args.input);
  const auto ds = agra::load_dataset(args.input);
  const auto parts = agra::split_dataset(ds, {args.fractions[0], args.fractions[1], args.fractions[2]}, args.seed);
  const fs::path out(args.out);
  agra::write_dataset(parts.train, out / "train");
  agra::write_dataset(parts.dev, out / "dev");
  agra::write_dataset(parts.test, out / "test");
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<std::string> comparison_loss;
  bool weighted_sampling = false;
  std::optional<int> alt_label;
  bool log_decisions = false;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> epochs;
};

int cmd_train(const TrainArgs& args) {
  agra::ExperimentConfig exp;
  agra::Dataset train_set, dev, test;
  agra::TrainConfig cfg;
  try {
    exp = agra::parse_experiment_config(agra::text::read_file(args.config));
    if (args.seed) exp.seed = *args.seed;
    if (args.method) exp.method = *args.method;
    if (args.comparison_loss) exp.comparison_loss = *args.comparison_loss;
    if (args.weighted_sampling) exp.sampler_mode = "class_weighted";
    if (args.alt_label) exp.alternative_label = *args.alt_label;
    if (args.log_decisions) exp.log_decisions = true;
    if (args.out_dir) exp.out_dir = *args.out_dir;
    if (args.epochs) exp.epochs = *args.epochs;
    train_set = agra::load_dataset(exp.train_dir);
    dev = agra::load_dataset(exp.dev_dir);
    test = agra::load_dataset(exp.test_dir);
    cfg = agra::to_train_config(exp, train_set.task(), train_set.n_classes());
    cfg.threads = agra::resolve_thread_count();
  } catch (const agra::Error& e) {
    throw UsageError(e.what());
  }

  const auto result = agra::train(train_set, dev, cfg);
  const auto report = agra::evaluate(result.model, test);

  const fs::path out(exp.out_dir);
  fs::create_directories(out);
  agra::save_model(result.model, (out / "model.json").string());
  agra::text::write_file((out / "history.json").string(), agra::history_to_json(result, cfg).dump(2) + "\n");
  agra::text::write_file((out / "metrics_test.json").string(), report.to_json().dump(2) + "\n");
  if (train_set.gold) agra::text::write_file((out / "audit.csv").string(), agra::format_audit_csv(result.audit));
  if (cfg.log_decisions)
    agra::text::write_file((out / "decisions.csv").string(), agra::format_decisions_csv(result.decisions));
  std::cout << report.to_json().dump() << "\n";
  return 0;
}

// ---- evaluate / report ---------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string data;
};

int cmd_evaluate(const EvaluateArgs& args) {
  if (!fs::exists(args.model)) throw UsageError("missing model file " + args.model);
  if (!fs::is_directory(args.data)) throw UsageError("missing data directory " + args.data);
  const auto model = agra::load_model(args.model);
  const auto ds = agra::load_dataset(args.data);
  std::cout << agra::evaluate(model, ds).to_json().dump() << "\n";
  return 0;
}

struct ReportArgs {
  std::string audit;
  std::string out;
};

int cmd_report(const ReportArgs& args) {
  if (!fs::exists(args.audit)) throw UsageError("missing audit file " + args.audit);
  const auto records = agra::parse_audit_csv(agra::text::read_file(args.audit));
  const auto rows = agra::audit_summary(records);
  const std::string out =
      args.out.empty() ? (fs::path(args.audit).parent_path() / "audit_summary.csv").string() : args.out;
  agra::text::write_file(out, agra::format_audit_summary_csv(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-similarity outlier filtering for linear classifiers on noisy labels"};
  app.require_subcommand(1);

  FeaturizeArgs feat;
  auto* featurize = app.add_subcommand("featurize", "TF-IDF featurize a JSON-lines corpus into a dataset directory");
  featurize->add_option("--in", feat.input, "Input JSON-lines file with {\"text\", \"label\"[, \"noisy_label\"]}")
      ->required()
      ->check(CLI::ExistingFile);
  featurize->add_option("--out", feat.out, "Output dataset directory")->required();
  auto* cap = featurize->add_option("--vocab-cap", feat.vocab_cap, "Maximum vocabulary size (>= 1)")
                  ->check(CLI::PositiveNumber);
  featurize->add_option("--vocab", feat.vocab_file, "Reuse a vocab.txt (term<TAB>idf) instead of building one")
      ->check(CLI::ExistingFile)
      ->excludes(cap);
  featurize->add_option("--n-classes", feat.n_classes, "Number of classes for integer labels (default: max + 1)");
  featurize->add_option("--class-names", feat.class_names, "Comma-separated class names for string labels");

  NoiseArgs noise;
  auto* inject = app.add_subcommand("inject-noise", "Flip labels of a dataset directory into a new directory");
  inject->add_option("--rate", noise.rate, "Flip probability in [0, 1]")->required()->check(CLI::Range(0.0, 1.0));
  inject->add_option("--sparsity", noise.sparsity, "Zero fraction of off-diagonal transitions (matrix kind)")
      ->check(CLI::Range(0.0, 1.0));
  inject->add_option("--kind", noise.kind, "uniform|matrix")->check(CLI::IsMember({"uniform", "matrix"}));
  inject->add_option("--seed", noise.seed, "Random seed");
  inject->add_option("--in", noise.input, "Input dataset directory")->required();
  inject->add_option("--out", noise.out, "Output dataset directory")->required();

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Split a dataset directory into train/dev/test subdirectories");
  split_cmd->add_option("--in", split.input, "Input dataset directory")->required();
  split_cmd->add_option("--out", split.out, "Output directory (receives train/, dev/, test/)")->required();
  split_cmd->add_option("--fractions", split.fractions, "Train, dev and test fractions")->delimiter(',')->expected(3);
  split_cmd->add_option("--seed", split.seed, "Shuffle seed");

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Train a linear classifier from an experiment config");
  train_cmd->add_option("--config", targs.config, "Experiment JSON file")->required();
  train_cmd->add_option("--seed", targs.seed, "Override seed");
  train_cmd->add_option("--method", targs.method, "Override method: agra|none");
  train_cmd->add_option("--comparison-loss", targs.comparison_loss,
                        "Override comparison loss: cross_entropy|f1|f1_binary|f1_macro|bce|f1_macro_multi");
  train_cmd->add_flag("--weighted-sampling", targs.weighted_sampling, "Use class-weighted comparison sampling");
  train_cmd->add_option("--alt-label", targs.alt_label, "Alternative label index (single-label only)");
  train_cmd->add_flag("--log-decisions", targs.log_decisions, "Write decisions.csv with per-sample similarities");
  train_cmd->add_option("--out-dir", targs.out_dir, "Override output directory");
  train_cmd->add_option("--epochs", targs.epochs, "Override number of epochs");

  EvaluateArgs eargs;
  auto* eval_cmd = app.add_subcommand("evaluate", "Print evaluation metrics of a model on a dataset as JSON");
  eval_cmd->add_option("--model", eargs.model, "model.json checkpoint")->required();
  eval_cmd->add_option("--data", eargs.data, "Dataset directory")->required();

  ReportArgs rargs;
  auto* report = app.add_subcommand("report", "Summarize audit.csv into per-epoch fractions");
  report->add_option("--audit", rargs.audit, "audit.csv produced by train")->required();
  report->add_option("--out", rargs.out, "Output CSV (default: audit_summary.csv next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*featurize) return cmd_featurize(feat);
    if (*inject) return cmd_inject_noise(noise);
    if (*split_cmd) return cmd_split(split);
    if (*train_cmd) return cmd_train(targs);
    if (*eval_cmd) return cmd_evaluate(eargs);
    if (*report) return cmd_report(rargs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const agra::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_usage_code(e.code()) && !*eval_cmd && !*train_cmd ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
