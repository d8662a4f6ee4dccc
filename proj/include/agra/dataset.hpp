#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "agra/error.hpp"
#include "agra/rng.hpp"
#include "agra/sparse.hpp"
#include "agra/text_format.hpp"

namespace agra {

enum class TaskKind { SingleLabel, MultiLabel };

// Multi-label entry marking a (sample, class) pair excluded from the update.
inline constexpr std::int8_t kIgnoreLabel = -1;

// Per-row labels. Single-label rows hold a class index in `classes`;
// multi-label rows hold K entries of {0, 1} in `bits` (row-major).
struct Labels {
  TaskKind task = TaskKind::SingleLabel;
  std::size_t n_classes = 0;
  std::vector<int> classes;
  std::vector<std::int8_t> bits;

  static Labels single(std::size_t n_classes, std::vector<int> classes) {
    return Labels{TaskKind::SingleLabel, n_classes, std::move(classes), {}};
  }
  static Labels multi(std::size_t n_classes, std::vector<std::int8_t> bits) {
    return Labels{TaskKind::MultiLabel, n_classes, {}, std::move(bits)};
  }

  std::size_t size() const noexcept {
    return task == TaskKind::SingleLabel ? classes.size()
                                         : (n_classes == 0 ? 0 : bits.size() / n_classes);
  }
  int class_of(std::size_t i) const { return classes.at(i); }
  std::span<const std::int8_t> vector_of(std::size_t i) const {
    return std::span<const std::int8_t>(bits).subspan(i * n_classes, n_classes);
  }

  bool same_as(const Labels& other, std::size_t i, std::size_t j) const {
    if (task == TaskKind::SingleLabel) return classes[i] == other.classes[j];
    return std::ranges::equal(vector_of(i), other.vector_of(j));
  }

  Labels select(std::span<const std::size_t> indices) const {
    Labels out{task, n_classes, {}, {}};
    for (std::size_t i : indices) {
      if (task == TaskKind::SingleLabel) {
        out.classes.push_back(classes.at(i));
      } else {
        auto v = vector_of(i);
        out.bits.insert(out.bits.end(), v.begin(), v.end());
      }
    }
    return out;
  }

  void validate() const {
    require(n_classes >= 2, ErrorCode::InvalidArgument, "n_classes must be >= 2");
    if (task == TaskKind::SingleLabel) {
      for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i] < 0 || static_cast<std::size_t>(classes[i]) >= n_classes)
          throw Error(ErrorCode::LabelOutOfRange,
                      "label " + std::to_string(classes[i]) + " at row " + std::to_string(i + 1),
                      i + 1);
    } else {
      require(bits.size() % n_classes == 0, ErrorCode::InvalidArgument,
              "multi-label storage is not a multiple of n_classes");
      for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i] != 0 && bits[i] != 1)
          throw Error(ErrorCode::LabelOutOfRange,
                      "multi-label entry must be 0 or 1 at row " + std::to_string(i / n_classes + 1),
                      i / n_classes + 1);
    }
  }

  friend bool operator==(const Labels&, const Labels&) = default;
};

struct Dataset {
  SparseMatrix features;
  Labels noisy;
  std::optional<Labels> gold;
  std::vector<std::string> class_names;

  std::size_t n_rows() const noexcept { return features.n_rows(); }
  std::size_t n_features() const noexcept { return features.n_cols(); }
  std::size_t n_classes() const noexcept { return noisy.n_classes; }
  TaskKind task() const noexcept { return noisy.task; }

  // Labels used for evaluation: gold when available, else the stored labels.
  const Labels& reference_labels() const { return gold ? *gold : noisy; }

  void validate() const {
    noisy.validate();
    if (noisy.size() != features.n_rows())
      throw Error(ErrorCode::RowCountMismatch,
                  "features have " + std::to_string(features.n_rows()) + " rows, labels " +
                      std::to_string(noisy.size()));
    if (gold) {
      require(gold->task == noisy.task && gold->n_classes == noisy.n_classes,
              ErrorCode::InvalidArgument, "gold labels disagree with noisy labels on task shape");
      gold->validate();
      if (gold->size() != features.n_rows())
        throw Error(ErrorCode::RowCountMismatch,
                    "features have " + std::to_string(features.n_rows()) + " rows, gold labels " +
                        std::to_string(gold->size()));
    }
    require(class_names.empty() || class_names.size() == noisy.n_classes,
            ErrorCode::InvalidArgument, "class_names length differs from n_classes");
  }

  Dataset select(std::span<const std::size_t> indices) const {
    Dataset out;
    out.features = features.select_rows(indices);
    out.noisy = noisy.select(indices);
    if (gold) out.gold = gold->select(indices);
    out.class_names = class_names;
    return out;
  }
};

namespace detail {

inline std::string task_name(TaskKind task) {
  return task == TaskKind::SingleLabel ? "single" : "multi";
}

inline SparseMatrix parse_sfm(const std::string& content, const std::string& path) {
  auto lines = text::split_lines(content);
  if (lines.empty()) throw Error(ErrorCode::Parse, path + ": missing header", 1);
  auto header = text::split_ws(lines[0]);
  std::size_t n_rows = 0, n_cols = 0;
  if (header.size() != 2 || !text::parse_int(header[0], n_rows) ||
      !text::parse_int(header[1], n_cols))
    throw Error(ErrorCode::Parse, path + ": line 1: expected 'n_rows n_cols'", 1);
  if (lines.size() - 1 != n_rows)
    throw Error(ErrorCode::Parse,
                path + ": header declares " + std::to_string(n_rows) + " rows, file has " +
                    std::to_string(lines.size() - 1),
                lines.size() - 1 < n_rows ? lines.size() + 1 : n_rows + 2);
  SparseMatrix m(n_cols);
  std::vector<SparseEntry> row;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    row.clear();
    for (auto token : text::split_ws(lines[i])) {
      auto colon = token.find(':');
      std::uint32_t col = 0;
      double value = 0.0;
      if (colon == std::string_view::npos || !text::parse_int(token.substr(0, colon), col) ||
          !text::parse_real(token.substr(colon + 1), value))
        throw Error(ErrorCode::Parse,
                    path + ": line " + std::to_string(i + 1) + ": bad entry '" +
                        std::string(token) + "'",
                    i + 1);
      row.push_back({col, value});
    }
    try {
      m.add_row(row);
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, path + ": line " + std::to_string(i + 1) + ": " + e.what(),
                  i + 1);
    }
  }
  return m;
}

inline Labels parse_labels(const std::string& content, const std::string& path, TaskKind task,
                           std::size_t n_classes) {
  Labels labels{task, n_classes, {}, {}};
  auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto tokens = text::split_ws(lines[i]);
    const std::size_t line_no = i + 1;
    if (task == TaskKind::SingleLabel) {
      int y = 0;
      if (tokens.size() != 1 || !text::parse_int(tokens[0], y))
        throw Error(ErrorCode::Parse,
                    path + ": line " + std::to_string(line_no) + ": expected one integer",
                    line_no);
      if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
        throw Error(ErrorCode::LabelOutOfRange,
                    path + ": line " + std::to_string(line_no) + ": label " + std::to_string(y) +
                        " outside [0, " + std::to_string(n_classes) + ")",
                    line_no);
      labels.classes.push_back(y);
    } else {
      if (tokens.size() != n_classes)
        throw Error(ErrorCode::Parse,
                    path + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(n_classes) + " entries",
                    line_no);
      for (auto token : tokens) {
        int b = 0;
        if (!text::parse_int(token, b))
          throw Error(ErrorCode::Parse,
                      path + ": line " + std::to_string(line_no) + ": bad entry", line_no);
        if (b != 0 && b != 1)
          throw Error(ErrorCode::LabelOutOfRange,
                      path + ": line " + std::to_string(line_no) + ": entry must be 0 or 1",
                      line_no);
        labels.bits.push_back(static_cast<std::int8_t>(b));
      }
    }
  }
  return labels;
}

inline std::string format_labels(const Labels& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.task == TaskKind::SingleLabel) {
      out += std::to_string(labels.classes[i]);
    } else {
      auto v = labels.vector_of(i);
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ' ';
        out += v[k] ? '1' : '0';
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

inline std::string format_sfm(const SparseMatrix& m) {
  std::string out = std::to_string(m.n_rows()) + " " + std::to_string(m.n_cols()) + "\n";
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    bool first = true;
    for (const auto& e : m.row(i)) {
      if (!first) out += ' ';
      first = false;
      out += std::to_string(e.col);
      out += ':';
      out += text::format_real(e.value);
    }
    out += '\n';
  }
  return out;
}

inline std::string format_meta(const Dataset& ds) {
  nlohmann::ordered_json meta;
  meta["n_classes"] = ds.n_classes();
  meta["task_kind"] = detail::task_name(ds.task());
  std::vector<std::string> names = ds.class_names;
  if (names.empty())
    for (std::size_t k = 0; k < ds.n_classes(); ++k) names.push_back(std::to_string(k));
  meta["class_names"] = names;
  return meta.dump(2) + "\n";
}

// Reads features.sfm, labels_noisy.txt, optional labels_gold.txt and
// meta.json from `dir`. When labels_noisy.txt is absent but labels_gold.txt
// exists, the gold labels double as the stored labels (clean dev/test sets).
inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), ErrorCode::Io, "not a directory: " + dir.string());
  const auto meta_path = (dir / "meta.json").string();
  const auto sfm_path = (dir / "features.sfm").string();
  const auto noisy_path = (dir / "labels_noisy.txt").string();
  const auto gold_path = (dir / "labels_gold.txt").string();
  require(fs::exists(meta_path), ErrorCode::Io, "missing file " + meta_path);
  require(fs::exists(sfm_path), ErrorCode::Io, "missing file " + sfm_path);
  const bool has_noisy = fs::exists(noisy_path);
  const bool has_gold = fs::exists(gold_path);
  require(has_noisy || has_gold, ErrorCode::Io, "missing file " + noisy_path);

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text::read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, meta_path + ": " + e.what());
  }
  std::size_t n_classes = 0;
  TaskKind task = TaskKind::SingleLabel;
  std::vector<std::string> class_names;
  try {
    n_classes = meta.at("n_classes").get<std::size_t>();
    const auto kind = meta.at("task_kind").get<std::string>();
    if (kind == "multi")
      task = TaskKind::MultiLabel;
    else if (kind != "single")
      throw Error(ErrorCode::Parse, meta_path + ": task_kind must be 'single' or 'multi'");
    if (meta.contains("class_names"))
      class_names = meta.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, meta_path + ": " + e.what());
  }
  require(n_classes >= 2, ErrorCode::Parse, meta_path + ": n_classes must be >= 2");
  require(class_names.empty() || class_names.size() == n_classes, ErrorCode::Parse,
          meta_path + ": class_names length differs from n_classes");

  Dataset ds;
  ds.class_names = std::move(class_names);
  ds.features = detail::parse_sfm(text::read_file(sfm_path), sfm_path);
  if (has_gold) ds.gold = detail::parse_labels(text::read_file(gold_path), gold_path, task, n_classes);
  ds.noisy = has_noisy ? detail::parse_labels(text::read_file(noisy_path), noisy_path, task, n_classes)
                       : *ds.gold;
  ds.validate();
  return ds;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);
  text::write_file((dir / "features.sfm").string(), format_sfm(ds.features));
  text::write_file((dir / "labels_noisy.txt").string(), detail::format_labels(ds.noisy));
  if (ds.gold) text::write_file((dir / "labels_gold.txt").string(), detail::format_labels(*ds.gold));
  text::write_file((dir / "meta.json").string(), format_meta(ds));
}

struct SplitFractions {
  double train;
  double dev;
  double test;
};

struct DatasetSplits {
  Dataset train;
  Dataset dev;
  Dataset test;
};

// Sizes are floor(train·N), floor(dev·N) and the remainder; membership comes
// from a seeded shuffle and each part keeps the original row order.
inline DatasetSplits split_dataset(const Dataset& ds, SplitFractions fractions, std::uint64_t seed) {
  require(fractions.train > 0 && fractions.dev > 0 && fractions.test > 0,
          ErrorCode::InvalidArgument, "split fractions must be positive");
  require(std::abs(fractions.train + fractions.dev + fractions.test - 1.0) <= 1e-9,
          ErrorCode::InvalidArgument, "split fractions must sum to 1");
  const std::size_t n = ds.n_rows();
  const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(n)));
  const auto n_dev = static_cast<std::size_t>(std::floor(fractions.dev * static_cast<double>(n)));
  if (n_train == 0 || n_dev == 0 || n_train + n_dev >= n)
    throw Error(ErrorCode::EmptySplit,
                "split of " + std::to_string(n) + " rows leaves an empty part");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, Stream::Split);
  shuffle(order, rng);

  auto part = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    return ds.select(idx);
  };
  return {part(0, n_train), part(n_train, n_train + n_dev), part(n_train + n_dev, n)};
}

}  // namespace agra
