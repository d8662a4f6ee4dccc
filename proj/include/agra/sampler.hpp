#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "agra/dataset.hpp"
#include "agra/error.hpp"
#include "agra/losses.hpp"
#include "agra/rng.hpp"

namespace agra {

enum class SamplerMode { Uniform, ClassWeighted };

// Draws comparison batches with replacement from the whole training set.
// ClassWeighted gives row t weight 1 / count(noisy class of t), so every
// class carries the same total mass.
class ComparisonSampler {
 public:
  ComparisonSampler(const Dataset& train, SamplerMode mode) : train_(&train), mode_(mode) {
    require(train.n_rows() > 0, ErrorCode::EmptyInput, "empty training set");
    if (mode_ == SamplerMode::Uniform) return;
    require(train.task() == TaskKind::SingleLabel, ErrorCode::InvalidArgument,
            "class-weighted sampling requires a single-label task");
    std::vector<std::size_t> counts(train.n_classes(), 0);
    for (int y : train.noisy.classes) ++counts[static_cast<std::size_t>(y)];
    for (std::size_t k = 0; k < counts.size(); ++k)
      require(counts[k] > 0, ErrorCode::InvalidArgument,
              "class " + std::to_string(k) + " has no training samples");
    cumulative_.reserve(train.n_rows());
    double total = 0.0;
    for (int y : train.noisy.classes) {
      total += 1.0 / static_cast<double>(counts[static_cast<std::size_t>(y)]);
      cumulative_.push_back(total);
    }
  }

  SamplerMode mode() const noexcept { return mode_; }

  std::size_t draw_row(Rng& rng) const {
    if (mode_ == SamplerMode::Uniform) return static_cast<std::size_t>(rng.uniform_index(train_->n_rows()));
    const double u = rng.uniform01() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

  Batch sample(std::size_t size, Rng& rng) const {
    require(size >= 1, ErrorCode::InvalidArgument, "comparison batch size must be >= 1");
    std::vector<std::size_t> rows(size);
    for (auto& r : rows) r = draw_row(rng);
    return make_batch(*train_, rows);
  }

 private:
  const Dataset* train_;
  SamplerMode mode_;
  std::vector<double> cumulative_;
};

inline Batch sample_comparison_batch(const Dataset& train, std::size_t size, SamplerMode mode, Rng& rng) {
  return ComparisonSampler(train, mode).sample(size, rng);
}

}  // namespace agra
