#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "agra/dataset.hpp"
#include "agra/error.hpp"
#include "agra/rng.hpp"

namespace agra {

enum class NoiseKind { UniformFlip, MatrixFlip };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::UniformFlip;
  double rate = 0.0;
  double sparsity = 0.0;  // MatrixFlip only
  std::uint64_t seed = 0;
};

// Row-major K×K label transition matrix. Each row keeps 1 − rate on the
// diagonal and spreads `rate` evenly over max(1, floor((1 − sparsity)(K − 1)))
// off-diagonal classes chosen at random.
inline std::vector<double> make_transition_matrix(std::size_t n_classes, double rate,
                                                  double sparsity, Rng& rng) {
  require(n_classes >= 2, ErrorCode::InvalidArgument, "noise needs at least 2 classes");
  require(rate >= 0.0 && rate <= 1.0, ErrorCode::InvalidArgument, "noise rate outside [0, 1]");
  require(sparsity >= 0.0 && sparsity <= 1.0, ErrorCode::InvalidArgument,
          "sparsity outside [0, 1]");
  const std::size_t off = n_classes - 1;
  const auto n_targets = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor((1.0 - sparsity) * static_cast<double>(off) + 1e-12)));
  std::vector<double> matrix(n_classes * n_classes, 0.0);
  for (std::size_t k = 0; k < n_classes; ++k) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n_classes; ++j)
      if (j != k) others.push_back(j);
    shuffle(others, rng);
    matrix[k * n_classes + k] = 1.0 - rate;
    for (std::size_t t = 0; t < n_targets; ++t)
      matrix[k * n_classes + others[t]] = rate / static_cast<double>(n_targets);
  }
  return matrix;
}

// Flips each single-label entry with probability spec.rate.
inline Labels inject_noise(const Labels& gold, const NoiseSpec& spec) {
  require(gold.task == TaskKind::SingleLabel, ErrorCode::InvalidArgument,
          "noise injection supports single-label tasks only");
  const std::size_t k = gold.n_classes;
  require(k >= 2, ErrorCode::InvalidArgument, "noise needs at least 2 classes");
  require(spec.rate >= 0.0 && spec.rate <= 1.0, ErrorCode::InvalidArgument,
          "noise rate outside [0, 1]");
  gold.validate();

  Rng rng(spec.seed, Stream::Noise);
  std::vector<std::vector<int>> targets(k);
  if (spec.kind == NoiseKind::MatrixFlip) {
    const auto matrix = make_transition_matrix(k, spec.rate, spec.sparsity, rng);
    for (std::size_t row = 0; row < k; ++row)
      for (std::size_t col = 0; col < k; ++col)
        if (col != row && matrix[row * k + col] > 0.0) targets[row].push_back(static_cast<int>(col));
  }

  Labels noisy = gold;
  for (auto& y : noisy.classes) {
    if (!rng.bernoulli(spec.rate)) continue;
    if (spec.kind == NoiseKind::UniformFlip) {
      auto r = static_cast<int>(rng.uniform_index(k - 1));
      y = r >= y ? r + 1 : r;
    } else {
      const auto& row = targets[static_cast<std::size_t>(y)];
      if (row.empty()) continue;  // rate == 0
      y = row[rng.uniform_index(row.size())];
    }
  }
  return noisy;
}

// Returns a copy whose stored labels are noisy and whose gold labels are the
// clean source (existing gold when present, otherwise the stored labels).
inline Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec) {
  Dataset out = ds;
  const Labels& clean = ds.gold ? *ds.gold : ds.noisy;
  out.gold = clean;
  out.noisy = inject_noise(clean, spec);
  return out;
}

}  // namespace agra
