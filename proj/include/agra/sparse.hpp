#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agra/error.hpp"

namespace agra {

struct SparseEntry {
  std::uint32_t col;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

using SparseRowView = std::span<const SparseEntry>;

// Compressed sparse rows. Column indices are strictly increasing within a row
// and all stored values are finite.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t n_cols) : n_cols_(n_cols) {}

  std::size_t n_rows() const noexcept { return offsets_.size() - 1; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  SparseRowView row(std::size_t i) const {
    require(i < n_rows(), ErrorCode::InvalidArgument, "row index out of range");
    return SparseRowView(entries_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }

  void add_row(std::span<const SparseEntry> entries) {
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      require(e.col < n_cols_, ErrorCode::InvalidArgument,
              "column index " + std::to_string(e.col) + " >= n_cols " + std::to_string(n_cols_));
      require(k == 0 || entries[k - 1].col < e.col, ErrorCode::InvalidArgument,
              "column indices must be strictly increasing within a row");
      require(std::isfinite(e.value), ErrorCode::NonFinite, "non-finite feature value");
    }
    entries_.insert(entries_.end(), entries.begin(), entries.end());
    offsets_.push_back(entries_.size());
  }

  // Dense row input; zeros are dropped.
  void add_dense_row(std::span<const double> values) {
    std::vector<SparseEntry> row;
    for (std::size_t j = 0; j < values.size(); ++j)
      if (values[j] != 0.0) row.push_back({static_cast<std::uint32_t>(j), values[j]});
    add_row(row);
  }

  SparseMatrix select_rows(std::span<const std::size_t> indices) const {
    SparseMatrix out(n_cols_);
    for (std::size_t i : indices) out.add_row(row(i));
    return out;
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<SparseEntry> entries_;
};

}  // namespace agra
