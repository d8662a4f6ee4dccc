#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "agra/error.hpp"
#include "agra/sparse.hpp"
#include "agra/text_format.hpp"

namespace agra {

// K-class linear map logits = W·x + b. Weights are stored row-major
// (class-then-feature), which is also the flattened parameter layout.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::size_t n_classes, std::size_t n_features)
      : n_classes_(n_classes),
        n_features_(n_features),
        weights_(n_classes * n_features, 0.0),
        bias_(n_classes, 0.0) {
    require(n_classes >= 1, ErrorCode::InvalidArgument, "model needs at least one class");
  }

  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t n_params() const noexcept { return weights_.size() + bias_.size(); }

  std::span<double> weights() noexcept { return weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> bias() noexcept { return bias_; }
  std::span<const double> bias() const noexcept { return bias_; }

  double& weight(std::size_t k, std::size_t j) { return weights_[k * n_features_ + j]; }
  double weight(std::size_t k, std::size_t j) const { return weights_[k * n_features_ + j]; }

  void logits(SparseRowView x, std::span<double> out) const {
    require(out.size() == n_classes_, ErrorCode::DimensionMismatch, "logit buffer size");
    for (std::size_t k = 0; k < n_classes_; ++k) {
      const double* row = weights_.data() + k * n_features_;
      double z = bias_[k];
      for (const auto& e : x) {
        require(e.col < n_features_, ErrorCode::DimensionMismatch,
                "feature index " + std::to_string(e.col) + " >= " + std::to_string(n_features_));
        z += row[e.col] * e.value;
      }
      out[k] = z;
    }
  }

  std::vector<double> logits(SparseRowView x) const {
    std::vector<double> out(n_classes_);
    logits(x, out);
    return out;
  }

  bool all_finite() const {
    for (double w : weights_)
      if (!std::isfinite(w)) return false;
    for (double b : bias_)
      if (!std::isfinite(b)) return false;
    return true;
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

inline std::vector<double> forward(const LinearModel& model, SparseRowView x) {
  return model.logits(x);
}

// Gradient with the flattened parameter layout: K·D weight entries followed
// by K bias entries.
struct FlatGradient {
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  std::vector<double> values;

  FlatGradient() = default;
  FlatGradient(std::size_t k, std::size_t d) : n_classes(k), n_features(d), values(k * d + k, 0.0) {}
  FlatGradient(std::size_t k, std::size_t d, std::vector<double> v) : n_classes(k), n_features(d), values(std::move(v)) {
    require(values.size() == k * d + k, ErrorCode::DimensionMismatch, "gradient length does not match K x D + K");
  }

  std::size_t size() const noexcept { return values.size(); }

  std::span<double> weight_block() { return std::span<double>(values).first(n_classes * n_features); }
  std::span<const double> weight_block() const {
    return std::span<const double>(values).first(n_classes * n_features);
  }
  std::span<double> bias_block() { return std::span<double>(values).last(n_classes); }
  std::span<const double> bias_block() const { return std::span<const double>(values).last(n_classes); }

  // Weight row of class k.
  std::span<const double> class_weights(std::size_t k) const {
    return weight_block().subspan(k * n_features, n_features);
  }

  // Class k's D weights followed by its bias entry.
  std::vector<double> slice(std::size_t k) const {
    require(k < n_classes, ErrorCode::InvalidArgument, "class index out of range");
    auto w = class_weights(k);
    std::vector<double> out(w.begin(), w.end());
    out.push_back(bias_block()[k]);
    return out;
  }

  bool same_layout(const FlatGradient& other) const noexcept {
    return n_classes == other.n_classes && n_features == other.n_features &&
           values.size() == other.values.size();
  }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::vector<double> flatten_params(const LinearModel& model) {
  std::vector<double> out(model.weights().begin(), model.weights().end());
  out.insert(out.end(), model.bias().begin(), model.bias().end());
  return out;
}

inline LinearModel unflatten_params(std::span<const double> values, std::size_t n_classes,
                                    std::size_t n_features) {
  if (values.size() != n_classes * n_features + n_classes)
    throw Error(ErrorCode::DimensionMismatch,
                "flat parameter length " + std::to_string(values.size()) + " != " +
                    std::to_string(n_classes * n_features + n_classes));
  LinearModel model(n_classes, n_features);
  std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n_classes * n_features),
            model.weights().begin());
  std::copy(values.end() - static_cast<std::ptrdiff_t>(n_classes), values.end(), model.bias().begin());
  return model;
}

// model.json with every value printed to 17 significant digits.
inline std::string model_to_json(const LinearModel& model) {
  auto list = [](std::span<const double> xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      out += text::format_real17(xs[i]);
    }
    return out + "]";
  };
  std::string out = "{\n";
  out += "  \"n_classes\": " + std::to_string(model.n_classes()) + ",\n";
  out += "  \"n_features\": " + std::to_string(model.n_features()) + ",\n";
  out += "  \"weights\": " + list(model.weights()) + ",\n";
  out += "  \"bias\": " + list(model.bias()) + "\n}\n";
  return out;
}

inline LinearModel model_from_json(const std::string& content) {
  try {
    auto j = nlohmann::json::parse(content);
    const auto k = j.at("n_classes").get<std::size_t>();
    const auto d = j.at("n_features").get<std::size_t>();
    auto w = j.at("weights").get<std::vector<double>>();
    auto b = j.at("bias").get<std::vector<double>>();
    require(w.size() == k * d, ErrorCode::DimensionMismatch, "weights length != n_classes*n_features");
    require(b.size() == k, ErrorCode::DimensionMismatch, "bias length != n_classes");
    w.insert(w.end(), b.begin(), b.end());
    return unflatten_params(w, k, d);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model.json: ") + e.what());
  }
}

inline void save_model(const LinearModel& model, const std::string& path) {
  text::write_file(path, model_to_json(model));
}

inline LinearModel load_model(const std::string& path) { return model_from_json(text::read_file(path)); }

}  // namespace agra
