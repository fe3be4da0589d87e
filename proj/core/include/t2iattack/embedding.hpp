#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace t2ia {

inline constexpr std::size_t kDefaultDimension = 512;
inline constexpr double kDefaultAlpha = 100.0;

/// Immutable real vector. Instances built by l2_normalize have unit norm.
class Embedding {
 public:
  Embedding() = default;

  std::span<const double> values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }
  double norm() const;
  double operator[](std::size_t i) const { return values_[i]; }

  /// Throws Error(kDimensionMismatch).
  double dot(const Embedding& other) const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  friend Embedding l2_normalize(std::span<const double> v);
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

/// Throws Error(kZeroVector) when the norm is below 1e-12.
Embedding l2_normalize(std::span<const double> v);

/// N samples sharing one dimension.
struct EmbeddingBatch {
  std::vector<Embedding> embeddings;
  std::string source_text;
  std::string query_id;

  std::size_t size() const { return embeddings.size(); }
  std::size_t dimension() const;
  /// Element-wise mean of the members (not renormalized).
  std::vector<double> mean() const;

  /// Throws kEmptyBatch or kDimensionMismatch.
  void validate() const;
};

double cosine_kernel(const Embedding& x, const Embedding& y);

/// alpha * image^T text, read as a log joint likelihood up to a constant.
double energy_score(const Embedding& image, const Embedding& text, double alpha = kDefaultAlpha);

/// Mean over images of max(0, 100 * text^T image).
double clip_score_i2t(const Embedding& text, const EmbeddingBatch& images);

/// max(0, 100 * a^T b).
double clip_score_t2t(const Embedding& text_a, const Embedding& text_b);

}  // namespace t2ia
