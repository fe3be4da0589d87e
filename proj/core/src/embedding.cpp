#include "t2iattack/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "t2iattack/error.hpp"

namespace t2ia {

namespace {

void require_same_dimension(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimensions " + std::to_string(a) + " and " + std::to_string(b));
  }
}

}  // namespace

double Embedding::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double Embedding::dot(const Embedding& other) const {
  require_same_dimension(dimension(), other.dimension());
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s;
}

Embedding l2_normalize(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (!(n >= 1e-12)) throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return Embedding(std::move(out));
}

std::size_t EmbeddingBatch::dimension() const {
  return embeddings.empty() ? 0 : embeddings.front().dimension();
}

std::vector<double> EmbeddingBatch::mean() const {
  validate();
  std::vector<double> out(dimension(), 0.0);
  for (const auto& e : embeddings) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += e[i];
  }
  for (double& x : out) x /= static_cast<double>(embeddings.size());
  return out;
}

void EmbeddingBatch::validate() const {
  if (embeddings.empty()) throw Error(ErrorCode::kEmptyBatch, "batch has no embeddings");
  const std::size_t d = embeddings.front().dimension();
  for (const auto& e : embeddings) require_same_dimension(d, e.dimension());
}

double cosine_kernel(const Embedding& x, const Embedding& y) {
  const double dot = x.dot(y);
  const double denom = x.norm() * y.norm();
  if (denom == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  return dot / denom;
}

double energy_score(const Embedding& image, const Embedding& text, double alpha) {
  return alpha * image.dot(text);
}

double clip_score_i2t(const Embedding& text, const EmbeddingBatch& images) {
  images.validate();
  double total = 0.0;
  for (const auto& image : images.embeddings) total += clip_score_t2t(text, image);
  return total / static_cast<double>(images.size());
}

double clip_score_t2t(const Embedding& text_a, const Embedding& text_b) {
  return std::max(0.0, 100.0 * text_a.dot(text_b));
}

}  // namespace t2ia
