#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "t2iattack/embedding.hpp"

namespace t2ia {

/// Finite stand-in for the space of all text inputs.
class ReferenceCorpus {
 public:
  /// Throws Error(kEmptyCorpus) unless there are at least two entries and
  /// texts and embeddings line up.
  ReferenceCorpus(std::vector<std::string> texts, std::vector<Embedding> embeddings);

  const std::vector<std::string>& texts() const { return texts_; }
  const std::vector<Embedding>& embeddings() const { return embeddings_; }
  std::size_t size() const { return texts_.size(); }

  /// One text per line; blank lines and `#` comments are skipped.
  static std::vector<std::string> read_texts(std::string_view contents);
  static const std::vector<std::string>& bundled_texts();

 private:
  std::vector<std::string> texts_;
  std::vector<Embedding> embeddings_;
};

// Diffusion-only trade-off calibrated on the synthetic victim.
inline constexpr double kDefaultDpAlpha = 1.0;
inline constexpr double kDefaultDpBeta = 3.0;

enum class ObjectiveKind { kMmd2, kKl1, kKl2, kTwoSample, kClipOnly, kDiffusionOnly };
enum class TwoSampleVariant { kT, kKs };

/// Which divergence the search maximizes. Every kind shares the contract
/// "larger means further from the original generation distribution".
struct DivergenceObjective {
  ObjectiveKind kind = ObjectiveKind::kTwoSample;
  TwoSampleVariant variant = TwoSampleVariant::kT;
  double alpha = kDefaultAlpha;
  double beta = 0.0;
  std::shared_ptr<const ReferenceCorpus> corpus;
  // Score raw S_T2T instead of 100 - S_T2T for the CLIP-only objective.
  bool clip_raw_formula = false;

  static DivergenceObjective mmd2();
  static DivergenceObjective kl1(double alpha = kDefaultAlpha);
  static DivergenceObjective kl2(std::shared_ptr<const ReferenceCorpus> corpus,
                                 double alpha = kDefaultAlpha);
  static DivergenceObjective two_sample(TwoSampleVariant variant = TwoSampleVariant::kT,
                                        double alpha = kDefaultAlpha);
  static DivergenceObjective clip_only();
  static DivergenceObjective diffusion_only(double alpha = kDefaultDpAlpha,
                                            double beta = kDefaultDpBeta);

  /// Throws Error(kConfiguration) on a broken invariant.
  void validate() const;

  bool uses_adv_text() const;
  std::string name() const;
};

/// Canonical names: mmd2, kl1, kl2, 2st-t, 2st-ks, clip, dp.
ObjectiveKind parse_objective_kind(std::string_view name, TwoSampleVariant* variant = nullptr);

struct DivergenceContext {
  const Embedding& orig_text;
  const Embedding& adv_text;
  const EmbeddingBatch& orig_images;
  const EmbeddingBatch& adv_images;
};

double mmd2(const DivergenceContext& ctx);
double kl1_bound(const DivergenceContext& ctx, double alpha = kDefaultAlpha);
double kl2_bound(const DivergenceContext& ctx, const ReferenceCorpus& corpus,
                 double alpha = kDefaultAlpha);
/// Same bound over any non-empty list of text embeddings.
double kl2_bound(const DivergenceContext& ctx, std::span<const Embedding> corpus,
                 double alpha = kDefaultAlpha);

inline constexpr double kVarianceFloor = 1e-18;

/// Signed Welch statistic (mean(orig) - mean(adv)) / se with sample
/// variances. se^2 is floored at kVarianceFloor; identical means under a
/// degenerate variance give 0.
double welch_t(std::span<const double> orig, std::span<const double> adv);

/// sup |F_adv - F_orig| over the pooled sample points.
double ks_statistic(std::span<const double> orig, std::span<const double> adv);

/// Energy scores alpha * x^T text for each member of the batch.
std::vector<double> project_energies(const EmbeddingBatch& images, const Embedding& text,
                                     double alpha);

double two_sample_stat(const DivergenceContext& ctx, TwoSampleVariant variant,
                       double alpha = kDefaultAlpha);
double clip_only_objective(const DivergenceContext& ctx, bool raw_formula = false);
double dp_objective(const DivergenceContext& ctx, double alpha, double beta);

double evaluate(const DivergenceObjective& objective, const DivergenceContext& ctx);

}  // namespace t2ia
