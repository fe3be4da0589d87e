#include "t2iattack/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "t2iattack/bundled_data.hpp"
#include "t2iattack/error.hpp"
#include "t2iattack/utf8.hpp"

namespace t2ia {

ReferenceCorpus::ReferenceCorpus(std::vector<std::string> texts, std::vector<Embedding> embeddings)
    : texts_(std::move(texts)), embeddings_(std::move(embeddings)) {
  if (texts_.size() != embeddings_.size()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus texts and embeddings differ in length");
  }
  if (texts_.size() < 2) throw Error(ErrorCode::kEmptyCorpus, "corpus needs at least 2 entries");
  const std::size_t d = embeddings_.front().dimension();
  for (const auto& e : embeddings_) {
    if (e.dimension() != d) throw Error(ErrorCode::kDimensionMismatch, "corpus dimensions differ");
  }
}

std::vector<std::string> ReferenceCorpus::read_texts(std::string_view contents) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string_view::npos && line[first] != '#') out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

const std::vector<std::string>& ReferenceCorpus::bundled_texts() {
  static const std::vector<std::string> texts = read_texts(bundled::reference_captions());
  return texts;
}

DivergenceObjective DivergenceObjective::mmd2() {
  DivergenceObjective o;
  o.kind = ObjectiveKind::kMmd2;
  return o;
}

DivergenceObjective DivergenceObjective::kl1(double alpha) {
  DivergenceObjective o;
  o.kind = ObjectiveKind::kKl1;
  o.alpha = alpha;
  return o;
}

DivergenceObjective DivergenceObjective::kl2(std::shared_ptr<const ReferenceCorpus> corpus,
                                             double alpha) {
  DivergenceObjective o;
  o.kind = ObjectiveKind::kKl2;
  o.alpha = alpha;
  o.corpus = std::move(corpus);
  return o;
}

DivergenceObjective DivergenceObjective::two_sample(TwoSampleVariant variant, double alpha) {
  DivergenceObjective o;
  o.kind = ObjectiveKind::kTwoSample;
  o.variant = variant;
  o.alpha = alpha;
  return o;
}

DivergenceObjective DivergenceObjective::clip_only() {
  DivergenceObjective o;
  o.kind = ObjectiveKind::kClipOnly;
  return o;
}

DivergenceObjective DivergenceObjective::diffusion_only(double alpha, double beta) {
  DivergenceObjective o;
  o.kind = ObjectiveKind::kDiffusionOnly;
  o.alpha = alpha;
  o.beta = beta;
  return o;
}

void DivergenceObjective::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kConfiguration, "alpha must be positive and finite");
  }
  if (kind == ObjectiveKind::kKl2 && (!corpus || corpus->size() == 0)) {
    throw Error(ErrorCode::kConfiguration, "kl2 requires a reference corpus");
  }
  if (kind == ObjectiveKind::kDiffusionOnly && (!(beta > 0.0) || !std::isfinite(beta))) {
    throw Error(ErrorCode::kConfiguration, "dp requires positive alpha and beta");
  }
}

bool DivergenceObjective::uses_adv_text() const {
  return kind == ObjectiveKind::kKl1 || kind == ObjectiveKind::kClipOnly ||
         kind == ObjectiveKind::kDiffusionOnly;
}

std::string DivergenceObjective::name() const {
  switch (kind) {
    case ObjectiveKind::kMmd2: return "mmd2";
    case ObjectiveKind::kKl1: return "kl1";
    case ObjectiveKind::kKl2: return "kl2";
    case ObjectiveKind::kTwoSample: return variant == TwoSampleVariant::kT ? "2st-t" : "2st-ks";
    case ObjectiveKind::kClipOnly: return "clip";
    case ObjectiveKind::kDiffusionOnly: return "dp";
  }
  return "?";
}

ObjectiveKind parse_objective_kind(std::string_view name, TwoSampleVariant* variant) {
  const std::string n = utf8::lower(name);
  auto set_variant = [&](TwoSampleVariant v) {
    if (variant != nullptr) *variant = v;
  };
  if (n == "mmd2" || n == "mmd") return ObjectiveKind::kMmd2;
  if (n == "kl1" || n == "kl-1") return ObjectiveKind::kKl1;
  if (n == "kl2" || n == "kl-2") return ObjectiveKind::kKl2;
  if (n == "2st" || n == "2st-t" || n == "t") {
    set_variant(TwoSampleVariant::kT);
    return ObjectiveKind::kTwoSample;
  }
  if (n == "2st-ks" || n == "ks") {
    set_variant(TwoSampleVariant::kKs);
    return ObjectiveKind::kTwoSample;
  }
  if (n == "clip" || n == "clip-only") return ObjectiveKind::kClipOnly;
  if (n == "dp" || n == "diffusion-only") return ObjectiveKind::kDiffusionOnly;
  throw Error(ErrorCode::kConfiguration, "unknown objective '" + std::string(name) + "'");
}

namespace {

void check_context(const DivergenceContext& ctx) {
  ctx.orig_images.validate();
  ctx.adv_images.validate();
  if (ctx.orig_images.size() != ctx.adv_images.size()) {
    throw Error(ErrorCode::kPrecondition, "batches differ in size");
  }
  if (ctx.orig_images.dimension() != ctx.adv_images.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "batches differ in dimension");
  }
}

std::vector<double> norms(const EmbeddingBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& e : batch.embeddings) {
    out.push_back(e.norm());
    if (out.back() == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  }
  return out;
}

// Sum of cosine_kernel over all pairs, with each norm computed once.
double mean_kernel(const EmbeddingBatch& a, const EmbeddingBatch& b) {
  const std::vector<double> na = norms(a);
  const std::vector<double> nb = norms(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      s += a.embeddings[i].dot(b.embeddings[j]) / (na[i] * nb[j]);
    }
  }
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double dot(std::span<const double> a, const Embedding& b) {
  if (a.size() != b.dimension()) throw Error(ErrorCode::kDimensionMismatch, "mean vs embedding");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double mmd2(const DivergenceContext& ctx) {
  check_context(ctx);
  return mean_kernel(ctx.adv_images, ctx.adv_images) -
         2.0 * mean_kernel(ctx.adv_images, ctx.orig_images) +
         mean_kernel(ctx.orig_images, ctx.orig_images);
}

double kl1_bound(const DivergenceContext& ctx, double alpha) {
  ctx.adv_images.validate();
  const std::vector<double> m = ctx.adv_images.mean();
  return alpha * (dot(m, ctx.adv_text) - dot(m, ctx.orig_text));
}

double kl2_bound(const DivergenceContext& ctx, const ReferenceCorpus& corpus, double alpha) {
  return kl2_bound(ctx, std::span<const Embedding>(corpus.embeddings()), alpha);
}

double kl2_bound(const DivergenceContext& ctx, std::span<const Embedding> corpus, double alpha) {
  ctx.adv_images.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty reference corpus");
  std::vector<double> exponents(corpus.size());
  double total = 0.0;
  for (const auto& x : ctx.adv_images.embeddings) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      exponents[j] = energy_score(x, corpus[j], alpha);
      peak = std::max(peak, exponents[j]);
    }
    double acc = 0.0;
    for (double e : exponents) acc += std::exp(e - peak);
    total += peak + std::log(acc) - energy_score(x, ctx.orig_text, alpha);
  }
  return total / static_cast<double>(ctx.adv_images.size());
}

double welch_t(std::span<const double> orig, std::span<const double> adv) {
  if (orig.size() < 2 || adv.size() < 2) {
    throw Error(ErrorCode::kPrecondition, "t statistic needs at least 2 samples per side");
  }
  const double mo = sample_mean(orig);
  const double ma = sample_mean(adv);
  double se2 = sample_variance(orig, mo) / static_cast<double>(orig.size()) +
               sample_variance(adv, ma) / static_cast<double>(adv.size());
  if (se2 < kVarianceFloor) {
    if (mo == ma) return 0.0;
    se2 = kVarianceFloor;
  }
  return (mo - ma) / std::sqrt(se2);
}

double ks_statistic(std::span<const double> orig, std::span<const double> adv) {
  if (orig.empty() || adv.empty()) throw Error(ErrorCode::kEmptyBatch, "empty sample");
  std::vector<double> a(orig.begin(), orig.end());
  std::vector<double> b(adv.begin(), adv.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double sup = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      v = a[i];
    } else {
      v = b[j];
    }
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

std::vector<double> project_energies(const EmbeddingBatch& images, const Embedding& text,
                                     double alpha) {
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& x : images.embeddings) out.push_back(energy_score(x, text, alpha));
  return out;
}

double two_sample_stat(const DivergenceContext& ctx, TwoSampleVariant variant, double alpha) {
  check_context(ctx);
  const auto orig = project_energies(ctx.orig_images, ctx.orig_text, alpha);
  const auto adv = project_energies(ctx.adv_images, ctx.orig_text, alpha);
  return variant == TwoSampleVariant::kT ? welch_t(orig, adv) : ks_statistic(orig, adv);
}

double clip_only_objective(const DivergenceContext& ctx, bool raw_formula) {
  const double s = clip_score_t2t(ctx.orig_text, ctx.adv_text);
  return raw_formula ? s : 100.0 - s;
}

double dp_objective(const DivergenceContext& ctx, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw Error(ErrorCode::kConfiguration, "dp requires positive alpha and beta");
  }
  const std::vector<double> m = ctx.adv_images.mean();
  return alpha * ctx.adv_text.dot(ctx.orig_text) - beta * dot(m, ctx.orig_text);
}

double evaluate(const DivergenceObjective& objective, const DivergenceContext& ctx) {
  objective.validate();
  switch (objective.kind) {
    case ObjectiveKind::kMmd2: return mmd2(ctx);
    case ObjectiveKind::kKl1: return kl1_bound(ctx, objective.alpha);
    case ObjectiveKind::kKl2: return kl2_bound(ctx, *objective.corpus, objective.alpha);
    case ObjectiveKind::kTwoSample: return two_sample_stat(ctx, objective.variant, objective.alpha);
    case ObjectiveKind::kClipOnly: return clip_only_objective(ctx, objective.clip_raw_formula);
    case ObjectiveKind::kDiffusionOnly: return dp_objective(ctx, objective.alpha, objective.beta);
  }
  throw Error(ErrorCode::kConfiguration, "unknown objective");
}

}  // namespace t2ia
