#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "t2iattack/divergence.hpp"
#include "t2iattack/oracle.hpp"
#include "t2iattack/text_perturbation.hpp"

namespace t2ia {

struct AttackConfig {
  DivergenceObjective objective;
  RuleKind rule = RuleKind::kTypo;
  int n_images = 15;
  int candidates_per_word = kDefaultCandidatesPerWord;
  double threshold = std::numeric_limits<double>::infinity();
  int max_perturbed_words = 3;
  std::uint64_t seed = 0;

  /// Throws Error(kConfiguration). The threshold may be +-infinity.
  void validate() const;
};

struct WordImportance {
  std::size_t word_index = 0;
  double score = 0.0;
};

/// The original prompt with its cached generation and text embedding.
struct OriginalReference {
  Sentence sentence;
  Embedding text_embedding;
  EmbeddingBatch images;
};

/// Generates the original batch and embeds the original text (baseline phase).
OriginalReference prepare_reference(std::string_view text, const AttackConfig& config,
                                    OracleSession& session);

/// Divergence of a perturbed text from the original distribution.
double score_text(std::string_view text, const OriginalReference& reference,
                  const AttackConfig& config, OracleSession& session, QueryPhase phase);

/// Scores every word by the divergence its deletion induces and sorts
/// descending, ties toward the lower token index. Deletions that leave no
/// word behind are scored 0 without a query.
std::vector<WordImportance> rank_word_importance(const OriginalReference& reference,
                                                 const AttackConfig& config,
                                                 OracleSession& session);

struct StepOutcome {
  std::size_t word_index = 0;
  std::vector<CandidateSentence> candidates;
  std::vector<double> divergences;
  std::size_t chosen = 0;

  const CandidateSentence& best() const { return candidates.at(chosen); }
  double divergence() const { return divergences.at(chosen); }
};

/// Best-of-k perturbation of one word on top of `state`, scored against the
/// original reference. nullopt when the rule cannot perturb the word.
std::optional<StepOutcome> perturb_word_step(const CandidateSentence& state,
                                             std::size_t word_index, const AttackConfig& config,
                                             const OriginalReference& reference,
                                             OracleSession& session,
                                             const PerturbationEngine& engine =
                                                 PerturbationEngine::bundled());

struct AttackStep {
  std::size_t word_index = 0;
  std::vector<std::string> candidate_texts;
  std::vector<double> divergences;
  std::size_t chosen = 0;
  QueryLedger ledger;
};

struct AttackTrace {
  std::vector<WordImportance> ranking;
  std::vector<AttackStep> steps;
  std::vector<std::size_t> skipped_words;
  // Deletion texts actually generated during ranking.
  std::uint64_t ranking_queries = 0;
  // k * steps minus candidates actually generated.
  std::uint64_t candidate_shortfall = 0;
};

enum class Termination { kThreshold, kBudget };

std::string_view to_string(Termination termination);

struct AttackResult {
  std::string original_text;
  std::string adversarial_text;
  std::size_t word_count = 0;
  std::vector<std::size_t> perturbed_word_indices;
  std::optional<double> final_divergence;
  Termination terminated_by = Termination::kBudget;
  AttackTrace trace;
  QueryLedger ledger;
  // Set when the oracle failed mid-run; the trace holds completed steps.
  std::optional<std::string> error;
};

/// Greedy search: rank once, then perturb words in importance order keeping
/// earlier edits, stopping at the threshold or after max_perturbed_words.
/// Oracle failures abort the search; the returned result then carries the
/// error message and the steps completed so far.
AttackResult run_attack(std::string_view text, const AttackConfig& config,
                        GenerationOracle& oracle,
                        const PerturbationEngine& engine = PerturbationEngine::bundled());

/// Perturbs ceil(rate * n) distinct words chosen uniformly, one rule
/// application each. No oracle calls. Words the rule cannot touch are
/// passed over in favour of the next drawn word.
CandidateSentence random_baseline(const Sentence& sentence, double rate, RuleKind rule,
                                  Rng& rng,
                                  const PerturbationEngine& engine = PerturbationEngine::bundled());

/// ceil(percent * words / 100) in exact integer arithmetic.
std::size_t words_for_rate(int percent, std::size_t words);

struct SweepPoint {
  int rate_percent = 0;
  double s_i2t = 0.0;
  double s_t2t = 0.0;
};

struct SweepCurves {
  std::vector<SweepPoint> attack;
  std::vector<SweepPoint> random;
  QueryLedger ledger;
};

/// Rates 0, 10, ..., 100.
std::vector<int> default_sweep_rates();

/// Fixed-rate diagnostic sweep averaged over texts. Attack sentences are
/// nested across rates (top-ranked words first, best-of-k each); the random
/// baseline is nested the same way with a seeded word order. S_I2T comes from
/// a fresh eval-encoder generation scored against the original text. Texts
/// are processed on up to `jobs` threads; the reduction runs in input order.
SweepCurves diagnostic_sweep(const std::vector<std::string>& texts,
                             const std::vector<int>& rates_percent, const AttackConfig& config,
                             GenerationOracle& oracle,
                             const PerturbationEngine& engine = PerturbationEngine::bundled(),
                             int jobs = 1);

}  // namespace t2ia
