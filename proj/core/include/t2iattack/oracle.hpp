#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "t2iattack/embedding.hpp"

namespace t2ia {

enum class EncoderRole { kAttack, kEval };

std::string_view to_string(EncoderRole role);

/// Black-box access to the victim generator and the CLIP-style encoders.
///
/// Implementations must be callable from several threads at once.
class GenerationOracle {
 public:
  virtual ~GenerationOracle() = default;

  /// n image embeddings generated from `text` and encoded with `encoder`.
  virtual EmbeddingBatch generate(std::string_view text, int n, EncoderRole encoder) = 0;
  virtual Embedding embed_text(std::string_view text, EncoderRole encoder) = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string model_id() const = 0;
};

enum class QueryPhase { kBaseline, kRanking, kPerturbation, kEvaluation };
inline constexpr std::size_t kPhaseCount = 4;

std::string_view to_string(QueryPhase phase);

/// Query counts per phase. One generation query is one submitted text,
/// whatever the number of images returned.
struct QueryLedger {
  std::array<std::uint64_t, kPhaseCount> generation{};
  std::array<std::uint64_t, kPhaseCount> text_embed{};

  std::uint64_t generation_queries() const;
  std::uint64_t text_embed_queries() const;
  /// Baseline + ranking + perturbation; evaluation is excluded.
  std::uint64_t attack_generation_queries() const;
  std::uint64_t generations(QueryPhase phase) const {
    return generation[static_cast<std::size_t>(phase)];
  }

  friend bool operator==(const QueryLedger&, const QueryLedger&) = default;
};

struct QueryReport {
  double avg_query = 0.0;   // raw attack-phase generation count
  double true_query = 0.0;  // avg_query minus sentence length
};

QueryReport query_report(const QueryLedger& ledger, double sentence_length);

/// Counts every query routed to an oracle, attributed to a phase.
class OracleSession {
 public:
  explicit OracleSession(GenerationOracle& oracle) : oracle_(&oracle) {}

  EmbeddingBatch generate(std::string_view text, int n, EncoderRole encoder, QueryPhase phase);
  Embedding embed_text(std::string_view text, EncoderRole encoder, QueryPhase phase);

  QueryLedger snapshot() const;
  GenerationOracle& oracle() const { return *oracle_; }

 private:
  GenerationOracle* oracle_;
  mutable std::mutex mutex_;
  QueryLedger ledger_;
};

/// Parameters of the deterministic test-double victim.
struct SyntheticVictimSpec {
  std::size_t dimension = kDefaultDimension;
  // Lowercase word -> feature weight in the generator.
  std::map<std::string, double> keyword_sensitivity;
  // Norm of the Gaussian perturbation added to each image before renormalizing.
  double noise_scale = 0.6;
  int ngram_size = 3;
  // Text encoders see keyword weights raised to this power.
  double encoder_keyword_gain = 2.0 / 3.0;
  // Rotation angle (radians) separating the eval encoder from the attack encoder.
  double eval_rotation = 0.6;

  static std::map<std::string, double> bundled_keywords();
  static std::map<std::string, double> parse_keywords(std::string_view contents);
};

/// Character n-gram hashing victim.
///
/// Both text encoders read the raw surface of every word (case-sensitive
/// n-grams); the generator reads case-folded n-grams and (n-1)-grams, so
/// some edits fool the text encoder more than the generator and vice versa.
/// Image noise is keyed by (seed, encoder, sample index) and shared across
/// texts, so batches for two texts differ only through their base vectors.
class SyntheticOracle final : public GenerationOracle {
 public:
  SyntheticOracle(SyntheticVictimSpec spec, std::uint64_t seed);

  EmbeddingBatch generate(std::string_view text, int n, EncoderRole encoder) override;
  Embedding embed_text(std::string_view text, EncoderRole encoder) override;
  std::size_t dimension() const override { return spec_.dimension; }
  std::string model_id() const override { return "synthetic-victim-v1"; }

  /// Noise-free generator direction for the text, in attack-encoder space.
  Embedding base_vector(std::string_view text) const;
  const SyntheticVictimSpec& spec() const { return spec_; }

 private:
  std::vector<double> text_features(std::string_view text) const;
  std::vector<double> generator_features(std::string_view text) const;
  void add_ngrams(std::u32string_view word, int n, double weight, std::vector<double>& out) const;
  std::vector<double> rotate_to_eval(std::vector<double> v) const;
  double keyword_weight(std::string_view core) const;

  SyntheticVictimSpec spec_;
  std::uint64_t seed_;
};

enum class OracleMode { kSynthetic, kRemote };

struct OracleConfig {
  OracleMode mode = OracleMode::kSynthetic;
  int n_images = 15;
  std::uint64_t seed = 0;
  std::string endpoint;
  std::string attack_encoder_id = "attack";
  std::string eval_encoder_id = "eval";
  std::string bearer_token;
  int retry_cap = 3;
  double timeout_seconds = 120.0;
  SyntheticVictimSpec synthetic;

  /// Throws Error(kConfiguration).
  void validate() const;
};

std::unique_ptr<GenerationOracle> make_oracle(const OracleConfig& config);

}  // namespace t2ia
