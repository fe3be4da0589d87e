#include "t2iattack/oracle.hpp"

#include <cmath>
#include <cstdio>

#include "t2iattack/bundled_data.hpp"
#include "t2iattack/error.hpp"
#include "t2iattack/random.hpp"
#include "t2iattack/remote_oracle.hpp"
#include "t2iattack/text_perturbation.hpp"
#include "t2iattack/utf8.hpp"

namespace t2ia {

std::string_view to_string(EncoderRole role) {
  return role == EncoderRole::kAttack ? "attack" : "eval";
}

std::string_view to_string(QueryPhase phase) {
  switch (phase) {
    case QueryPhase::kBaseline: return "baseline";
    case QueryPhase::kRanking: return "ranking";
    case QueryPhase::kPerturbation: return "perturbation";
    case QueryPhase::kEvaluation: return "evaluation";
  }
  return "?";
}

std::uint64_t QueryLedger::generation_queries() const {
  std::uint64_t s = 0;
  for (auto v : generation) s += v;
  return s;
}

std::uint64_t QueryLedger::text_embed_queries() const {
  std::uint64_t s = 0;
  for (auto v : text_embed) s += v;
  return s;
}

std::uint64_t QueryLedger::attack_generation_queries() const {
  return generations(QueryPhase::kBaseline) + generations(QueryPhase::kRanking) +
         generations(QueryPhase::kPerturbation);
}

QueryReport query_report(const QueryLedger& ledger, double sentence_length) {
  if (!(sentence_length >= 1.0)) {
    throw Error(ErrorCode::kPrecondition, "sentence length must be at least 1");
  }
  const auto queries = static_cast<double>(ledger.attack_generation_queries());
  return {queries, queries - sentence_length};
}

EmbeddingBatch OracleSession::generate(std::string_view text, int n, EncoderRole encoder,
                                       QueryPhase phase) {
  {
    // Counted before the call: a failed query still reached the victim.
    std::lock_guard lock(mutex_);
    ++ledger_.generation[static_cast<std::size_t>(phase)];
  }
  return oracle_->generate(text, n, encoder);
}

Embedding OracleSession::embed_text(std::string_view text, EncoderRole encoder, QueryPhase phase) {
  {
    std::lock_guard lock(mutex_);
    ++ledger_.text_embed[static_cast<std::size_t>(phase)];
  }
  return oracle_->embed_text(text, encoder);
}

QueryLedger OracleSession::snapshot() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

std::map<std::string, double> SyntheticVictimSpec::parse_keywords(std::string_view contents) {
  std::map<std::string, double> out;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kConfiguration, "keyword line without TAB: " + std::string(line));
    }
    const std::string weight(line.substr(tab + 1));
    out[utf8::lower(line.substr(0, tab))] = std::stod(weight);
  }
  return out;
}

std::map<std::string, double> SyntheticVictimSpec::bundled_keywords() {
  return parse_keywords(bundled::synthetic_keywords());
}

SyntheticOracle::SyntheticOracle(SyntheticVictimSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  if (spec_.dimension < 2) throw Error(ErrorCode::kConfiguration, "dimension must be >= 2");
  if (spec_.ngram_size < 1) throw Error(ErrorCode::kConfiguration, "ngram_size must be >= 1");
  if (!(spec_.noise_scale >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "noise_scale must be non-negative");
  }
}

double SyntheticOracle::keyword_weight(std::string_view core) const {
  if (spec_.keyword_sensitivity.empty()) return 1.0;
  auto it = spec_.keyword_sensitivity.find(utf8::lower(core));
  return it == spec_.keyword_sensitivity.end() ? 1.0 : it->second;
}

void SyntheticOracle::add_ngrams(std::u32string_view word, int n, double weight,
                                 std::vector<double>& out) const {
  std::u32string padded;
  padded.reserve(word.size() + 2);
  padded += U'<';
  padded += word;
  padded += U'>';
  const auto len = static_cast<std::size_t>(n);
  if (padded.size() < len) {
    const std::uint64_t h = hash_bytes(utf8::encode(padded), static_cast<std::uint64_t>(n));
    out[h % out.size()] += (h >> 63) != 0 ? -weight : weight;
    return;
  }
  for (std::size_t i = 0; i + len <= padded.size(); ++i) {
    const std::uint64_t h =
        hash_bytes(utf8::encode(padded.substr(i, len)), static_cast<std::uint64_t>(n));
    out[h % out.size()] += (h >> 63) != 0 ? -weight : weight;
  }
}

namespace {

void add_normalized(const std::vector<double>& word, double weight, std::vector<double>& total) {
  double s = 0.0;
  for (double v : word) s += v * v;
  if (s == 0.0) return;
  const double scale = weight / std::sqrt(s);
  for (std::size_t i = 0; i < word.size(); ++i) total[i] += scale * word[i];
}

}  // namespace

std::vector<double> SyntheticOracle::text_features(std::string_view text) const {
  const Sentence sentence = tokenize(text);
  std::vector<double> total(spec_.dimension, 0.0);
  std::vector<double> word(spec_.dimension);
  for (const auto& token : sentence.tokens()) {
    if (!token.is_word) continue;
    std::fill(word.begin(), word.end(), 0.0);
    add_ngrams(utf8::decode(token.core()), spec_.ngram_size, 1.0, word);
    add_normalized(word, std::pow(keyword_weight(token.core()), spec_.encoder_keyword_gain), total);
  }
  return total;
}

std::vector<double> SyntheticOracle::generator_features(std::string_view text) const {
  const Sentence sentence = tokenize(text);
  std::vector<double> total(spec_.dimension, 0.0);
  std::vector<double> word(spec_.dimension);
  for (const auto& token : sentence.tokens()) {
    if (!token.is_word) continue;
    std::fill(word.begin(), word.end(), 0.0);
    std::u32string folded = utf8::decode(token.core());
    for (auto& c : folded) c = utf8::to_lower(c);
    add_ngrams(folded, spec_.ngram_size, 1.0, word);
    if (spec_.ngram_size > 1) add_ngrams(folded, spec_.ngram_size - 1, 1.0, word);
    add_normalized(word, keyword_weight(token.core()), total);
  }
  return total;
}

std::vector<double> SyntheticOracle::rotate_to_eval(std::vector<double> v) const {
  const double c = std::cos(spec_.eval_rotation);
  const double s = std::sin(spec_.eval_rotation);
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
    const double a = v[i];
    const double b = v[i + 1];
    v[i] = c * a - s * b;
    v[i + 1] = s * a + c * b;
  }
  return v;
}

Embedding SyntheticOracle::base_vector(std::string_view text) const {
  return l2_normalize(generator_features(text));
}

EmbeddingBatch SyntheticOracle::generate(std::string_view text, int n, EncoderRole encoder) {
  if (n < 1) throw Error(ErrorCode::kPrecondition, "n must be at least 1");
  const Embedding base = base_vector(text);
  const std::uint64_t key =
      hash_combine(seed_, encoder == EncoderRole::kAttack ? 0x61747461636bULL : 0x6576616cULL);
  const double per_coordinate =
      spec_.noise_scale / std::sqrt(static_cast<double>(spec_.dimension));

  EmbeddingBatch batch;
  batch.source_text = std::string(text);
  char id[32];
  std::snprintf(id, sizeof id, "syn-%016llx", static_cast<unsigned long long>(hash_combine(key, hash_bytes(text))));
  batch.query_id = id;
  batch.embeddings.reserve(static_cast<std::size_t>(n));
  std::vector<double> v(spec_.dimension);
  for (int i = 0; i < n; ++i) {
    Rng rng(hash_combine(key, static_cast<std::uint64_t>(i)));
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = base[j] + (per_coordinate > 0.0 ? per_coordinate * rng.gaussian() : 0.0);
    }
    if (encoder == EncoderRole::kEval) {
      batch.embeddings.push_back(l2_normalize(rotate_to_eval(v)));
    } else {
      batch.embeddings.push_back(l2_normalize(v));
    }
  }
  return batch;
}

Embedding SyntheticOracle::embed_text(std::string_view text, EncoderRole encoder) {
  std::vector<double> features = text_features(text);
  if (encoder == EncoderRole::kEval) features = rotate_to_eval(std::move(features));
  return l2_normalize(features);
}

void OracleConfig::validate() const {
  if (n_images < 1) throw Error(ErrorCode::kConfiguration, "n_images must be at least 1");
  if (mode == OracleMode::kRemote && endpoint.empty()) {
    throw Error(ErrorCode::kConfiguration, "remote oracle requires an endpoint");
  }
  if (!attack_encoder_id.empty() && !eval_encoder_id.empty() &&
      attack_encoder_id == eval_encoder_id) {
    throw Error(ErrorCode::kConfiguration, "attack and eval encoders must differ");
  }
  if (retry_cap < 0) throw Error(ErrorCode::kConfiguration, "retry_cap must be >= 0");
}

std::unique_ptr<GenerationOracle> make_oracle(const OracleConfig& config) {
  config.validate();
  if (config.mode == OracleMode::kRemote) return std::make_unique<RemoteOracle>(config);
  return std::make_unique<SyntheticOracle>(config.synthetic, config.seed);
}

}  // namespace t2ia
