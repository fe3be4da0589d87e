#include "t2iattack/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "t2iattack/error.hpp"

namespace t2ia {

void AttackConfig::validate() const {
  objective.validate();
  if (n_images < 1) throw Error(ErrorCode::kConfiguration, "n_images must be at least 1");
  if (candidates_per_word < 1) throw Error(ErrorCode::kConfiguration, "k must be at least 1");
  if (max_perturbed_words < 1) {
    throw Error(ErrorCode::kConfiguration, "max_perturbed_words must be at least 1");
  }
  if (std::isnan(threshold)) throw Error(ErrorCode::kConfiguration, "threshold is NaN");
  if (objective.kind == ObjectiveKind::kTwoSample && objective.variant == TwoSampleVariant::kT &&
      n_images < 2) {
    throw Error(ErrorCode::kConfiguration, "the t statistic needs n_images >= 2");
  }
}

std::string_view to_string(Termination termination) {
  return termination == Termination::kThreshold ? "threshold" : "budget";
}

OriginalReference prepare_reference(std::string_view text, const AttackConfig& config,
                                    OracleSession& session) {
  Sentence sentence = tokenize(text);
  if (sentence.word_count() == 0) {
    throw Error(ErrorCode::kEmptyInput, "text has no word tokens");
  }
  Embedding text_embedding = session.embed_text(text, EncoderRole::kAttack, QueryPhase::kBaseline);
  EmbeddingBatch images =
      session.generate(text, config.n_images, EncoderRole::kAttack, QueryPhase::kBaseline);
  return {std::move(sentence), std::move(text_embedding), std::move(images)};
}

double score_text(std::string_view text, const OriginalReference& reference,
                  const AttackConfig& config, OracleSession& session, QueryPhase phase) {
  const EmbeddingBatch images =
      session.generate(text, config.n_images, EncoderRole::kAttack, phase);
  if (config.objective.uses_adv_text()) {
    const Embedding adv_text = session.embed_text(text, EncoderRole::kAttack, phase);
    return evaluate(config.objective,
                    {reference.text_embedding, adv_text, reference.images, images});
  }
  return evaluate(config.objective,
                  {reference.text_embedding, reference.text_embedding, reference.images, images});
}

namespace {

bool has_words(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return false;
  return tokenize(text).word_count() > 0;
}

}  // namespace

std::vector<WordImportance> rank_word_importance(const OriginalReference& reference,
                                                 const AttackConfig& config,
                                                 OracleSession& session) {
  std::vector<WordImportance> out;
  for (std::size_t index : reference.sentence.word_indices()) {
    const std::string without = reference.sentence.text_without(index);
    double score = 0.0;
    if (has_words(without)) {
      score = score_text(without, reference, config, session, QueryPhase::kRanking);
      if (std::isnan(score)) score = -std::numeric_limits<double>::infinity();
    }
    out.push_back({index, score});
  }
  std::stable_sort(out.begin(), out.end(), [](const WordImportance& a, const WordImportance& b) {
    return a.score > b.score;
  });
  return out;
}

std::optional<StepOutcome> perturb_word_step(const CandidateSentence& state,
                                             std::size_t word_index, const AttackConfig& config,
                                             const OriginalReference& reference,
                                             OracleSession& session,
                                             const PerturbationEngine& engine) {
  Rng rng(hash_combine(config.seed, 0x5354455000000000ULL + word_index));
  StepOutcome outcome;
  outcome.word_index = word_index;
  try {
    outcome.candidates = generate_candidates(state, word_index, config.rule,
                                             config.candidates_per_word, rng, engine);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoEligibleCharacter || e.code() == ErrorCode::kNoApplicableRule) {
      return std::nullopt;
    }
    throw;
  }
  if (outcome.candidates.empty()) return std::nullopt;

  for (const auto& candidate : outcome.candidates) {
    outcome.divergences.push_back(
        score_text(candidate.text(), reference, config, session, QueryPhase::kPerturbation));
  }
  for (std::size_t i = 1; i < outcome.divergences.size(); ++i) {
    if (outcome.divergences[i] > outcome.divergences[outcome.chosen]) outcome.chosen = i;
  }
  return outcome;
}

AttackResult run_attack(std::string_view text, const AttackConfig& config,
                        GenerationOracle& oracle, const PerturbationEngine& engine) {
  config.validate();
  OracleSession session(oracle);
  AttackResult result;
  result.original_text = std::string(text);
  result.adversarial_text = result.original_text;

  std::optional<CandidateSentence> state;
  try {
    const OriginalReference reference = prepare_reference(text, config, session);
    result.word_count = reference.sentence.word_count();
    state = CandidateSentence::identity(reference.sentence);
    result.adversarial_text = state->text();

    result.trace.ranking = rank_word_importance(reference, config, session);
    result.trace.ranking_queries = session.snapshot().generations(QueryPhase::kRanking);

    int steps = 0;
    for (const auto& entry : result.trace.ranking) {
      if (steps == config.max_perturbed_words) break;
      auto outcome =
          perturb_word_step(*state, entry.word_index, config, reference, session, engine);
      if (!outcome) {
        result.trace.skipped_words.push_back(entry.word_index);
        continue;
      }
      ++steps;
      result.trace.candidate_shortfall +=
          static_cast<std::uint64_t>(config.candidates_per_word) - outcome->candidates.size();

      AttackStep step;
      step.word_index = entry.word_index;
      for (const auto& c : outcome->candidates) step.candidate_texts.push_back(c.text());
      step.divergences = outcome->divergences;
      step.chosen = outcome->chosen;
      step.ledger = session.snapshot();
      result.trace.steps.push_back(std::move(step));

      state = outcome->best();
      result.adversarial_text = state->text();
      result.final_divergence = outcome->divergence();
      if (outcome->divergence() >= config.threshold) {
        result.terminated_by = Termination::kThreshold;
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kOracleUnavailable && e.code() != ErrorCode::kProtocol) throw;
    result.error = e.what();
  }
  if (state) {
    result.perturbed_word_indices.assign(state->perturbed_word_indices.begin(),
                                         state->perturbed_word_indices.end());
  }
  result.ledger = session.snapshot();
  return result;
}

std::size_t words_for_rate(int percent, std::size_t words) {
  if (percent < 0 || percent > 100) throw Error(ErrorCode::kPrecondition, "rate out of range");
  return (static_cast<std::size_t>(percent) * words + 99) / 100;
}

CandidateSentence random_baseline(const Sentence& sentence, double rate, RuleKind rule, Rng& rng,
                                  const PerturbationEngine& engine) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error(ErrorCode::kPrecondition, "rate must lie in [0, 1]");
  }
  std::vector<std::size_t> order = sentence.word_indices();
  // Tolerate binary representation error, e.g. 0.3 * 10.
  const auto target = static_cast<std::size_t>(
      std::ceil(rate * static_cast<double>(order.size()) - 1e-9));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  CandidateSentence out = CandidateSentence::identity(sentence);
  for (std::size_t index : order) {
    if (out.perturbed_word_indices.size() >= target) break;
    const std::string core(out.sentence[index].core());
    WordEdit edit;
    try {
      edit = engine.apply(rule, core, rng);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoEligibleCharacter ||
          e.code() == ErrorCode::kNoApplicableRule) {
        continue;
      }
      throw;
    }
    out.sentence = out.sentence.with_core(index, edit.text);
    out.perturbed_word_indices.insert(index);
    out.edits.push_back({index, std::move(edit.operation), edit.position});
  }
  return out;
}

std::vector<int> default_sweep_rates() {
  std::vector<int> rates;
  for (int r = 0; r <= 100; r += 10) rates.push_back(r);
  return rates;
}

namespace {

struct TextSweep {
  std::vector<SweepPoint> attack;
  std::vector<SweepPoint> random;
  QueryLedger ledger;
};

TextSweep sweep_one(const std::string& text, std::size_t text_index,
                    const std::vector<int>& rates, const AttackConfig& config,
                    GenerationOracle& oracle, const PerturbationEngine& engine) {
  OracleSession session(oracle);
  const OriginalReference reference = prepare_reference(text, config, session);
  const auto ranking = rank_word_importance(reference, config, session);
  const Embedding eval_text = session.embed_text(text, EncoderRole::kEval, QueryPhase::kEvaluation);

  std::map<std::string, std::pair<double, double>> scored;
  auto score = [&](const std::string& candidate) {
    auto it = scored.find(candidate);
    if (it != scored.end()) return it->second;
    const EmbeddingBatch images =
        session.generate(candidate, config.n_images, EncoderRole::kEval, QueryPhase::kEvaluation);
    const Embedding adv_text =
        session.embed_text(candidate, EncoderRole::kEval, QueryPhase::kEvaluation);
    const std::pair<double, double> s{clip_score_i2t(eval_text, images),
                                      clip_score_t2t(eval_text, adv_text)};
    scored.emplace(candidate, s);
    return s;
  };

  std::vector<int> ascending = rates;
  std::sort(ascending.begin(), ascending.end());
  ascending.erase(std::unique(ascending.begin(), ascending.end()), ascending.end());

  const std::size_t words = reference.sentence.word_count();
  std::map<int, std::string> attack_texts;
  CandidateSentence state = CandidateSentence::identity(reference.sentence);
  std::size_t next = 0;
  for (int rate : ascending) {
    const std::size_t target = words_for_rate(rate, words);
    while (state.perturbed_word_indices.size() < target && next < ranking.size()) {
      auto outcome = perturb_word_step(state, ranking[next++].word_index, config, reference,
                                       session, engine);
      if (outcome) state = outcome->best();
    }
    attack_texts[rate] = state.text();
  }

  TextSweep out;
  const std::uint64_t random_seed = hash_combine(config.seed ^ 0x52414e444f4dULL, text_index);
  for (int rate : rates) {
    const auto a = score(attack_texts.at(rate));
    out.attack.push_back({rate, a.first, a.second});
    Rng rng(random_seed);
    const CandidateSentence baseline =
        random_baseline(reference.sentence, rate / 100.0, config.rule, rng, engine);
    const auto r = score(baseline.text());
    out.random.push_back({rate, r.first, r.second});
  }
  out.ledger = session.snapshot();
  return out;
}

}  // namespace

SweepCurves diagnostic_sweep(const std::vector<std::string>& texts,
                             const std::vector<int>& rates_percent, const AttackConfig& config,
                             GenerationOracle& oracle, const PerturbationEngine& engine,
                             int jobs) {
  config.validate();
  if (texts.empty()) throw Error(ErrorCode::kEmptyInput, "no texts to sweep");
  if (rates_percent.empty()) throw Error(ErrorCode::kPrecondition, "no rates given");
  for (int r : rates_percent) words_for_rate(r, 1);

  std::vector<std::optional<TextSweep>> per_text(texts.size());
  std::vector<std::exception_ptr> errors(texts.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < texts.size(); i = cursor++) {
      try {
        per_text[i] = sweep_one(texts[i], i, rates_percent, config, oracle, engine);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, texts.size()); ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepCurves curves;
  for (int rate : rates_percent) {
    curves.attack.push_back({rate, 0.0, 0.0});
    curves.random.push_back({rate, 0.0, 0.0});
  }
  for (const auto& t : per_text) {
    for (std::size_t j = 0; j < rates_percent.size(); ++j) {
      curves.attack[j].s_i2t += t->attack[j].s_i2t;
      curves.attack[j].s_t2t += t->attack[j].s_t2t;
      curves.random[j].s_i2t += t->random[j].s_i2t;
      curves.random[j].s_t2t += t->random[j].s_t2t;
    }
    for (std::size_t p = 0; p < kPhaseCount; ++p) {
      curves.ledger.generation[p] += t->ledger.generation[p];
      curves.ledger.text_embed[p] += t->ledger.text_embed[p];
    }
  }
  const auto n = static_cast<double>(texts.size());
  for (auto* curve : {&curves.attack, &curves.random}) {
    for (auto& p : *curve) {
      p.s_i2t /= n;
      p.s_t2t /= n;
    }
  }
  return curves;
}

}  // namespace t2ia
