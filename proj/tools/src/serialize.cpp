#include "serialize.hpp"

#include <cstdio>

#include "t2iattack/random.hpp"

namespace t2ia::cli {

Json ledger_json(const QueryLedger& ledger) {
  Json generation = Json::object();
  Json text_embed = Json::object();
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    const std::string name(to_string(static_cast<QueryPhase>(p)));
    generation[name] = ledger.generation[p];
    text_embed[name] = ledger.text_embed[p];
  }
  Json out;
  out["generation"] = generation;
  out["text_embed"] = text_embed;
  out["attack_generation_queries"] = ledger.attack_generation_queries();
  // The original batch is generated once; this count leaves it out.
  out["attack_generation_queries_without_baseline"] =
      ledger.attack_generation_queries() - ledger.generations(QueryPhase::kBaseline);
  return out;
}

Json result_json(const AttackResult& result, const EvalRow* evaluation) {
  Json out;
  out["original_text"] = result.original_text;
  out["adversarial_text"] = result.adversarial_text;
  out["word_count"] = result.word_count;
  out["perturbed_word_indices"] = result.perturbed_word_indices;
  out["final_divergence"] =
      result.final_divergence ? Json(*result.final_divergence) : Json(nullptr);
  out["terminated_by"] = std::string(to_string(result.terminated_by));

  Json ranking = Json::array();
  for (const auto& w : result.trace.ranking) {
    ranking.push_back(Json{{"word_index", w.word_index}, {"score", w.score}});
  }
  Json steps = Json::array();
  for (const auto& step : result.trace.steps) {
    Json candidates = Json::array();
    for (std::size_t j = 0; j < step.candidate_texts.size(); ++j) {
      candidates.push_back(
          Json{{"text", step.candidate_texts[j]}, {"divergence", step.divergences[j]}});
    }
    steps.push_back(Json{{"word_index", step.word_index},
                         {"candidates", candidates},
                         {"chosen", step.chosen},
                         {"ledger", ledger_json(step.ledger)}});
  }
  Json trace;
  trace["ranking"] = ranking;
  trace["steps"] = steps;
  trace["skipped_words"] = result.trace.skipped_words;
  trace["ranking_queries"] = result.trace.ranking_queries;
  trace["candidate_shortfall"] = result.trace.candidate_shortfall;
  out["trace"] = trace;
  out["ledger"] = ledger_json(result.ledger);

  if (evaluation != nullptr) {
    out["evaluation"] = Json{{"ori_s_i2t", evaluation->ori_s_i2t},
                             {"adv_s_i2t", evaluation->adv_s_i2t},
                             {"s_t2t", evaluation->s_t2t},
                             {"adv_len", evaluation->adv_len},
                             {"l_distance", evaluation->l_distance},
                             {"avg_query", evaluation->avg_query},
                             {"true_query", evaluation->true_query}};
  }
  out["error"] = result.error ? Json(*result.error) : Json(nullptr);
  return out;
}

std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_bytes(bytes)));
  return buf;
}

}  // namespace t2ia::cli
