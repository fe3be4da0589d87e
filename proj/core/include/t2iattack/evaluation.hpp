#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "t2iattack/attack.hpp"
#include "t2iattack/oracle.hpp"

namespace t2ia {

/// Per-text evaluation of one attack.
struct EvalRow {
  std::string dataset;
  std::string attacker;  // rule name
  std::string objective;
  std::string original_text;
  std::string adversarial_text;
  double ori_s_i2t = 0.0;
  double adv_s_i2t = 0.0;
  double s_t2t = 0.0;
  std::size_t adv_len = 0;
  std::size_t l_distance = 0;
  double avg_query = 0.0;
  double true_query = 0.0;
};

/// Scores both the original and adversarial generations against the
/// original text's eval embedding. Evaluation generations go to a separate
/// session so they never mix with the attack's ledger.
EvalRow evaluate_attack(const AttackResult& result, GenerationOracle& oracle, int n_images,
                        std::string_view dataset, std::string_view attacker,
                        std::string_view objective, QueryLedger* evaluation_ledger = nullptr);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

/// One Table-2 style line: a (dataset, attacker) group.
struct EvalReport {
  std::string dataset;
  std::string attacker;
  std::size_t count = 0;
  MeanStd ori_s_i2t;
  MeanStd adv_s_i2t;
  double adv_len = 0.0;
  double l_distance = 0.0;
  double avg_query = 0.0;
  double true_query = 0.0;
};

/// Groups rows by dataset (first appearance) then rule (typo, glyph,
/// phonetic, then others by name).
std::vector<EvalReport> aggregate(std::span<const EvalRow> rows);

enum class ReportFormat { kTable, kCsv, kJson };

ReportFormat parse_report_format(std::string_view name);

/// Throws Error(kPrecondition) for no rows.
std::string emit_report(std::span<const EvalReport> reports, ReportFormat format);

/// rate,s_i2t,s_t2t lines with a header.
std::string emit_curve_csv(std::span<const SweepPoint> points);

std::string csv_escape(std::string_view field);

struct HumanRating {
  std::string sample_id;
  std::string annotator_id;
  int n1 = 0;  // original text vs original image
  int n2 = 0;  // original text vs adversarial image
};

/// Per annotator: N_c / (N_total - N_u) where N_u counts N2 - N1 > 1 and N_c
/// counts N1 - N2 > 1. Returns the mean over annotators. Throws
/// Error(kAllSamplesExcluded) when an annotator has N_total == N_u.
double human_eval_score(std::span<const HumanRating> ratings);

/// CSV with header sample_id,annotator_id,N1,N2.
std::vector<HumanRating> read_human_ratings(std::istream& in);

/// Ordinary least-squares slope of S_I2T on S_T2T with a free intercept.
/// Throws Error(kUndefinedSlope) when all S_T2T values coincide.
double slope_analysis(std::span<const SweepPoint> points);

}  // namespace t2ia
