#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "t2iattack/attack.hpp"
#include "t2iattack/oracle.hpp"

namespace t2ia {

/// Everything one CLI run needs, loaded from a YAML file.
struct RunConfig {
  AttackConfig attack;
  OracleConfig oracle;
  std::string dataset = "custom";
  std::string reference_corpus_path;  // empty: bundled captions
  std::string homoglyph_table_path;   // empty: bundled table
  std::string phonetic_table_path;
  // Per-objective thresholds; used when `threshold` is not set explicitly.
  std::map<std::string, double> objective_thresholds;
  bool threshold_explicit = false;
  // Objective coefficients as written in the file; unset means the
  // objective's own default.
  std::optional<double> alpha;
  std::optional<double> beta;
};

/// Throws Error(kConfiguration) for malformed or invalid content.
RunConfig parse_run_config(std::string_view yaml_text);
RunConfig load_run_config(const std::string& path);

/// Canonical YAML rendering, used as the manifest's config snapshot.
std::string dump_run_config(const RunConfig& config);

/// Switches the objective by name, keeping configured coefficients and
/// re-resolving the threshold.
void set_objective(RunConfig& config, std::string_view name);

/// Applies the objective's calibrated threshold unless one was set
/// explicitly; +infinity when the objective has none.
void resolve_threshold(RunConfig& config);

/// Builds the reference corpus for KL-2 from the config (bundled captions
/// by default), embedding each text with the attack encoder.
std::shared_ptr<const ReferenceCorpus> build_reference_corpus(const RunConfig& config,
                                                              GenerationOracle& oracle);

PerturbationEngine load_perturbation_engine(const RunConfig& config);

}  // namespace t2ia
