#include "t2iattack/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "t2iattack/error.hpp"

namespace t2ia {

namespace {

template <typename T>
T get(const YAML::Node& node, const char* key, T fallback) {
  const YAML::Node child = node[key];
  if (!child) return fallback;
  try {
    return child.as<T>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("bad value for '") + key + "': " + e.what());
  }
}

double get_threshold(const YAML::Node& node) {
  const std::string raw = node.as<std::string>();
  if (raw == "inf" || raw == "+inf" || raw == ".inf") return std::numeric_limits<double>::infinity();
  if (raw == "-inf" || raw == "-.inf") return -std::numeric_limits<double>::infinity();
  return node.as<double>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfiguration, "cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* const kKnownKeys[] = {
    "objective", "alpha", "beta", "clip_raw_formula", "rule", "candidates_per_word",
    "n_images", "threshold", "thresholds", "max_perturbed_words", "seed", "dataset",
    "reference_corpus", "tables", "oracle"};

}  // namespace

RunConfig parse_run_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("invalid YAML: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw Error(ErrorCode::kConfiguration, "config must be a mapping");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    bool known = false;
    for (const char* k : kKnownKeys) known = known || key == k;
    if (!known) throw Error(ErrorCode::kConfiguration, "unknown config key '" + key + "'");
  }

  RunConfig config;
  AttackConfig& attack = config.attack;
  DivergenceObjective& objective = attack.objective;
  if (root["alpha"]) config.alpha = get<double>(root, "alpha", 0.0);
  if (root["beta"]) config.beta = get<double>(root, "beta", 0.0);

  attack.rule = parse_rule(get<std::string>(root, "rule", "typo"));
  attack.candidates_per_word = get<int>(root, "candidates_per_word", kDefaultCandidatesPerWord);
  attack.n_images = get<int>(root, "n_images", 15);
  attack.max_perturbed_words = get<int>(root, "max_perturbed_words", 3);
  attack.seed = get<std::uint64_t>(root, "seed", 0);
  if (root["threshold"]) {
    try {
      attack.threshold = get_threshold(root["threshold"]);
    } catch (const YAML::Exception& e) {
      throw Error(ErrorCode::kConfiguration, std::string("bad threshold: ") + e.what());
    }
    config.threshold_explicit = true;
  }
  if (const auto thresholds = root["thresholds"]) {
    if (!thresholds.IsMap()) throw Error(ErrorCode::kConfiguration, "thresholds must be a map");
    for (const auto& kv : thresholds) {
      try {
        config.objective_thresholds[kv.first.as<std::string>()] = get_threshold(kv.second);
      } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::kConfiguration, std::string("bad threshold: ") + e.what());
      }
    }
  }
  config.dataset = get<std::string>(root, "dataset", "custom");
  config.reference_corpus_path = get<std::string>(root, "reference_corpus", "");
  if (const auto tables = root["tables"]) {
    config.homoglyph_table_path = get<std::string>(tables, "homoglyphs", "");
    config.phonetic_table_path = get<std::string>(tables, "phonetics", "");
  }

  OracleConfig& oracle = config.oracle;
  oracle.seed = attack.seed;
  oracle.n_images = attack.n_images;
  oracle.synthetic.keyword_sensitivity = SyntheticVictimSpec::bundled_keywords();
  if (const auto node = root["oracle"]) {
    const auto mode = get<std::string>(node, "mode", "synthetic");
    if (mode == "synthetic") {
      oracle.mode = OracleMode::kSynthetic;
    } else if (mode == "remote") {
      oracle.mode = OracleMode::kRemote;
    } else {
      throw Error(ErrorCode::kConfiguration, "unknown oracle mode '" + mode + "'");
    }
    oracle.endpoint = get<std::string>(node, "endpoint", "");
    oracle.attack_encoder_id = get<std::string>(node, "attack_encoder", oracle.attack_encoder_id);
    oracle.eval_encoder_id = get<std::string>(node, "eval_encoder", oracle.eval_encoder_id);
    oracle.retry_cap = get<int>(node, "retry_cap", oracle.retry_cap);
    oracle.timeout_seconds = get<double>(node, "timeout_seconds", oracle.timeout_seconds);
    if (const auto syn = node["synthetic"]) {
      auto& spec = oracle.synthetic;
      spec.dimension = get<std::size_t>(syn, "dimension", spec.dimension);
      spec.noise_scale = get<double>(syn, "noise_scale", spec.noise_scale);
      spec.ngram_size = get<int>(syn, "ngram_size", spec.ngram_size);
      spec.encoder_keyword_gain = get<double>(syn, "encoder_keyword_gain", spec.encoder_keyword_gain);
      spec.eval_rotation = get<double>(syn, "eval_rotation", spec.eval_rotation);
      if (const auto kw = syn["keywords"]) {
        if (kw.IsScalar() && kw.as<std::string>() == "bundled") {
          // already loaded
        } else if (kw.IsScalar() && kw.as<std::string>() == "none") {
          spec.keyword_sensitivity.clear();
        } else if (kw.IsMap()) {
          spec.keyword_sensitivity.clear();
          for (const auto& kv : kw) {
            spec.keyword_sensitivity[kv.first.as<std::string>()] = kv.second.as<double>();
          }
        } else {
          throw Error(ErrorCode::kConfiguration, "keywords must be 'bundled', 'none' or a map");
        }
      }
    }
  }

  set_objective(config, get<std::string>(root, "objective", "2st-t"));
  objective.clip_raw_formula = get<bool>(root, "clip_raw_formula", false);
  if (objective.kind != ObjectiveKind::kKl2) attack.validate();
  oracle.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

void set_objective(RunConfig& config, std::string_view name) {
  DivergenceObjective& objective = config.attack.objective;
  TwoSampleVariant variant = TwoSampleVariant::kT;
  const ObjectiveKind kind = parse_objective_kind(name, &variant);
  const bool dp = kind == ObjectiveKind::kDiffusionOnly;
  objective.kind = kind;
  objective.variant = variant;
  objective.alpha = config.alpha.value_or(dp ? kDefaultDpAlpha : kDefaultAlpha);
  objective.beta = config.beta.value_or(dp ? kDefaultDpBeta : 0.0);
  if (kind != ObjectiveKind::kKl2) objective.corpus.reset();
  resolve_threshold(config);
}

void resolve_threshold(RunConfig& config) {
  if (config.threshold_explicit) return;
  auto it = config.objective_thresholds.find(config.attack.objective.name());
  config.attack.threshold =
      it == config.objective_thresholds.end() ? std::numeric_limits<double>::infinity() : it->second;
}

namespace {

void emit_double(YAML::Emitter& out, double v) {
  if (std::isinf(v)) {
    out << (v > 0 ? "inf" : "-inf");
  } else {
    out << v;
  }
}

}  // namespace

std::string dump_run_config(const RunConfig& config) {
  const auto& a = config.attack;
  const auto& o = config.oracle;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "objective" << YAML::Value << a.objective.name();
  out << YAML::Key << "alpha" << YAML::Value;
  emit_double(out, a.objective.alpha);
  if (a.objective.kind == ObjectiveKind::kDiffusionOnly) {
    out << YAML::Key << "beta" << YAML::Value;
    emit_double(out, a.objective.beta);
  }
  out << YAML::Key << "clip_raw_formula" << YAML::Value << a.objective.clip_raw_formula;
  out << YAML::Key << "rule" << YAML::Value << std::string(to_string(a.rule));
  out << YAML::Key << "candidates_per_word" << YAML::Value << a.candidates_per_word;
  out << YAML::Key << "n_images" << YAML::Value << a.n_images;
  out << YAML::Key << "threshold" << YAML::Value;
  emit_double(out, a.threshold);
  out << YAML::Key << "max_perturbed_words" << YAML::Value << a.max_perturbed_words;
  out << YAML::Key << "seed" << YAML::Value << a.seed;
  out << YAML::Key << "dataset" << YAML::Value << config.dataset;
  if (!config.reference_corpus_path.empty()) {
    out << YAML::Key << "reference_corpus" << YAML::Value << config.reference_corpus_path;
  }
  if (!config.homoglyph_table_path.empty() || !config.phonetic_table_path.empty()) {
    out << YAML::Key << "tables" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "homoglyphs" << YAML::Value << config.homoglyph_table_path;
    out << YAML::Key << "phonetics" << YAML::Value << config.phonetic_table_path;
    out << YAML::EndMap;
  }
  out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value
      << (o.mode == OracleMode::kSynthetic ? "synthetic" : "remote");
  if (o.mode == OracleMode::kRemote) {
    out << YAML::Key << "endpoint" << YAML::Value << o.endpoint;
    out << YAML::Key << "retry_cap" << YAML::Value << o.retry_cap;
    out << YAML::Key << "timeout_seconds" << YAML::Value << o.timeout_seconds;
  }
  out << YAML::Key << "attack_encoder" << YAML::Value << o.attack_encoder_id;
  out << YAML::Key << "eval_encoder" << YAML::Value << o.eval_encoder_id;
  if (o.mode == OracleMode::kSynthetic) {
    const auto& s = o.synthetic;
    out << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "dimension" << YAML::Value << s.dimension;
    out << YAML::Key << "noise_scale" << YAML::Value << s.noise_scale;
    out << YAML::Key << "ngram_size" << YAML::Value << s.ngram_size;
    out << YAML::Key << "encoder_keyword_gain" << YAML::Value << s.encoder_keyword_gain;
    out << YAML::Key << "eval_rotation" << YAML::Value << s.eval_rotation;
    out << YAML::Key << "keywords" << YAML::Value << YAML::BeginMap;
    for (const auto& [word, weight] : s.keyword_sensitivity) {
      out << YAML::Key << word << YAML::Value << weight;
    }
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::shared_ptr<const ReferenceCorpus> build_reference_corpus(const RunConfig& config,
                                                              GenerationOracle& oracle) {
  std::vector<std::string> texts = config.reference_corpus_path.empty()
                                       ? ReferenceCorpus::bundled_texts()
                                       : ReferenceCorpus::read_texts(read_file(
                                             config.reference_corpus_path));
  std::vector<Embedding> embeddings;
  embeddings.reserve(texts.size());
  for (const auto& t : texts) embeddings.push_back(oracle.embed_text(t, EncoderRole::kAttack));
  return std::make_shared<const ReferenceCorpus>(std::move(texts), std::move(embeddings));
}

PerturbationEngine load_perturbation_engine(const RunConfig& config) {
  HomoglyphTable glyphs = config.homoglyph_table_path.empty()
                              ? HomoglyphTable::bundled()
                              : HomoglyphTable::load(config.homoglyph_table_path);
  PhoneticTable phonetics = config.phonetic_table_path.empty()
                                ? PhoneticTable::bundled()
                                : PhoneticTable::load(config.phonetic_table_path);
  return PerturbationEngine(std::move(glyphs), std::move(phonetics));
}

}  // namespace t2ia
