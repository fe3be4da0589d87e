#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "serialize.hpp"
#include "t2iattack/config.hpp"
#include "t2iattack/error.hpp"
#include "t2iattack/version.hpp"

namespace t2ia::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string oracle;
  std::string objective;
  std::string rule;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string output;
  std::string input;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, std::string("cannot read ") + what + " " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

RunConfig load_config(const Options& opts) {
  if (opts.config_path.empty()) throw Error(ErrorCode::kConfiguration, "--config is required");
  if (!fs::exists(opts.config_path)) {
    throw Error(ErrorCode::kConfiguration, "config file not found: " + opts.config_path);
  }
  RunConfig config = load_run_config(opts.config_path);
  if (opts.seed) {
    config.attack.seed = *opts.seed;
    config.oracle.seed = *opts.seed;
  }
  if (!opts.oracle.empty()) {
    if (opts.oracle == "synthetic") {
      config.oracle.mode = OracleMode::kSynthetic;
    } else if (opts.oracle.rfind("remote:", 0) == 0) {
      config.oracle.mode = OracleMode::kRemote;
      config.oracle.endpoint = opts.oracle.substr(7);
    } else {
      throw Error(ErrorCode::kConfiguration, "--oracle must be 'synthetic' or 'remote:URL'");
    }
  }
  if (const char* token = std::getenv(kTokenEnvVar)) config.oracle.bearer_token = token;
  const auto objectives = split_list(opts.objective);
  if (objectives.size() == 1) set_objective(config, objectives.front());
  const auto rules = split_list(opts.rule);
  if (rules.size() == 1) config.attack.rule = parse_rule(rules.front());
  if (opts.jobs < 1) throw Error(ErrorCode::kConfiguration, "--jobs must be at least 1");
  config.oracle.validate();
  return config;
}

struct InputLine {
  std::size_t line_no = 0;
  std::string text;
};

std::vector<InputLine> parse_inputs(const std::string& contents) {
  std::vector<InputLine> out;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (tokenize(line).word_count() == 0) {
      throw Error(ErrorCode::kEmptyInput, "line " + std::to_string(line_no) + " has no words");
    }
    out.push_back({line_no, line});
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyInput, "input file has no prompts");
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first failure in
/// index order is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

void attach_corpus(RunConfig& config, GenerationOracle& oracle,
                   std::shared_ptr<const ReferenceCorpus>& cache) {
  if (config.attack.objective.kind != ObjectiveKind::kKl2) return;
  if (!cache) cache = build_reference_corpus(config, oracle);
  config.attack.objective.corpus = cache;
}

struct Manifest {
  Json body;
  std::string digest;
};

Manifest make_manifest(const std::string& command, const RunConfig& config,
                       const std::string& input_bytes, std::size_t input_count,
                       const std::vector<std::string>& outputs) {
  Manifest m;
  m.body["artifact"] = "t2iattack";
  m.body["version"] = std::string(kVersion);
  m.body["command"] = command;
  m.body["seed"] = config.attack.seed;
  m.body["model_id"] = config.oracle.mode == OracleMode::kSynthetic ? "synthetic-victim-v1"
                                                                    : config.oracle.endpoint;
  m.body["config"] = dump_run_config(config);
  m.body["input_digest"] = digest_hex(input_bytes);
  m.body["input_count"] = input_count;
  m.body["outputs"] = outputs;
  m.digest = digest_hex(m.body.dump());
  m.body["digest"] = m.digest;
  return m;
}

std::string result_name(std::size_t line_no, std::size_t max_line) {
  const int width = std::max<int>(5, static_cast<int>(std::to_string(max_line).size()));
  char buf[64];
  std::snprintf(buf, sizeof buf, "results/%0*zu.json", width, line_no);
  return buf;
}

std::string report_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv:
      return "csv";
    case ReportFormat::kJson:
      return "json";
    case ReportFormat::kTable:
      return "txt";
  }
  return "txt";
}

std::string stamp_report(const std::string& body, ReportFormat format,
                         const std::string& digest) {
  switch (format) {
    case ReportFormat::kCsv:
      return "# manifest " + digest + "\r\n" + body;
    case ReportFormat::kJson: {
      Json out;
      out["manifest_digest"] = digest;
      out["rows"] = Json::parse(body);
      return out.dump(2) + "\n";
    }
    case ReportFormat::kTable:
      return "# manifest " + digest + "\n" + body;
  }
  return body;
}

bool is_oracle_error(const Error& e) {
  return e.code() == ErrorCode::kOracleUnavailable || e.code() == ErrorCode::kProtocol;
}

int cmd_attack(const Options& opts, const std::string& format_name, std::ostream& out,
               std::ostream& err) {
  RunConfig config = load_config(opts);
  const ReportFormat format = parse_report_format(format_name);
  const std::string input_bytes = read_file(opts.input, "input");
  const auto inputs = parse_inputs(input_bytes);
  if (opts.output.empty()) throw Error(ErrorCode::kConfiguration, "--output is required");

  auto oracle = make_oracle(config.oracle);
  std::shared_ptr<const ReferenceCorpus> corpus;
  attach_corpus(config, *oracle, corpus);
  config.attack.validate();
  const PerturbationEngine engine = load_perturbation_engine(config);

  std::vector<std::string> outputs;
  for (const auto& line : inputs) outputs.push_back(result_name(line.line_no, inputs.back().line_no));
  const std::string report_path = "report." + report_extension(format);
  outputs.push_back(report_path);
  const Manifest manifest =
      make_manifest("attack", config, input_bytes, inputs.size(), outputs);

  const std::string rule(to_string(config.attack.rule));
  const std::string objective = config.attack.objective.name();
  std::vector<AttackResult> results(inputs.size());
  std::vector<std::optional<EvalRow>> rows(inputs.size());
  parallel_for(inputs.size(), opts.jobs, [&](std::size_t i) {
    results[i] = run_attack(inputs[i].text, config.attack, *oracle, engine);
    if (results[i].error) return;
    try {
      rows[i] = evaluate_attack(results[i], *oracle, config.attack.n_images, config.dataset, rule,
                                objective);
    } catch (const Error& e) {
      if (!is_oracle_error(e)) throw;
      results[i].error = e.what();
    }
  });

  const fs::path dir(opts.output);
  std::vector<EvalRow> ok_rows;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Json doc;
    doc["manifest_digest"] = manifest.digest;
    doc["line"] = inputs[i].line_no;
    doc["objective"] = objective;
    doc["rule"] = rule;
    const Json body = result_json(results[i], rows[i] ? &*rows[i] : nullptr);
    for (const auto& [key, value] : body.items()) doc[key] = value;
    write_file(dir / outputs[i], doc.dump(2) + "\n");
    if (rows[i]) {
      ok_rows.push_back(*rows[i]);
    } else {
      ++failed;
      err << "error: line " << inputs[i].line_no << ": " << *results[i].error << "\n";
    }
  }
  if (!ok_rows.empty()) {
    const auto reports = aggregate(ok_rows);
    write_file(dir / report_path, stamp_report(emit_report(reports, format), format,
                                               manifest.digest));
    out << emit_report(reports, ReportFormat::kTable);
  }
  write_file(dir / "manifest.json", manifest.body.dump(2) + "\n");
  out << "wrote " << inputs.size() - failed << " of " << inputs.size() << " results to "
      << dir.string() << "\n";
  return failed == 0 ? kExitOk : kExitOracle;
}

std::vector<int> parse_rates(const std::string& spec) {
  if (spec.empty()) return default_sweep_rates();
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) {
      throw Error(ErrorCode::kConfiguration, "bad --rates value '" + spec + "'");
    }
    return v;
  };
  std::vector<int> rates;
  const auto dash = spec.find('-');
  if (dash != std::string::npos) {
    const auto colon = spec.find(':');
    const int lo = to_int(spec.substr(0, dash));
    const int hi = to_int(spec.substr(dash + 1, colon == std::string::npos ? colon : colon - dash - 1));
    const int step = colon == std::string::npos ? 10 : to_int(spec.substr(colon + 1));
    if (step < 1 || lo > hi) throw Error(ErrorCode::kConfiguration, "bad --rates range '" + spec + "'");
    for (int r = lo; r <= hi; r += step) rates.push_back(r);
  } else {
    for (const auto& item : split_list(spec)) rates.push_back(to_int(item));
  }
  for (int r : rates) {
    if (r < 0 || r > 100) throw Error(ErrorCode::kConfiguration, "rates must lie in 0..100");
  }
  if (rates.empty()) throw Error(ErrorCode::kConfiguration, "no rates given");
  return rates;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_sweep(const Options& opts, const std::string& rates_spec, std::ostream& out) {
  RunConfig base = load_config(opts);
  const auto rates = parse_rates(rates_spec);
  const std::string input_bytes = read_file(opts.input, "input");
  const auto inputs = parse_inputs(input_bytes);
  if (opts.output.empty()) throw Error(ErrorCode::kConfiguration, "--output is required");
  std::vector<std::string> texts;
  for (const auto& line : inputs) texts.push_back(line.text);

  auto objectives = split_list(opts.objective);
  if (objectives.empty()) objectives.push_back(base.attack.objective.name());
  auto rules = split_list(opts.rule);
  if (rules.empty()) rules.emplace_back(to_string(base.attack.rule));

  std::vector<RunConfig> configs;
  std::vector<std::string> outputs;
  for (const auto& rule_name : rules) {
    for (const auto& objective : objectives) {
      RunConfig c = base;
      set_objective(c, objective);
      c.attack.rule = parse_rule(rule_name);
      outputs.push_back("curves/" + c.attack.objective.name() + "-" +
                        std::string(to_string(c.attack.rule)) + ".csv");
      configs.push_back(std::move(c));
    }
    outputs.push_back("curves/random-" + std::string(to_string(parse_rule(rule_name))) + ".csv");
  }
  outputs.push_back("slopes.csv");
  const Manifest manifest = make_manifest("sweep", base, input_bytes, inputs.size(), outputs);

  auto oracle = make_oracle(base.oracle);
  std::shared_ptr<const ReferenceCorpus> corpus;
  const PerturbationEngine engine = load_perturbation_engine(base);
  const fs::path dir(opts.output);
  const std::string stamp = "# manifest " + manifest.digest + "\n";
  std::string slopes = stamp + "objective,rule,slope\n";
  std::size_t out_index = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    RunConfig& c = configs[i];
    attach_corpus(c, *oracle, corpus);
    c.attack.validate();
    const SweepCurves curves = diagnostic_sweep(texts, rates, c.attack, *oracle, engine, opts.jobs);
    write_file(dir / outputs[out_index++], stamp + emit_curve_csv(curves.attack));
    const std::string rule(to_string(c.attack.rule));
    std::string slope;
    try {
      slope = format_double(slope_analysis(curves.attack));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedSlope) throw;
    }
    slopes += c.attack.objective.name() + "," + rule + "," + slope + "\n";
    out << c.attack.objective.name() << " " << rule << ": " << curves.attack.size()
        << " points, slope " << (slope.empty() ? "undefined" : slope) << "\n";
    const bool last_for_rule = i + 1 == configs.size() || configs[i + 1].attack.rule != c.attack.rule;
    if (last_for_rule) write_file(dir / outputs[out_index++], stamp + emit_curve_csv(curves.random));
  }
  write_file(dir / outputs[out_index], slopes);
  write_file(dir / "manifest.json", manifest.body.dump(2) + "\n");
  return kExitOk;
}

int cmd_rank(const Options& opts, const std::string& text, std::ostream& out) {
  RunConfig config = load_config(opts);
  auto oracle = make_oracle(config.oracle);
  if (tokenize(text).word_count() == 0) {
    throw Error(ErrorCode::kEmptyInput, "text has no words");
  }
  std::shared_ptr<const ReferenceCorpus> corpus;
  attach_corpus(config, *oracle, corpus);
  config.attack.validate();
  OracleSession session(*oracle);
  const OriginalReference reference = prepare_reference(text, config.attack, session);
  const auto ranking = rank_word_importance(reference, config.attack, session);
  out << "rank\tindex\tword\tscore\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    out << r + 1 << "\t" << ranking[r].word_index << "\t"
        << reference.sentence.tokens()[ranking[r].word_index].core() << "\t"
        << format_double(ranking[r].score) << "\n";
  }
  return kExitOk;
}

int cmd_human_eval(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read ratings " + path);
  const auto ratings = read_human_ratings(in);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", human_eval_score(ratings));
  out << buf << "\n";
  return kExitOk;
}

int cmd_calibrate(const Options& opts, double quantile, std::ostream& out) {
  if (!(quantile >= 0.0 && quantile <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "--quantile must lie in [0, 1]");
  }
  RunConfig base = load_config(opts);
  std::vector<std::string> texts;
  if (opts.input.empty()) {
    const auto& bundled = ReferenceCorpus::bundled_texts();
    texts.assign(bundled.begin(), bundled.begin() + std::min<std::size_t>(50, bundled.size()));
  } else {
    for (const auto& line : parse_inputs(read_file(opts.input, "input"))) texts.push_back(line.text);
  }
  auto objectives = split_list(opts.objective);
  if (objectives.empty()) objectives = {"mmd2", "kl1", "kl2", "2st-t", "2st-ks", "clip", "dp"};

  auto oracle = make_oracle(base.oracle);
  std::shared_ptr<const ReferenceCorpus> corpus;
  const PerturbationEngine engine = load_perturbation_engine(base);
  out << "thresholds:\n";
  for (const auto& name : objectives) {
    RunConfig c = base;
    set_objective(c, name);
    c.attack.threshold = std::numeric_limits<double>::infinity();
    attach_corpus(c, *oracle, corpus);
    c.attack.validate();
    std::vector<double> finals(texts.size(), 0.0);
    parallel_for(texts.size(), opts.jobs, [&](std::size_t i) {
      const AttackResult r = run_attack(texts[i], c.attack, *oracle, engine);
      if (r.error) throw Error(ErrorCode::kOracleUnavailable, *r.error);
      finals[i] = r.final_divergence.value_or(0.0);
    });
    std::sort(finals.begin(), finals.end());
    const auto pos = static_cast<std::size_t>(quantile * static_cast<double>(finals.size() - 1));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", finals[pos]);
    out << "  " << c.attack.objective.name() << ": " << buf << "\n";
  }
  return kExitOk;
}

void add_common(CLI::App& cmd, Options& opts, bool with_output) {
  cmd.add_option("--config", opts.config_path, "Run configuration (YAML)");
  cmd.add_option("--oracle", opts.oracle, "synthetic or remote:URL (overrides the config)");
  cmd.add_option("--objective", opts.objective, "mmd2, kl1, kl2, 2st-t, 2st-ks, clip or dp");
  cmd.add_option("--rule", opts.rule, "typo, glyph or phonetic");
  cmd.add_option("--seed", opts.seed, "Seed for candidates, baselines and the synthetic victim");
  cmd.add_option("--jobs", opts.jobs, "Texts processed in parallel")->capture_default_str();
  if (with_output) cmd.add_option("--output", opts.output, "Output directory");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-box adversarial prompt attacks on text-to-image generators", "t2iattack"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options opts;
  std::string format = "csv";
  std::string rates;
  std::string text;
  std::string ratings;
  double quantile = 0.5;

  auto* attack = app.add_subcommand("attack", "Attack every prompt in a file");
  add_common(*attack, opts, true);
  attack->add_option("--input", opts.input, "Prompts, one per line")->required();
  attack->add_option("--format", format, "Report format: csv, json or table")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Fixed-rate perturbation curves");
  add_common(*sweep, opts, true);
  sweep->add_option("--input", opts.input, "Prompts, one per line")->required();
  sweep->add_option("--rates", rates, "Percentages: '0-80', '0-100:10' or '0,10,20'");

  auto* rank = app.add_subcommand("rank", "Word importance for one prompt");
  add_common(*rank, opts, false);
  rank->add_option("text", text, "Prompt text")->required();

  auto* human = app.add_subcommand("human-eval", "Human-evaluation score from a ratings CSV");
  human->add_option("ratings", ratings, "CSV with sample_id,annotator_id,N1,N2")->required();

  auto* calibrate = app.add_subcommand("calibrate", "Suggest per-objective thresholds");
  add_common(*calibrate, opts, false);
  calibrate->add_option("--input", opts.input, "Prompts (default: 50 bundled captions)");
  calibrate->add_option("--quantile", quantile, "Quantile of final divergences")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*attack) return cmd_attack(opts, format, out, err);
    if (*sweep) return cmd_sweep(opts, rates, out);
    if (*rank) return cmd_rank(opts, text, out);
    if (*human) return cmd_human_eval(ratings, out);
    if (*calibrate) return cmd_calibrate(opts, quantile, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_oracle_error(e) ? kExitOracle : kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace t2ia::cli
