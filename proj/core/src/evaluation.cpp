#include "t2iattack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "t2iattack/error.hpp"
#include "t2iattack/utf8.hpp"

namespace t2ia {

EvalRow evaluate_attack(const AttackResult& result, GenerationOracle& oracle, int n_images,
                        std::string_view dataset, std::string_view attacker,
                        std::string_view objective, QueryLedger* evaluation_ledger) {
  OracleSession session(oracle);
  const Embedding original =
      session.embed_text(result.original_text, EncoderRole::kEval, QueryPhase::kEvaluation);
  const EmbeddingBatch ori_images = session.generate(result.original_text, n_images,
                                                     EncoderRole::kEval, QueryPhase::kEvaluation);
  const EmbeddingBatch adv_images = session.generate(result.adversarial_text, n_images,
                                                     EncoderRole::kEval, QueryPhase::kEvaluation);
  const Embedding adversarial =
      session.embed_text(result.adversarial_text, EncoderRole::kEval, QueryPhase::kEvaluation);

  EvalRow row;
  row.dataset = std::string(dataset);
  row.attacker = std::string(attacker);
  row.objective = std::string(objective);
  row.original_text = result.original_text;
  row.adversarial_text = result.adversarial_text;
  row.ori_s_i2t = clip_score_i2t(original, ori_images);
  row.adv_s_i2t = clip_score_i2t(original, adv_images);
  row.s_t2t = clip_score_t2t(original, adversarial);
  row.adv_len = tokenize(result.adversarial_text).word_count();
  row.l_distance = levenshtein(result.original_text, result.adversarial_text);
  const QueryReport q =
      query_report(result.ledger, static_cast<double>(std::max<std::size_t>(1, result.word_count)));
  row.avg_query = q.avg_query;
  row.true_query = q.true_query;
  if (evaluation_ledger != nullptr) *evaluation_ledger = session.snapshot();
  return row;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double s = 0.0;
    for (double v : values) s += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(s / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

int rule_rank(const std::string& attacker) {
  if (attacker == "typo") return 0;
  if (attacker == "glyph") return 1;
  if (attacker == "phonetic") return 2;
  return 3;
}

std::string format_fixed(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string format_pm(const MeanStd& m) { return format_fixed(m.mean) + "±" + format_fixed(m.std); }

std::string display_rule(const std::string& attacker) {
  if (attacker.empty()) return attacker;
  std::string out = attacker;
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "Dataset",    "Attacker",    "Ori. S_I2T",  "Adv. Len.",
      "L-distance", "Adv. S_I2T",  "Ave. Query",  "True Query"};
  return columns;
}

std::size_t display_width(const std::string& s) { return utf8::decode(s).size(); }

}  // namespace

std::vector<EvalReport> aggregate(std::span<const EvalRow> rows) {
  std::vector<std::string> dataset_order;
  std::map<std::pair<std::string, std::string>, std::vector<const EvalRow*>> groups;
  for (const auto& row : rows) {
    if (std::find(dataset_order.begin(), dataset_order.end(), row.dataset) == dataset_order.end()) {
      dataset_order.push_back(row.dataset);
    }
    groups[{row.dataset, row.attacker}].push_back(&row);
  }

  std::vector<EvalReport> out;
  for (const auto& dataset : dataset_order) {
    std::vector<std::string> attackers;
    for (const auto& [key, members] : groups) {
      if (key.first == dataset) attackers.push_back(key.second);
    }
    std::stable_sort(attackers.begin(), attackers.end(), [](const auto& a, const auto& b) {
      const int ra = rule_rank(a);
      const int rb = rule_rank(b);
      return ra != rb ? ra < rb : a < b;
    });
    for (const auto& attacker : attackers) {
      const auto& members = groups.at({dataset, attacker});
      std::vector<double> ori, adv;
      EvalReport report;
      report.dataset = dataset;
      report.attacker = attacker;
      report.count = members.size();
      for (const EvalRow* r : members) {
        ori.push_back(r->ori_s_i2t);
        adv.push_back(r->adv_s_i2t);
        report.adv_len += static_cast<double>(r->adv_len);
        report.l_distance += static_cast<double>(r->l_distance);
        report.avg_query += r->avg_query;
        report.true_query += r->true_query;
      }
      const auto n = static_cast<double>(members.size());
      report.ori_s_i2t = mean_std(ori);
      report.adv_s_i2t = mean_std(adv);
      report.adv_len /= n;
      report.l_distance /= n;
      report.avg_query /= n;
      report.true_query /= n;
      out.push_back(std::move(report));
    }
  }
  return out;
}

ReportFormat parse_report_format(std::string_view name) {
  const std::string n = utf8::lower(name);
  if (n == "table" || n == "txt") return ReportFormat::kTable;
  if (n == "csv") return ReportFormat::kCsv;
  if (n == "json") return ReportFormat::kJson;
  throw Error(ErrorCode::kConfiguration, "unknown report format '" + std::string(name) + "'");
}

std::string csv_escape(std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!quote) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string emit_report(std::span<const EvalReport> reports, ReportFormat format) {
  if (reports.empty()) throw Error(ErrorCode::kPrecondition, "report needs at least one row");

  std::vector<std::vector<std::string>> cells;
  for (const auto& r : reports) {
    cells.push_back({r.dataset, display_rule(r.attacker), format_pm(r.ori_s_i2t),
                     format_fixed(r.adv_len), format_fixed(r.l_distance), format_pm(r.adv_s_i2t),
                     format_fixed(r.avg_query), format_fixed(r.true_query)});
  }
  const auto& columns = report_columns();

  switch (format) {
    case ReportFormat::kCsv: {
      std::string out;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        out += (c ? "," : "") + csv_escape(columns[c]);
      }
      out += "\r\n";
      for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_escape(row[c]);
        out += "\r\n";
      }
      return out;
    }
    case ReportFormat::kJson: {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : reports) {
        nlohmann::ordered_json o;
        o["dataset"] = r.dataset;
        o["attacker"] = r.attacker;
        o["count"] = r.count;
        o["ori_s_i2t"] = {{"mean", r.ori_s_i2t.mean}, {"std", r.ori_s_i2t.std}};
        o["adv_len"] = r.adv_len;
        o["l_distance"] = r.l_distance;
        o["adv_s_i2t"] = {{"mean", r.adv_s_i2t.mean}, {"std", r.adv_s_i2t.std}};
        o["avg_query"] = r.avg_query;
        o["true_query"] = r.true_query;
        arr.push_back(std::move(o));
      }
      return arr.dump(2) + "\n";
    }
    case ReportFormat::kTable: {
      std::vector<std::size_t> widths(columns.size());
      for (std::size_t c = 0; c < columns.size(); ++c) widths[c] = display_width(columns[c]);
      for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
          widths[c] = std::max(widths[c], display_width(row[c]));
        }
      }
      auto line = [&](const std::vector<std::string>& row) {
        std::string out;
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (c) out += "  ";
          out += row[c];
          if (c + 1 < row.size()) out += std::string(widths[c] - display_width(row[c]), ' ');
        }
        return out + "\n";
      };
      std::string out = line(columns);
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
      for (const auto& row : cells) out += line(row);
      return out;
    }
  }
  return {};
}

std::string emit_curve_csv(std::span<const SweepPoint> points) {
  std::string out = "rate,s_i2t,s_t2t\r\n";
  for (const auto& p : points) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\r\n", p.rate_percent, p.s_i2t, p.s_t2t);
    out += buf;
  }
  return out;
}

double human_eval_score(std::span<const HumanRating> ratings) {
  if (ratings.empty()) throw Error(ErrorCode::kPrecondition, "no ratings");
  struct Counts {
    std::size_t total = 0, useless = 0, success = 0;
  };
  std::map<std::string, Counts> per_annotator;
  for (const auto& r : ratings) {
    auto& c = per_annotator[r.annotator_id];
    ++c.total;
    if (r.n2 - r.n1 > 1) ++c.useless;
    if (r.n1 - r.n2 > 1) ++c.success;
  }
  double sum = 0.0;
  for (const auto& [annotator, c] : per_annotator) {
    if (c.total == c.useless) {
      throw Error(ErrorCode::kAllSamplesExcluded,
                  "annotator '" + annotator + "' has every sample excluded");
    }
    sum += static_cast<double>(c.success) / static_cast<double>(c.total - c.useless);
  }
  return sum / static_cast<double>(per_annotator.size());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

int parse_rating(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfiguration,
                "line " + std::to_string(line_no) + ": rating '" + s + "' is not an integer");
  }
}

}  // namespace

std::vector<HumanRating> read_human_ratings(std::istream& in) {
  std::vector<HumanRating> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (header) {
      header = false;
      if (fields.size() >= 4 && fields[0] == "sample_id") continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::kConfiguration,
                  "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    out.push_back({fields[0], fields[1], parse_rating(fields[2], line_no),
                   parse_rating(fields[3], line_no)});
  }
  return out;
}

double slope_analysis(std::span<const SweepPoint> points) {
  if (points.size() < 2) throw Error(ErrorCode::kUndefinedSlope, "need at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.s_t2t;
    my += p.s_i2t;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.s_t2t - mx) * (p.s_t2t - mx);
    sxy += (p.s_t2t - mx) * (p.s_i2t - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kUndefinedSlope, "all S_T2T values coincide");
  return sxy / sxx;
}

}  // namespace t2ia
