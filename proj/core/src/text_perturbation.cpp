#include "t2iattack/text_perturbation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "t2iattack/bundled_data.hpp"
#include "t2iattack/error.hpp"
#include "t2iattack/utf8.hpp"

namespace t2ia {

namespace {

std::vector<std::string_view> split_lines(std::string_view contents) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

struct TableLine {
  std::string_view source;
  std::vector<std::string_view> alternatives;
};

// source<TAB>alt1,alt2,... with '#' comments and blank lines skipped.
std::vector<TableLine> parse_table(std::string_view contents, std::string_view what) {
  std::vector<TableLine> out;
  int line_no = 0;
  for (std::string_view raw : split_lines(contents)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = raw.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kConfiguration, std::string(what) + " line " +
                                                 std::to_string(line_no) + ": missing TAB");
    }
    TableLine entry;
    entry.source = trim(raw.substr(0, tab));
    std::string_view rest = trim(raw.substr(tab + 1));
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t comma = rest.find(',', start);
      if (comma == std::string_view::npos) comma = rest.size();
      std::string_view alt = rest.substr(start, comma - start);
      if (!alt.empty()) entry.alternatives.push_back(alt);
      start = comma + 1;
    }
    if (entry.source.empty() || entry.alternatives.empty()) {
      throw Error(ErrorCode::kConfiguration,
                  std::string(what) + " line " + std::to_string(line_no) + ": empty mapping");
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_lower_vowel(char32_t c) {
  return c == U'a' || c == U'e' || c == U'i' || c == U'o' || c == U'u' || c == U'y';
}

}  // namespace

std::string Token::with_core(std::string_view new_core) const {
  std::string out = surface.substr(0, core_begin);
  out += new_core;
  out += surface.substr(core_end);
  return out;
}

Sentence::Sentence(std::string original_text, std::vector<Token> tokens)
    : original_text_(std::move(original_text)), tokens_(std::move(tokens)) {}

std::size_t Sentence::word_count() const {
  return static_cast<std::size_t>(
      std::count_if(tokens_.begin(), tokens_.end(), [](const Token& t) { return t.is_word; }));
}

std::vector<std::size_t> Sentence::word_indices() const {
  std::vector<std::size_t> out;
  for (const auto& t : tokens_) {
    if (t.is_word) out.push_back(t.index);
  }
  return out;
}

std::string Sentence::text() const {
  std::string out;
  for (const auto& t : tokens_) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

std::string Sentence::text_without(std::size_t i) const {
  std::string out;
  for (const auto& t : tokens_) {
    if (t.index == i) continue;
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

Sentence Sentence::with_core(std::size_t i, std::string_view new_core) const {
  Sentence copy = *this;
  Token& token = copy.tokens_.at(i);
  token.surface = token.with_core(new_core);
  token.core_end = token.core_begin + new_core.size();
  copy.original_text_ = copy.text();
  return copy;
}

Sentence tokenize(std::string_view text) {
  const std::u32string chars = utf8::decode(text);
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < chars.size()) {
    while (i < chars.size() && utf8::is_space(chars[i])) ++i;
    if (i >= chars.size()) break;
    std::size_t j = i;
    while (j < chars.size() && !utf8::is_space(chars[j])) ++j;
    std::u32string_view chunk(chars.data() + i, j - i);

    std::size_t lead = 0;
    while (lead < chunk.size() && utf8::is_ascii_punct(chunk[lead])) ++lead;
    std::size_t trail = chunk.size();
    while (trail > lead && utf8::is_ascii_punct(chunk[trail - 1])) --trail;

    Token token;
    token.index = tokens.size();
    token.surface = utf8::encode(chunk);
    token.is_word = trail > lead;
    if (token.is_word) {
      token.core_begin = utf8::encode(chunk.substr(0, lead)).size();
      token.core_end = token.core_begin + utf8::encode(chunk.substr(lead, trail - lead)).size();
    }
    tokens.push_back(std::move(token));
    i = j;
  }
  if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "text has no tokens");
  return Sentence(std::string(text), std::move(tokens));
}

std::string_view to_string(RuleKind rule) {
  switch (rule) {
    case RuleKind::kTypo: return "typo";
    case RuleKind::kGlyph: return "glyph";
    case RuleKind::kPhonetic: return "phonetic";
  }
  return "?";
}

RuleKind parse_rule(std::string_view name) {
  const std::string lowered = utf8::lower(name);
  if (lowered == "typo") return RuleKind::kTypo;
  if (lowered == "glyph") return RuleKind::kGlyph;
  if (lowered == "phonetic") return RuleKind::kPhonetic;
  throw Error(ErrorCode::kConfiguration, "unknown rule '" + std::string(name) + "'");
}

std::string_view to_string(TypoOp op) {
  switch (op) {
    case TypoOp::kDelete: return "delete";
    case TypoOp::kInsert: return "insert";
    case TypoOp::kReplace: return "replace";
    case TypoOp::kSwap: return "swap";
    case TypoOp::kAddSpace: return "add_space";
    case TypoOp::kTransformCase: return "transform_case";
    case TypoOp::kRepeat: return "repeat";
  }
  return "?";
}

std::u32string apply_typo(std::u32string_view word, TypoOp op, std::size_t position,
                          char32_t letter) {
  std::u32string w(word);
  if (position >= w.size()) return w;
  switch (op) {
    case TypoOp::kDelete:
      if (w.size() >= 2) w.erase(position, 1);
      break;
    case TypoOp::kInsert:
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(position) + 1, letter);
      break;
    case TypoOp::kReplace:
      w[position] = letter;
      break;
    case TypoOp::kSwap:
      if (w.size() >= 2) {
        const std::size_t other = position + 1 < w.size() ? position + 1 : position - 1;
        std::swap(w[position], w[other]);
      }
      break;
    case TypoOp::kAddSpace:
      if (w.size() >= 2) {
        const std::size_t at = position + 1 < w.size() ? position + 1 : position;
        w.insert(w.begin() + static_cast<std::ptrdiff_t>(at), U' ');
      }
      break;
    case TypoOp::kTransformCase: {
      const char32_t c = w[position];
      const char32_t lo = utf8::to_lower(c);
      w[position] = lo != c ? lo : utf8::to_upper(c);
      break;
    }
    case TypoOp::kRepeat:
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(position), w[position]);
      break;
  }
  return w;
}

HomoglyphTable HomoglyphTable::parse(std::string_view contents) {
  HomoglyphTable table;
  for (const auto& line : parse_table(contents, "homoglyph table")) {
    const std::u32string source = utf8::decode(line.source);
    if (source.size() != 1) {
      throw Error(ErrorCode::kConfiguration,
                  "homoglyph source must be one character: " + std::string(line.source));
    }
    auto& alts = table.entries_[source[0]];
    for (std::string_view alt : line.alternatives) {
      const std::u32string a = utf8::decode(alt);
      if (a.size() != 1 || a[0] == source[0]) {
        throw Error(ErrorCode::kConfiguration,
                    "homoglyph alternative must be one different character: " + std::string(alt));
      }
      if (std::find(alts.begin(), alts.end(), a[0]) == alts.end()) alts.push_back(a[0]);
    }
  }
  return table;
}

HomoglyphTable HomoglyphTable::load(const std::string& path) { return parse(read_file(path)); }

const HomoglyphTable& HomoglyphTable::bundled() {
  static const HomoglyphTable table = parse(bundled::homoglyphs());
  return table;
}

const std::vector<char32_t>* HomoglyphTable::find(char32_t c) const {
  auto it = entries_.find(c);
  return it == entries_.end() ? nullptr : &it->second;
}

PhoneticTable PhoneticTable::parse(std::string_view contents) {
  PhoneticTable table;
  for (const auto& line : parse_table(contents, "phonetic table")) {
    PhoneticRule rule;
    std::string_view source = line.source;
    if (source.front() == '^') {
      rule.anchored_start = true;
      source.remove_prefix(1);
    }
    if (!source.empty() && source.back() == '$') {
      rule.anchored_end = true;
      source.remove_suffix(1);
    }
    if (source.empty()) {
      throw Error(ErrorCode::kConfiguration, "phonetic rule with empty pattern");
    }
    rule.pattern = utf8::decode(source);
    for (std::string_view alt : line.alternatives) {
      std::u32string a = utf8::decode(alt);
      if (a == rule.pattern) continue;
      rule.alternatives.push_back(std::move(a));
    }
    if (!rule.alternatives.empty()) table.rules_.push_back(std::move(rule));
  }
  return table;
}

PhoneticTable PhoneticTable::load(const std::string& path) { return parse(read_file(path)); }

const PhoneticTable& PhoneticTable::bundled() {
  static const PhoneticTable table = parse(bundled::phonetics());
  return table;
}

PerturbationEngine::PerturbationEngine()
    : glyphs_(HomoglyphTable::bundled()), phonetics_(PhoneticTable::bundled()) {}

PerturbationEngine::PerturbationEngine(HomoglyphTable glyphs, PhoneticTable phonetics)
    : glyphs_(std::move(glyphs)), phonetics_(std::move(phonetics)) {}

const PerturbationEngine& PerturbationEngine::bundled() {
  static const PerturbationEngine engine;
  return engine;
}

namespace {

// Single-character words cannot lose a character, be swapped or be split.
std::vector<TypoOp> typo_ops_for(std::size_t length) {
  if (length == 1) {
    return {TypoOp::kInsert, TypoOp::kReplace, TypoOp::kTransformCase, TypoOp::kRepeat};
  }
  return {std::begin(kAllTypoOps), std::end(kAllTypoOps)};
}

}  // namespace

WordEdit PerturbationEngine::typo(std::string_view word, Rng& rng) const {
  const std::u32string w = utf8::decode(word);
  if (w.empty()) throw Error(ErrorCode::kPrecondition, "typo on empty word");
  const auto ops = typo_ops_for(w.size());
  for (int attempt = 0; attempt < 256; ++attempt) {
    const std::size_t pos = rng.index(w.size());
    const TypoOp op = ops[rng.index(ops.size())];
    char32_t letter = U'a';
    if (op == TypoOp::kInsert) {
      letter = U'a' + static_cast<char32_t>(rng.index(26));
    } else if (op == TypoOp::kReplace) {
      const char32_t original = w[pos];
      if (original >= U'a' && original <= U'z') {
        auto k = static_cast<char32_t>(rng.index(25));
        letter = U'a' + k;
        if (letter >= original) ++letter;
      } else {
        letter = U'a' + static_cast<char32_t>(rng.index(26));
      }
    }
    std::u32string out = apply_typo(w, op, pos, letter);
    if (out != w) return {utf8::encode(out), std::string(to_string(op)), pos};
  }
  // Unreachable in practice: insertion always changes the word.
  return {utf8::encode(apply_typo(w, TypoOp::kInsert, 0, U'x')), "insert", 0};
}

WordEdit PerturbationEngine::glyph(std::string_view word, Rng& rng) const {
  const std::u32string w = utf8::decode(word);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (glyphs_.find(w[i]) != nullptr) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::kNoEligibleCharacter, "no homoglyph for '" + std::string(word) + "'");
  }
  const std::size_t pos = eligible[rng.index(eligible.size())];
  const auto& alts = *glyphs_.find(w[pos]);
  std::u32string out = w;
  out[pos] = alts[rng.index(alts.size())];
  return {utf8::encode(out), "glyph", pos};
}

std::vector<PerturbationEngine::PhoneticOption> PerturbationEngine::phonetic_options(
    const std::u32string& word) const {
  std::vector<PhoneticOption> options;
  for (const auto& rule : phonetics_.rules()) {
    const auto& p = rule.pattern;
    if (p.size() > word.size()) continue;
    for (std::size_t pos = 0; pos + p.size() <= word.size(); ++pos) {
      if (rule.anchored_start && pos != 0) break;
      if (rule.anchored_end && pos + p.size() != word.size()) continue;
      if (word.compare(pos, p.size(), p) != 0) continue;
      for (std::size_t a = 0; a < rule.alternatives.size(); ++a) {
        options.push_back({pos, &rule, a});
      }
    }
  }
  if (std::any_of(word.begin(), word.end(), is_lower_vowel)) {
    options.push_back({0, nullptr, 0});
  }
  return options;
}

WordEdit PerturbationEngine::render(const std::u32string& word,
                                    const PhoneticOption& option) const {
  if (option.rule == nullptr) {
    std::u32string out = word;
    for (auto& c : out) c = utf8::to_upper(c);
    return {utf8::encode(out), "emphasis", 0};
  }
  const auto& rule = *option.rule;
  std::u32string out = word.substr(0, option.position);
  out += rule.alternatives[option.alternative];
  out += word.substr(option.position + rule.pattern.size());
  return {utf8::encode(out),
          "phonetic:" + utf8::encode(rule.pattern) + "->" +
              utf8::encode(rule.alternatives[option.alternative]),
          option.position};
}

WordEdit PerturbationEngine::phonetic(std::string_view word, Rng& rng) const {
  const std::u32string w = utf8::decode(word);
  const auto options = phonetic_options(w);
  if (options.empty()) {
    throw Error(ErrorCode::kNoApplicableRule,
                "no phonetic rule matches '" + std::string(word) + "'");
  }
  return render(w, options[rng.index(options.size())]);
}

WordEdit PerturbationEngine::apply(RuleKind rule, std::string_view word, Rng& rng) const {
  switch (rule) {
    case RuleKind::kTypo: return typo(word, rng);
    case RuleKind::kGlyph: return glyph(word, rng);
    case RuleKind::kPhonetic: return phonetic(word, rng);
  }
  throw Error(ErrorCode::kConfiguration, "unknown rule");
}

std::vector<WordEdit> PerturbationEngine::enumerate(RuleKind rule, std::string_view word) const {
  const std::u32string w = utf8::decode(word);
  std::vector<WordEdit> out;
  auto push = [&](WordEdit edit) {
    if (edit.text == word) return;
    for (const auto& e : out) {
      if (e.text == edit.text) return;
    }
    out.push_back(std::move(edit));
  };
  switch (rule) {
    case RuleKind::kTypo:
      for (std::size_t pos = 0; pos < w.size(); ++pos) {
        for (TypoOp op : typo_ops_for(w.size())) {
          const bool lettered = op == TypoOp::kInsert || op == TypoOp::kReplace;
          for (char32_t letter = U'a'; letter <= (lettered ? U'z' : U'a'); ++letter) {
            push({utf8::encode(apply_typo(w, op, pos, letter)), std::string(to_string(op)), pos});
          }
        }
      }
      break;
    case RuleKind::kGlyph:
      for (std::size_t pos = 0; pos < w.size(); ++pos) {
        if (const auto* alts = glyphs_.find(w[pos])) {
          for (char32_t alt : *alts) {
            std::u32string v = w;
            v[pos] = alt;
            push({utf8::encode(v), "glyph", pos});
          }
        }
      }
      break;
    case RuleKind::kPhonetic:
      for (const auto& option : phonetic_options(w)) push(render(w, option));
      break;
  }
  return out;
}

std::string typo_perturb(std::string_view word, Rng& rng) {
  return PerturbationEngine::bundled().typo(word, rng).text;
}

std::string glyph_perturb(std::string_view word, Rng& rng) {
  return PerturbationEngine::bundled().glyph(word, rng).text;
}

std::string phonetic_perturb(std::string_view word, Rng& rng) {
  return PerturbationEngine::bundled().phonetic(word, rng).text;
}

CandidateSentence CandidateSentence::identity(const Sentence& source) {
  return CandidateSentence{source, {}, {}};
}

std::vector<CandidateSentence> generate_candidates(const CandidateSentence& base,
                                                   std::size_t word_index, RuleKind rule,
                                                   int k, Rng& rng,
                                                   const PerturbationEngine& engine) {
  const Sentence& sentence = base.sentence;
  if (word_index >= sentence.size() || !sentence[word_index].is_word) {
    throw Error(ErrorCode::kNotAWord,
                "token " + std::to_string(word_index) + " is not a perturbable word");
  }
  if (k < 1) throw Error(ErrorCode::kPrecondition, "k must be at least 1");

  const std::string core(sentence[word_index].core());
  std::vector<CandidateSentence> out;
  std::vector<std::string> seen;
  int retries = kCandidateRetryCap;
  while (static_cast<int>(out.size()) < k) {
    WordEdit edit = engine.apply(rule, core, rng);
    const bool duplicate = edit.text == core ||
                           std::find(seen.begin(), seen.end(), edit.text) != seen.end();
    if (duplicate) {
      if (--retries < 0) break;
      continue;
    }
    seen.push_back(edit.text);
    CandidateSentence candidate{sentence.with_core(word_index, edit.text),
                                base.perturbed_word_indices, base.edits};
    candidate.perturbed_word_indices.insert(word_index);
    candidate.edits.push_back({word_index, std::move(edit.operation), edit.position});
    out.push_back(std::move(candidate));
  }
  return out;
}

std::vector<CandidateSentence> generate_candidates(const Sentence& sentence,
                                                   std::size_t word_index, RuleKind rule,
                                                   int k, Rng& rng,
                                                   const PerturbationEngine& engine) {
  return generate_candidates(CandidateSentence::identity(sentence), word_index, rule, k, rng,
                             engine);
}

double perturbation_rate(const Sentence& original, const CandidateSentence& candidate) {
  const std::size_t words = original.word_count();
  if (words == 0) return 0.0;
  return static_cast<double>(candidate.perturbed_word_indices.size()) /
         static_cast<double>(words);
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

}  // namespace t2ia
