#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "t2iattack/random.hpp"

namespace t2ia {

/// One whitespace-delimited chunk of a prompt. Leading and trailing ASCII
/// punctuation stays in the surface but lies outside the editable core.
struct Token {
  std::string surface;
  std::size_t index = 0;
  bool is_word = false;
  std::size_t core_begin = 0;  // byte offsets into surface
  std::size_t core_end = 0;

  std::string_view core() const {
    return std::string_view(surface).substr(core_begin, core_end - core_begin);
  }
  std::string with_core(std::string_view new_core) const;
};

class Sentence {
 public:
  Sentence() = default;
  Sentence(std::string original_text, std::vector<Token> tokens);

  const std::string& original_text() const { return original_text_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  const Token& operator[](std::size_t i) const { return tokens_.at(i); }

  std::size_t word_count() const;
  std::vector<std::size_t> word_indices() const;

  /// Tokens joined with single spaces.
  std::string text() const;

  /// Text with token i removed; empty when nothing remains.
  std::string text_without(std::size_t i) const;

  /// Copy with the core of token i replaced.
  Sentence with_core(std::size_t i, std::string_view new_core) const;

 private:
  std::string original_text_;
  std::vector<Token> tokens_;
};

/// Throws Error(kEmptyInput) for empty or whitespace-only text.
Sentence tokenize(std::string_view text);

enum class RuleKind { kTypo, kGlyph, kPhonetic };

std::string_view to_string(RuleKind rule);
RuleKind parse_rule(std::string_view name);

enum class TypoOp {
  kDelete,
  kInsert,
  kReplace,
  kSwap,
  kAddSpace,
  kTransformCase,
  kRepeat,
};

inline constexpr TypoOp kAllTypoOps[] = {
    TypoOp::kDelete,  TypoOp::kInsert,        TypoOp::kReplace, TypoOp::kSwap,
    TypoOp::kAddSpace, TypoOp::kTransformCase, TypoOp::kRepeat,
};

std::string_view to_string(TypoOp op);

/// Result of one rule application to a single word.
struct WordEdit {
  std::string text;
  std::string operation;
  std::size_t position = 0;  // code-point index of the edited character

  friend bool operator==(const WordEdit&, const WordEdit&) = default;
};

/// Apply a typo meta-operation at a code-point position. `letter` is the
/// inserted or replacement character for kInsert / kReplace. Returns the
/// word unchanged when the operation is not applicable there.
std::u32string apply_typo(std::u32string_view word, TypoOp op, std::size_t position,
                          char32_t letter = U'a');

/// Character confusables: one source character to many alternatives.
class HomoglyphTable {
 public:
  HomoglyphTable() = default;

  /// Parses `source<TAB>alt1,alt2,...` lines; `#` starts a comment.
  static HomoglyphTable parse(std::string_view contents);
  static HomoglyphTable load(const std::string& path);
  static const HomoglyphTable& bundled();

  const std::vector<char32_t>* find(char32_t c) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<char32_t, std::vector<char32_t>> entries_;
};

struct PhoneticRule {
  std::u32string pattern;
  bool anchored_start = false;
  bool anchored_end = false;
  std::vector<std::u32string> alternatives;
};

/// Grapheme rewrites. `^` and `$` anchor a pattern to word boundaries.
class PhoneticTable {
 public:
  PhoneticTable() = default;

  static PhoneticTable parse(std::string_view contents);
  static PhoneticTable load(const std::string& path);
  static const PhoneticTable& bundled();

  const std::vector<PhoneticRule>& rules() const { return rules_; }

 private:
  std::vector<PhoneticRule> rules_;
};

/// The three rule families over a pair of substitution tables.
class PerturbationEngine {
 public:
  PerturbationEngine();
  PerturbationEngine(HomoglyphTable glyphs, PhoneticTable phonetics);

  static const PerturbationEngine& bundled();

  WordEdit typo(std::string_view word, Rng& rng) const;
  /// Throws Error(kNoEligibleCharacter).
  WordEdit glyph(std::string_view word, Rng& rng) const;
  /// Throws Error(kNoApplicableRule).
  WordEdit phonetic(std::string_view word, Rng& rng) const;

  WordEdit apply(RuleKind rule, std::string_view word, Rng& rng) const;

  /// Every distinct single application of the rule to the word. Typo
  /// insert/replace enumerate all 26 lowercase letters.
  std::vector<WordEdit> enumerate(RuleKind rule, std::string_view word) const;

  const HomoglyphTable& glyphs() const { return glyphs_; }
  const PhoneticTable& phonetics() const { return phonetics_; }

 private:
  struct PhoneticOption {
    std::size_t position;
    const PhoneticRule* rule;  // null for whole-word emphasis
    std::size_t alternative;
  };
  std::vector<PhoneticOption> phonetic_options(const std::u32string& word) const;
  WordEdit render(const std::u32string& word, const PhoneticOption& option) const;

  HomoglyphTable glyphs_;
  PhoneticTable phonetics_;
};

// Free-function forms over the bundled tables.
std::string typo_perturb(std::string_view word, Rng& rng);
std::string glyph_perturb(std::string_view word, Rng& rng);
std::string phonetic_perturb(std::string_view word, Rng& rng);

struct EditRecord {
  std::size_t token_index = 0;
  std::string operation;
  std::size_t position = 0;

  friend bool operator==(const EditRecord&, const EditRecord&) = default;
};

/// A sentence derived from a source sentence by word-local edits.
struct CandidateSentence {
  Sentence sentence;
  std::set<std::size_t> perturbed_word_indices;
  std::vector<EditRecord> edits;

  static CandidateSentence identity(const Sentence& source);

  std::string text() const { return sentence.text(); }
};

inline constexpr int kDefaultCandidatesPerWord = 5;
inline constexpr int kCandidateRetryCap = 20;

/// Up to k distinct candidates that each differ from `base` only at
/// `word_index` by one application of `rule`. Throws Error(kNotAWord) for
/// punctuation tokens and propagates rule errors.
std::vector<CandidateSentence> generate_candidates(const CandidateSentence& base,
                                                   std::size_t word_index, RuleKind rule,
                                                   int k, Rng& rng,
                                                   const PerturbationEngine& engine =
                                                       PerturbationEngine::bundled());

std::vector<CandidateSentence> generate_candidates(const Sentence& sentence,
                                                   std::size_t word_index, RuleKind rule,
                                                   int k, Rng& rng,
                                                   const PerturbationEngine& engine =
                                                       PerturbationEngine::bundled());

double perturbation_rate(const Sentence& original, const CandidateSentence& candidate);

/// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

}  // namespace t2ia
