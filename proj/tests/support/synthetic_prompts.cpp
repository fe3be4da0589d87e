#include "synthetic_prompts.hpp"

#include "t2iattack/oracle.hpp"
#include "t2iattack/random.hpp"

namespace t2ia::testing {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "a",        "the",     "quiet",   "bright",   "painting", "photo",   "of",
      "in",       "near",    "under",   "soft",     "golden",   "light",   "at",
      "morning",  "evening", "with",    "small",    "large",    "old",     "vivid",
      "detailed", "misty",   "warm",    "cold",     "standing", "sitting", "beside",
      "over",     "calm",    "gentle",  "colorful", "sketch",   "style",   "wide",
      "angle",    "view",    "blue",    "green",    "red",      "on",      "and"};
  return words;
}

PlantedPrompt planted_prompt(std::uint64_t seed, std::size_t min_words, std::size_t max_words) {
  static const auto keywords = [] {
    std::vector<std::string> out;
    for (const auto& [word, weight] : SyntheticVictimSpec::bundled_keywords()) out.push_back(word);
    return out;
  }();
  Rng rng(seed);
  const std::size_t n = min_words + rng.index(max_words - min_words + 1);
  PlantedPrompt prompt;
  prompt.keyword = keywords[rng.index(keywords.size())];
  prompt.keyword_word = rng.index(n);
  const auto& fillers = filler_words();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) prompt.text += ' ';
    prompt.text += i == prompt.keyword_word ? prompt.keyword : fillers[rng.index(fillers.size())];
  }
  return prompt;
}

std::vector<PlantedPrompt> planted_prompts(std::uint64_t seed, std::size_t count) {
  std::vector<PlantedPrompt> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(planted_prompt(hash_combine(seed, i)));
  return out;
}

}  // namespace t2ia::testing
