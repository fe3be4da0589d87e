#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace t2ia::testing {

struct PlantedPrompt {
  std::string text;
  std::string keyword;
  std::size_t keyword_word = 0;  // position among word tokens
};

/// Filler words (none of them weighted by the synthetic victim) with one
/// bundled keyword dropped in at a seeded position.
PlantedPrompt planted_prompt(std::uint64_t seed, std::size_t min_words = 6,
                             std::size_t max_words = 10);

std::vector<PlantedPrompt> planted_prompts(std::uint64_t seed, std::size_t count);

const std::vector<std::string>& filler_words();

}  // namespace t2ia::testing
