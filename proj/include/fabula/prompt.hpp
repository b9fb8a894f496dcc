#pragma once

#include "fabula/emotion.hpp"
#include "fabula/keywords.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fabula {

/// Inputs to one next-sentence prompt.
struct PromptSpec {
    KeywordSet keywords;
    std::vector<std::string> context;  ///< prior sentences, oldest first
    EmotionLabelSet emotions;

    static constexpr std::size_t max_context = 4;

    /// Throws InvalidArgument on empty context sentences or more than four of them.
    void validate() const;

    friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

/// Decoding parameters forwarded to the text backend.
struct GenerationConfig {
    int max_source_length = 512;
    int max_output_length = 50;
    int top_k = 3;
    double repetition_penalty = 2.6;
    double length_penalty = 1.0;

    /// Throws InvalidArgument unless every field is strictly positive.
    void validate() const;

    friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

inline constexpr std::string_view prompt_header = "Generate next sentence based on following ";
inline constexpr std::string_view prompt_sentinel = "<extra_id_0>";

/// Renders the four-line prompt:
///
///     Generate next sentence based on following
///     <extra_id_0>KEYWORDS: [k1, k2]
///     <extra_id_0>CONTEXT: [s1 s2]
///     <extra_id_0>EMOTION: [e1, e2]
///
/// The header keeps its trailing space and every section uses the same
/// sentinel.
std::string build_prompt(const PromptSpec& spec);

/// Inverse of build_prompt. Throws ParseError naming the first bad line.
///
/// Context is recovered by splitting at sentence-final punctuation followed by
/// a space, so it round-trips whenever each context sentence ends in . ! or ?
/// and contains no such boundary inside it.
PromptSpec parse_prompt(std::string_view prompt);

}  // namespace fabula
