#include "fabula/error.hpp"
#include "fabula/prompt.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace fabula {
namespace {

TEST(Prompt, GoldenFixtures) {
    PromptSpec movie;
    movie.keywords = {"I", "the movie", "the whole thing"};
    movie.context = {"I brought the movie home and watched the whole thing."};
    movie.emotions = {EmotionLabel::anticipation, EmotionLabel::joy};
    EXPECT_EQ(build_prompt(movie), testing::read_fixture("prompts/movie.txt"));

    PromptSpec mary;
    mary.keywords = {"She", "a psychiatrist"};
    mary.context = {"Mary had been feeling depressed lately.",
                    "She decided to go see a psychiatrist."};
    mary.emotions = {EmotionLabel::sadness, EmotionLabel::trust};
    EXPECT_EQ(build_prompt(mary), testing::read_fixture("prompts/mary.txt"));

    PromptSpec empty;
    empty.context = {"He was hoping this year to be tall enough for the coaster."};
    EXPECT_EQ(build_prompt(empty), testing::read_fixture("prompts/empty_sections.txt"));
}

TEST(Prompt, ShapeOfEveryPrompt) {
    PromptSpec spec;
    spec.context = {"A."};
    const auto p = build_prompt(spec);
    EXPECT_EQ(p.rfind("Generate next sentence based on following \n", 0), 0U);
    std::size_t sentinels = 0;
    for (auto pos = p.find("<extra_id_0>"); pos != std::string::npos;
         pos = p.find("<extra_id_0>", pos + 1)) {
        ++sentinels;
    }
    EXPECT_EQ(sentinels, 3U);
    EXPECT_EQ(p.back(), ']');
}

TEST(Prompt, ValidatesContext) {
    PromptSpec spec;
    spec.context = {"a.", "b.", "c.", "d.", "e."};
    EXPECT_THROW((void)build_prompt(spec), InvalidArgument);
    spec.context = {"a.", "  "};
    EXPECT_THROW((void)build_prompt(spec), InvalidArgument);
}

TEST(Prompt, ParseErrorsNameTheLine) {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            (void)parse_prompt(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    const auto good = testing::read_fixture("prompts/mary.txt");
    EXPECT_EQ(line_of("Generate next sentence based on following\n"), 1U);
    EXPECT_EQ(line_of(good.substr(0, good.find("<extra_id_0>CONTEXT") - 1)), 3U);
    EXPECT_EQ(line_of(good + "\nextra"), 5U);
    std::string bad_emotion = good;
    bad_emotion.replace(bad_emotion.find("trust"), 5, "bliss");
    EXPECT_EQ(line_of(bad_emotion), 4U);
    std::string bad_sentinel = good;
    bad_sentinel.replace(bad_sentinel.find("<extra_id_0>KEY"), 12, "<extra_id_1>");
    EXPECT_EQ(line_of(bad_sentinel), 2U);
}

TEST(Prompt, DefaultsMatchDecodingConfiguration) {
    const GenerationConfig c;
    EXPECT_EQ(c.max_source_length, 512);
    EXPECT_EQ(c.max_output_length, 50);
    EXPECT_EQ(c.top_k, 3);
    EXPECT_EQ(c.repetition_penalty, 2.6);
    EXPECT_EQ(c.length_penalty, 1.0);
    GenerationConfig bad;
    bad.top_k = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

PromptSpec random_spec(std::mt19937& rng) {
    static const std::vector<std::string> phrases = {
        "Mary", "a psychiatrist", "the movie", "the whole thing", "I", "her dog",
        "a red bike", "Saturday", "the old man", "coffee", "New York", "the coaster",
    };
    static const std::vector<std::string> sentences = {
        "Mary had been feeling depressed lately.", "She decided to go see a psychiatrist.",
        "Was it raining?", "What a day it was!", "He went home.", "The dog barked at 3 a.m.",
        "They laughed, cried, and left.", "Nothing happened",
    };
    PromptSpec spec;
    const auto k = rng() % 5;
    for (std::size_t i = 0; i < k; ++i) spec.keywords.insert(phrases[rng() % phrases.size()]);
    const auto n = rng() % 5;
    for (std::size_t i = 0; i < n; ++i) {
        // An unterminated sentence is only unambiguous in the last slot.
        auto s = sentences[rng() % (sentences.size() - (i + 1 < n ? 1 : 0))];
        spec.context.push_back(s);
    }
    for (const auto label : all_emotions) {
        if (rng() % 3 == 0) spec.emotions.insert(label);
    }
    return spec;
}

TEST(Prompt, RoundTripOnRandomSpecs) {
    std::mt19937 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const auto spec = random_spec(rng);
        EXPECT_EQ(parse_prompt(build_prompt(spec)), spec) << build_prompt(spec);
    }
}

}  // namespace
}  // namespace fabula
