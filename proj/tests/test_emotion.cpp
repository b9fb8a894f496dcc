#include "fabula/emotion.hpp"
#include "fabula/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace fabula {
namespace {

TEST(Emotion, CanonicalOrderAndNames) {
    ASSERT_EQ(all_emotions.size(), 8U);
    const char* names[] = {"joy",     "trust", "fear",  "surprise",
                           "sadness", "disgust", "anger", "anticipation"};
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(to_string(all_emotions[i]), names[i]);
        EXPECT_EQ(parse_emotion(names[i]), all_emotions[i]);
    }
    EXPECT_EQ(parse_emotion("JOY"), EmotionLabel::joy);
    EXPECT_FALSE(parse_emotion("boredom"));
}

TEST(Emotion, OppositesPairUp) {
    EXPECT_EQ(opposite(EmotionLabel::joy), EmotionLabel::sadness);
    EXPECT_EQ(opposite(EmotionLabel::trust), EmotionLabel::disgust);
    EXPECT_EQ(opposite(EmotionLabel::fear), EmotionLabel::anger);
    EXPECT_EQ(opposite(EmotionLabel::surprise), EmotionLabel::anticipation);
    for (const auto label : all_emotions) EXPECT_EQ(opposite(opposite(label)), label);
}

TEST(EmotionVector, ValidatesRange) {
    EXPECT_THROW(EmotionVector({0, 0, 0, 0, 0, 0, 0, 1.5}), InvalidArgument);
    EXPECT_THROW(EmotionVector({-0.1, 0, 0, 0, 0, 0, 0, 0}), InvalidArgument);
    EmotionVector v;
    EXPECT_THROW(v.set(EmotionLabel::joy, 2.0), InvalidArgument);
    v.set(EmotionLabel::joy, 0.25);
    EXPECT_EQ(v[EmotionLabel::joy], 0.25);
}

TEST(EmotionVector, ClampCountsChanges) {
    std::size_t changed = 0;
    const auto v = EmotionVector::clamped({1.2, -0.5, 0.5, std::nan(""), 0, 0, 0, 1}, &changed);
    EXPECT_EQ(changed, 3U);
    EXPECT_EQ(v[EmotionLabel::joy], 1.0);
    EXPECT_EQ(v[EmotionLabel::trust], 0.0);
    EXPECT_EQ(v[EmotionLabel::surprise], 0.0);
    EXPECT_EQ(v[EmotionLabel::fear], 0.5);
}

TEST(EmotionLabelSet, SetOperations) {
    EmotionLabelSet s{EmotionLabel::anticipation, EmotionLabel::joy};
    EXPECT_EQ(s.size(), 2U);
    EXPECT_EQ(s.names(), (std::vector<std::string>{"joy", "anticipation"}));
    s.insert(EmotionLabel::trust);
    s.erase(EmotionLabel::joy);
    EXPECT_FALSE(s.contains(EmotionLabel::joy));
    EXPECT_TRUE(s.is_subset_of(EmotionLabelSet::all()));
    EXPECT_EQ(EmotionLabelSet::all().size(), 8U);
    EXPECT_TRUE(EmotionLabelSet{}.empty());
    EXPECT_EQ(EmotionLabelSet::from_names({"Trust", "anticipation"}), s);
    EXPECT_THROW((void)EmotionLabelSet::from_names({"boredom"}), InvalidArgument);
}

TEST(Threshold, CoasterExample) {
    const EmotionVector v({0.78, 0.61, 0.12, 0.20, 0.05, 0.02, 0.03, 0.86});
    EXPECT_EQ(threshold_labels(v, default_emotion_threshold),
              (EmotionLabelSet{EmotionLabel::joy, EmotionLabel::trust, EmotionLabel::anticipation}));
    EXPECT_EQ(threshold_labels(v, 0.0), EmotionLabelSet::all());
    EXPECT_EQ(threshold_labels(v, 0.61).size(), 3U);
    EXPECT_THROW((void)threshold_labels(v, 1.1), InvalidArgument);
}

TEST(Threshold, MonotoneInTau) {
    const EmotionVector v({0.9, 0.1, 0.4, 0.4, 0.5, 0.0, 0.7, 0.3});
    for (double lo = 0.0; lo <= 1.0; lo += 0.05) {
        for (double hi = lo; hi <= 1.0; hi += 0.05) {
            EXPECT_TRUE(threshold_labels(v, hi).is_subset_of(threshold_labels(v, lo)));
        }
    }
}

TEST(TopK, TiesFollowCanonicalOrder) {
    const EmotionVector v({0.2, 0.5, 0.5, 0.1, 0.5, 0.0, 0.0, 0.0});
    EXPECT_EQ(top_k_labels(v, 2), (EmotionLabelSet{EmotionLabel::trust, EmotionLabel::fear}));
    EXPECT_EQ(top_k_labels(v, 0).size(), 0U);
    EXPECT_EQ(top_k_labels(v, 8), EmotionLabelSet::all());
    EXPECT_THROW((void)top_k_labels(v, 9), InvalidArgument);
}

TEST(Lexicon, ParseLoadAndStems) {
    const auto lex = EmotionLexicon::parse("# comment\ncheerful\tjoy\t0.8\ncheerful\tjoy\t0.3\n");
    ASSERT_NE(lex.find("cheerful"), nullptr);
    EXPECT_EQ((*lex.find("Cheerful"))[EmotionLabel::joy], 0.8);
    EXPECT_EQ(lex.find("gloomy"), nullptr);
}

TEST(Lexicon, ParseErrorsCarryLine) {
    try {
        (void)EmotionLexicon::parse("happy\tjoy\t0.9\nsad\tgloom\t0.5\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2U);
    }
    EXPECT_THROW((void)EmotionLexicon::parse("happy\tjoy\n"), ParseError);
    EXPECT_THROW((void)EmotionLexicon::parse("happy\tjoy\t1.5\n"), ParseError);
    EXPECT_THROW((void)EmotionLexicon::parse("happy\tjoy\tx\n"), ParseError);
}

TEST(Lexicon, BundledScoresSentences) {
    const auto& lex = EmotionLexicon::bundled();
    EXPECT_GT(lex.size(), 50U);
    const auto sad = lexicon_score("Mary had been feeling depressed lately.", lex);
    EXPECT_GE(sad[EmotionLabel::sadness], 0.5);
    const auto neutral = lexicon_score("The the the.", lex);
    EXPECT_EQ(neutral, EmotionVector{});
}

}  // namespace
}  // namespace fabula
