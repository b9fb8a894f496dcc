#include "fabula/mock_backends.hpp"

#include "fabula/keywords.hpp"
#include "fabula/png.hpp"
#include "fabula/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace fabula {
namespace {

// Deterministic stream of 64-bit values derived from a seed.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    double uniform() { return unit_interval(next()); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

private:
    std::uint64_t state_;
};

std::string capitalize(std::string text) {
    if (!text.empty()) {
        text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    }
    return text;
}

bool same_sentence(std::string_view a, std::string_view b) {
    return iequals(trim(a), trim(b));
}

std::string_view feeling_word(EmotionLabel label) {
    switch (label) {
    case EmotionLabel::joy: return "happy";
    case EmotionLabel::trust: return "safe";
    case EmotionLabel::fear: return "afraid";
    case EmotionLabel::surprise: return "surprised";
    case EmotionLabel::sadness: return "sad";
    case EmotionLabel::disgust: return "disgusted";
    case EmotionLabel::anger: return "angry";
    case EmotionLabel::anticipation: return "eager";
    }
    return "calm";
}

// The subject a continuation should use, taken from the story so far.
std::string story_subject(const std::vector<std::string>& context) {
    for (auto it = context.rbegin(); it != context.rend(); ++it) {
        for (const auto& word : lowercase_words(*it)) {
            if (word == "he" || word == "she" || word == "they" || word == "i" || word == "we") {
                return word == "i" ? "I" : capitalize(word);
            }
        }
    }
    if (!context.empty()) {
        const auto keywords = extract_keywords(context.front());
        if (!keywords.empty()) {
            const auto& first = keywords.phrases().front();
            if (std::isupper(static_cast<unsigned char>(first.front())) != 0) return first;
        }
    }
    return "They";
}

std::string emotion_tail(const EmotionLabelSet& emotions) {
    const auto labels = emotions.labels();
    if (labels.empty()) return "";
    std::string tail = " and felt ";
    tail += feeling_word(labels[0]);
    if (labels.size() > 1) {
        tail += " and ";
        tail += feeling_word(labels[1]);
    }
    return tail;
}

std::string prompted_sentence(const PromptSpec& spec, SplitMix& rng) {
    static constexpr std::array<std::string_view, 5> verbs = {
        "noticed", "talked about", "looked for", "thought about", "found",
    };
    std::vector<std::string> objects;
    std::string subject;
    for (const auto& phrase : spec.keywords.phrases()) {
        const auto lower = to_lower(phrase);
        const bool person = lower == "i" || lower == "he" || lower == "she" || lower == "they" ||
                            lower == "we" ||
                            (std::isupper(static_cast<unsigned char>(phrase.front())) != 0 &&
                             phrase.find(' ') == std::string::npos);
        if (subject.empty() && person) {
            subject = phrase == "i" ? "I" : phrase;
        } else {
            objects.push_back(phrase);
        }
    }
    if (subject.empty()) subject = story_subject(spec.context);
    subject = capitalize(subject);

    std::string sentence = subject;
    if (objects.empty()) {
        static constexpr std::array<std::string_view, 3> idle = {
            " waited to see what would happen next",
            " took a deep breath",
            " thought about the day",
        };
        sentence += idle[rng.index(idle.size())];
    } else {
        sentence += ' ';
        sentence += verbs[rng.index(verbs.size())];
        sentence += ' ';
        sentence += objects[0];
        for (std::size_t i = 1; i < objects.size(); ++i) {
            sentence += i + 1 == objects.size() ? " and " : ", ";
            sentence += objects[i];
        }
    }
    sentence += emotion_tail(spec.emotions);
    sentence += '.';
    return sentence;
}

std::string baseline_sentence(const PromptSpec& spec, SplitMix& rng) {
    static constexpr std::array<std::string_view, 5> endings = {
        " was very happy.",
        " decided to go home.",
        " did not know what to do.",
        " was very sad.",
        " went to bed early.",
    };
    return story_subject(spec.context) + std::string(endings[rng.index(endings.size())]);
}

struct CocoWord {
    std::string_view word;
    std::string_view label;
};

// Words that name (or strongly imply) a COCO detector class.
constexpr std::array<CocoWord, 84> coco_vocabulary = {{
    {"boy", "person"}, {"girl", "person"}, {"man", "person"}, {"woman", "person"},
    {"men", "person"}, {"women", "person"}, {"kid", "person"}, {"kids", "person"},
    {"child", "person"}, {"children", "person"}, {"people", "person"}, {"friend", "person"},
    {"friends", "person"}, {"mom", "person"}, {"dad", "person"}, {"mother", "person"},
    {"father", "person"}, {"teacher", "person"}, {"doctor", "person"}, {"psychiatrist", "person"},
    {"he", "person"}, {"she", "person"}, {"i", "person"}, {"they", "person"},
    {"we", "person"}, {"her", "person"}, {"him", "person"}, {"baby", "person"},
    {"family", "person"}, {"bike", "bicycle"}, {"bicycle", "bicycle"}, {"car", "car"},
    {"cars", "car"}, {"motorcycle", "motorcycle"}, {"plane", "airplane"}, {"airplane", "airplane"},
    {"bus", "bus"}, {"train", "train"}, {"truck", "truck"}, {"boat", "boat"},
    {"ship", "boat"}, {"bench", "bench"}, {"bird", "bird"}, {"birds", "bird"},
    {"cat", "cat"}, {"dog", "dog"}, {"puppy", "dog"}, {"horse", "horse"},
    {"horses", "horse"}, {"sheep", "sheep"}, {"cow", "cow"}, {"backpack", "backpack"},
    {"umbrella", "umbrella"}, {"bag", "handbag"}, {"purse", "handbag"}, {"handbag", "handbag"},
    {"suitcase", "suitcase"}, {"kite", "kite"}, {"surfboard", "surfboard"}, {"bottle", "bottle"},
    {"wine", "wine glass"}, {"cup", "cup"}, {"coffee", "cup"}, {"tea", "cup"},
    {"bowl", "bowl"}, {"apple", "apple"}, {"sandwich", "sandwich"}, {"pizza", "pizza"},
    {"cake", "cake"}, {"chair", "chair"}, {"couch", "couch"}, {"sofa", "couch"},
    {"plant", "potted plant"}, {"flowers", "potted plant"}, {"bed", "bed"}, {"table", "dining table"},
    {"dinner", "dining table"}, {"tv", "tv"}, {"television", "tv"}, {"laptop", "laptop"},
    {"computer", "laptop"}, {"phone", "cell phone"}, {"book", "book"}, {"clock", "clock"},
}};

constexpr std::array<std::string_view, 10> imagined_objects = {
    "bench", "bird", "handbag", "umbrella", "potted plant", "chair", "dog", "clock", "book", "cup",
};

BoundingBox seeded_box(SplitMix& rng) {
    BoundingBox box;
    box.w = 0.1 + 0.4 * rng.uniform();
    box.h = 0.1 + 0.4 * rng.uniform();
    box.x = (1.0 - box.w) * rng.uniform();
    box.y = (1.0 - box.h) * rng.uniform();
    return box;
}

}  // namespace

StoryScript mary_script(MockTextStyle style) {
    if (style == MockTextStyle::prompted) {
        return {"mary-prompted",
                {
                    "Mary had been feeling depressed lately.",
                    "She decided to go see a psychiatrist.",
                    "Psyched, her psychiatrist diagnosed her with depression and sent her to see.",
                    "Medicant took her to get an antidepressant and prescribed her.",
                    "Thankfully it eventually made her feel better again.",
                }};
    }
    return {"mary-baseline",
            {
                "Mary had been feeling depressed lately.",
                "She decided to go to a psychiatrist.",
                "She was diagnosed with schizophrenia.",
                "She was very happy.",
                "She was very happy.",
            }};
}

MockTextBackend::MockTextBackend(std::uint64_t seed, MockTextStyle style)
    : MockTextBackend(seed, style, {mary_script(style)}) {}

MockTextBackend::MockTextBackend(std::uint64_t seed, MockTextStyle style,
                                 std::vector<StoryScript> scripts)
    : seed_(seed), style_(style), scripts_(std::move(scripts)) {}

std::string MockTextBackend::generate_text(const std::string& prompt,
                                           const GenerationConfig& config) {
    config.validate();
    if (trim(prompt).empty()) {
        throw InvalidArgument("prompt must be non-empty");
    }
    PromptSpec spec;
    try {
        spec = parse_prompt(prompt);
    } catch (const ParseError&) {
        // Free-form prompts are treated as a single context sentence.
        spec.context = {std::string(trim(prompt))};
    }

    for (const auto& script : scripts_) {
        const auto& context = spec.context;
        if (context.empty() || context.size() >= script.sentences.size()) continue;
        const bool prefix = std::equal(context.begin(), context.end(), script.sentences.begin(),
                                       [](const std::string& a, const std::string& b) {
                                           return same_sentence(a, b);
                                       });
        if (prefix) return script.sentences[context.size()];
    }

    SplitMix rng(mix64(seed_ ^ fnv1a(prompt)));
    return style_ == MockTextStyle::prompted ? prompted_sentence(spec, rng)
                                             : baseline_sentence(spec, rng);
}

MockEmotionBackend::MockEmotionBackend()
    : MockEmotionBackend({
          {"He was hoping this year to be tall enough for the coaster.",
           EmotionVector({0.78, 0.61, 0.12, 0.20, 0.05, 0.02, 0.03, 0.86})},
      }) {}

MockEmotionBackend::MockEmotionBackend(std::map<std::string, EmotionVector> fixtures)
    : fixtures_(std::move(fixtures)) {}

EmotionVector MockEmotionBackend::predict_next_emotions(const std::vector<std::string>& context) {
    if (context.empty()) {
        throw InvalidArgument("emotion prediction needs at least one context sentence");
    }
    for (const auto& [sentence, vector] : fixtures_) {
        if (same_sentence(sentence, context.back())) return vector;
    }
    return lexicon_score(context.back(), EmotionLexicon::bundled());
}

MockImageBackend::MockImageBackend(std::uint64_t seed, std::uint32_t size)
    : seed_(seed), size_(size) {
    if (size_ < 8) {
        throw InvalidArgument("mock images must be at least 8 pixels wide");
    }
}

std::vector<ImageRef> MockImageBackend::generate_images(const ImageRequest& req) {
    req.validate();
    const auto prompt_hash = fnv1a(req.prompt);
    std::vector<ImageRef> out;
    out.reserve(static_cast<std::size_t>(req.n_batches));
    for (int index = 0; index < req.n_batches; ++index) {
        SplitMix rng(mix64(seed_ ^ prompt_hash) + static_cast<std::uint64_t>(index));
        const std::array<std::uint8_t, 3> base = {
            static_cast<std::uint8_t>(rng.next()), static_cast<std::uint8_t>(rng.next()),
            static_cast<std::uint8_t>(rng.next())};
        std::vector<std::uint8_t> pixels(std::size_t{size_} * size_ * 3);
        const std::uint32_t block = size_ / 8;
        for (std::uint32_t y = 0; y < size_; ++y) {
            for (std::uint32_t x = 0; x < size_; ++x) {
                const auto cell = (y / block) % 8 * 8 + (x / block) % 8;
                const bool lit = ((prompt_hash >> cell) & 1U) != 0;
                for (std::size_t c = 0; c < 3; ++c) {
                    const auto shade = lit ? base[c] ^ 0x5AU : base[c];
                    pixels[(std::size_t{y} * size_ + x) * 3 + c] = static_cast<std::uint8_t>(shade);
                }
            }
        }
        auto bytes = png::encode_rgb(size_, size_, pixels,
                                     {{"generator", "fabula-mock"},
                                      {"prompt", req.prompt},
                                      {"batch-index", std::to_string(index)}});
        out.push_back(ImageRef::from_png(std::move(bytes), req.prompt));
    }
    return out;
}

MockDetectionBackend::MockDetectionBackend(std::uint64_t seed)
    : MockDetectionBackend(seed, default_fixtures()) {}

MockDetectionBackend::MockDetectionBackend(std::uint64_t seed, std::vector<Fixture> fixtures)
    : seed_(seed), fixtures_(std::move(fixtures)) {}

std::vector<MockDetectionBackend::Fixture> MockDetectionBackend::default_fixtures() {
    return {
        {"beach-boy",
         "picking up shells on a beach",
         {
             {"person", 0.91, {0.30, 0.25, 0.30, 0.60}},
             {"handbag", 0.66, {0.48, 0.55, 0.12, 0.15}},
             {"bird", 0.52, {0.75, 0.10, 0.06, 0.05}},
             {"umbrella", 0.41, {0.05, 0.20, 0.20, 0.25}},
             {"surfboard", 0.33, {0.80, 0.60, 0.15, 0.08}},
         }},
    };
}

std::vector<Detection> MockDetectionBackend::detect_objects(const ImageRef& image,
                                                            double threshold) {
    const auto text = png::read_text_chunks(image.png);
    const auto found = text.find("prompt");
    const std::string prompt = found != text.end() ? found->second : image.prompt;

    for (const auto& fixture : fixtures_) {
        if (!fixture.prompt_substring.empty() &&
            to_lower(prompt).find(to_lower(fixture.prompt_substring)) != std::string::npos) {
            return filter_and_sort(fixture.detections, threshold);
        }
    }

    SplitMix rng(mix64(seed_ ^ fnv1a(image.id)));
    std::vector<Detection> detections;
    std::vector<std::string_view> seen;
    const auto words = lowercase_words(prompt);
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string_view label;
        for (const auto& entry : coco_vocabulary) {
            if (entry.word == words[i]) label = entry.label;
        }
        // A capitalised opening word that is not a closed-class word reads as a name.
        if (label.empty() && i == 0 && !prompt.empty() &&
            std::isupper(static_cast<unsigned char>(prompt.front())) != 0 &&
            WordClassList::bundled().find(words[i]) == nullptr) {
            label = "person";
        }
        if (label.empty() || std::find(seen.begin(), seen.end(), label) != seen.end()) continue;
        seen.push_back(label);
        const auto instances = label == "person" ? 1 + rng.index(3) : 1;
        for (std::size_t k = 0; k < instances; ++k) {
            detections.push_back({std::string(label), 0.55 + 0.4 * rng.uniform(), seeded_box(rng)});
        }
    }
    const auto imagined = imagined_objects[rng.index(imagined_objects.size())];
    detections.push_back({std::string(imagined), 0.25 + 0.5 * rng.uniform(), seeded_box(rng)});
    return filter_and_sort(std::move(detections), threshold);
}

Backends make_mock_backends(std::uint64_t seed, MockTextStyle style) {
    return {
        std::make_shared<MockTextBackend>(seed, style),
        std::make_shared<MockEmotionBackend>(),
        std::make_shared<MockImageBackend>(seed),
        std::make_shared<MockDetectionBackend>(seed),
    };
}

}  // namespace fabula
