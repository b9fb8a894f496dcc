#include "fabula/emotion.hpp"

#include "fabula/error.hpp"
#include "fabula/resources.hpp"
#include "fabula/stemmer.hpp"
#include "fabula/text.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fabula {
namespace {

constexpr std::array<std::string_view, emotion_count> emotion_names = {
    "joy", "trust", "fear", "surprise", "sadness", "disgust", "anger", "anticipation",
};

bool in_unit_interval(double value) {
    return value >= 0.0 && value <= 1.0;
}

}  // namespace

std::string_view to_string(EmotionLabel label) noexcept {
    return emotion_names[index_of(label)];
}

std::optional<EmotionLabel> parse_emotion(std::string_view name) noexcept {
    for (std::size_t i = 0; i < emotion_count; ++i) {
        if (iequals(name, emotion_names[i])) {
            return all_emotions[i];
        }
    }
    return std::nullopt;
}

EmotionLabel opposite(EmotionLabel label) noexcept {
    // The wheel order places each emotion four steps from its opposite.
    return all_emotions[(index_of(label) + 4) % emotion_count];
}

EmotionVector::EmotionVector(const std::array<double, emotion_count>& values) : values_(values) {
    for (std::size_t i = 0; i < emotion_count; ++i) {
        if (!in_unit_interval(values[i])) {
            throw InvalidArgument("emotion component '" + std::string(emotion_names[i]) +
                                  "' outside [0, 1]");
        }
    }
}

EmotionVector EmotionVector::clamped(const std::array<double, emotion_count>& raw,
                                     std::size_t* clamped) {
    std::size_t changed = 0;
    EmotionVector out;
    for (std::size_t i = 0; i < emotion_count; ++i) {
        double value = raw[i];
        if (std::isnan(value)) {
            value = 0.0;
        }
        const double bounded = std::clamp(value, 0.0, 1.0);
        if (bounded != raw[i]) {
            ++changed;
        }
        out.values_[i] = bounded;
    }
    if (clamped != nullptr) {
        *clamped = changed;
    }
    return out;
}

void EmotionVector::set(EmotionLabel label, double value) {
    if (!in_unit_interval(value)) {
        throw InvalidArgument("emotion component '" + std::string(to_string(label)) +
                              "' outside [0, 1]");
    }
    values_[index_of(label)] = value;
}

EmotionLabelSet::EmotionLabelSet(std::initializer_list<EmotionLabel> labels) {
    for (const auto label : labels) {
        insert(label);
    }
}

EmotionLabelSet EmotionLabelSet::all() {
    EmotionLabelSet set;
    for (const auto label : all_emotions) {
        set.insert(label);
    }
    return set;
}

std::size_t EmotionLabelSet::size() const noexcept {
    return static_cast<std::size_t>(std::popcount(bits_));
}

std::vector<EmotionLabel> EmotionLabelSet::labels() const {
    std::vector<EmotionLabel> out;
    for (const auto label : all_emotions) {
        if (contains(label)) out.push_back(label);
    }
    return out;
}

std::vector<std::string> EmotionLabelSet::names() const {
    std::vector<std::string> out;
    for (const auto label : labels()) {
        out.emplace_back(to_string(label));
    }
    return out;
}

EmotionLabelSet EmotionLabelSet::from_names(const std::vector<std::string>& names) {
    EmotionLabelSet set;
    for (const auto& name : names) {
        const auto label = parse_emotion(trim(name));
        if (!label) {
            throw InvalidArgument("unknown emotion label '" + name + "'");
        }
        set.insert(*label);
    }
    return set;
}

EmotionLabelSet threshold_labels(const EmotionVector& v, double tau) {
    if (!in_unit_interval(tau)) {
        throw InvalidArgument("threshold must lie in [0, 1]");
    }
    EmotionLabelSet out;
    for (const auto label : all_emotions) {
        if (v[label] >= tau) out.insert(label);
    }
    return out;
}

EmotionLabelSet top_k_labels(const EmotionVector& v, std::size_t k) {
    if (k > emotion_count) {
        throw InvalidArgument("top_k_labels: k must be at most 8");
    }
    std::array<std::size_t, emotion_count> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return v.values()[a] > v.values()[b];
    });
    EmotionLabelSet out;
    for (std::size_t i = 0; i < k; ++i) {
        out.insert(all_emotions[order[i]]);
    }
    return out;
}

void EmotionLexicon::add(std::string_view word, EmotionLabel label, double weight) {
    if (!in_unit_interval(weight)) {
        throw InvalidArgument("lexicon weight outside [0, 1]");
    }
    auto& entry = entries_[porter_stem(to_lower(trim(word)))];
    entry.set(label, std::max(entry[label], weight));
}

EmotionLexicon EmotionLexicon::parse(std::string_view text) {
    EmotionLexicon lexicon;
    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw_line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 3) {
            throw ParseError("lexicon line " + std::to_string(line_no) +
                                 ": expected stem<TAB>label<TAB>weight",
                             line_no);
        }
        const auto label = parse_emotion(trim(fields[1]));
        if (!label) {
            throw ParseError("lexicon line " + std::to_string(line_no) + ": unknown label '" +
                                 fields[1] + "'",
                             line_no);
        }
        const auto weight_text = trim(fields[2]);
        double weight = 0.0;
        const auto* const end = weight_text.data() + weight_text.size();
        const auto [ptr, ec] = std::from_chars(weight_text.data(), end, weight);
        if (ec != std::errc{} || ptr != end || !in_unit_interval(weight)) {
            throw ParseError("lexicon line " + std::to_string(line_no) +
                                 ": weight must be a decimal in [0, 1]",
                             line_no);
        }
        lexicon.add(fields[0], *label, weight);
    }
    return lexicon;
}

EmotionLexicon EmotionLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFound("cannot open lexicon file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

const EmotionLexicon& EmotionLexicon::bundled() {
    static const EmotionLexicon lexicon = parse(resources::emotion_lexicon());
    return lexicon;
}

const EmotionVector* EmotionLexicon::find(std::string_view word) const {
    const auto it = entries_.find(porter_stem(to_lower(word)));
    return it == entries_.end() ? nullptr : &it->second;
}

EmotionVector lexicon_score(std::string_view sentence, const EmotionLexicon& lexicon) {
    std::array<double, emotion_count> scores{};
    for (const auto& word : lowercase_words(sentence)) {
        const auto* weights = lexicon.find(word);
        if (weights == nullptr) {
            continue;
        }
        for (std::size_t i = 0; i < emotion_count; ++i) {
            scores[i] = std::max(scores[i], weights->values()[i]);
        }
    }
    return EmotionVector(scores);
}

}  // namespace fabula
