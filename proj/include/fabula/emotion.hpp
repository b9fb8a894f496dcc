#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fabula {

/// Plutchik's eight basic emotions in canonical wheel order.
enum class EmotionLabel : std::uint8_t {
    joy,
    trust,
    fear,
    surprise,
    sadness,
    disgust,
    anger,
    anticipation,
};

inline constexpr std::size_t emotion_count = 8;

inline constexpr std::array<EmotionLabel, emotion_count> all_emotions = {
    EmotionLabel::joy,     EmotionLabel::trust,   EmotionLabel::fear,  EmotionLabel::surprise,
    EmotionLabel::sadness, EmotionLabel::disgust, EmotionLabel::anger, EmotionLabel::anticipation,
};

std::string_view to_string(EmotionLabel label) noexcept;
std::optional<EmotionLabel> parse_emotion(std::string_view name) noexcept;
EmotionLabel opposite(EmotionLabel label) noexcept;

constexpr std::size_t index_of(EmotionLabel label) noexcept {
    return static_cast<std::size_t>(label);
}

/// Eight scores in [0, 1], indexed by canonical label order.
class EmotionVector {
public:
    EmotionVector() = default;

    /// Throws InvalidArgument if any component is outside [0, 1] or NaN.
    explicit EmotionVector(const std::array<double, emotion_count>& values);

    /// Out-of-range components are clamped into [0, 1] (NaN becomes 0).
    /// `clamped` receives the number of components that had to be changed.
    static EmotionVector clamped(const std::array<double, emotion_count>& raw,
                                 std::size_t* clamped = nullptr);

    [[nodiscard]] double operator[](EmotionLabel label) const noexcept {
        return values_[index_of(label)];
    }
    void set(EmotionLabel label, double value);

    [[nodiscard]] const std::array<double, emotion_count>& values() const noexcept {
        return values_;
    }

    friend bool operator==(const EmotionVector&, const EmotionVector&) = default;

private:
    std::array<double, emotion_count> values_{};
};

/// Subset of labels, always iterated in canonical order.
class EmotionLabelSet {
public:
    EmotionLabelSet() = default;
    EmotionLabelSet(std::initializer_list<EmotionLabel> labels);

    static EmotionLabelSet all();

    void insert(EmotionLabel label) noexcept { bits_ |= bit(label); }
    void erase(EmotionLabel label) noexcept { bits_ &= static_cast<std::uint8_t>(~bit(label)); }
    [[nodiscard]] bool contains(EmotionLabel label) const noexcept {
        return (bits_ & bit(label)) != 0;
    }
    [[nodiscard]] bool empty() const noexcept { return bits_ == 0; }
    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] bool is_subset_of(const EmotionLabelSet& other) const noexcept {
        return (bits_ & ~other.bits_) == 0;
    }

    [[nodiscard]] std::vector<EmotionLabel> labels() const;

    /// Lowercase names in canonical order.
    [[nodiscard]] std::vector<std::string> names() const;

    /// Parses names case-insensitively; throws InvalidArgument on unknown names.
    static EmotionLabelSet from_names(const std::vector<std::string>& names);

    friend bool operator==(const EmotionLabelSet&, const EmotionLabelSet&) = default;

private:
    static constexpr std::uint8_t bit(EmotionLabel label) noexcept {
        return static_cast<std::uint8_t>(1U << index_of(label));
    }

    std::uint8_t bits_ = 0;
};

/// Labels whose component is >= tau. Requires 0 <= tau <= 1.
EmotionLabelSet threshold_labels(const EmotionVector& v, double tau);

/// Labels of the k largest components; ties go to the earlier canonical label.
/// Throws InvalidArgument when k > 8.
EmotionLabelSet top_k_labels(const EmotionVector& v, std::size_t k);

inline constexpr double default_emotion_threshold = 0.5;

/// Word-stem to per-emotion weight table. Keys are stored stemmed, so
/// "hoping" and "hope" land on the same entry.
class EmotionLexicon {
public:
    EmotionLexicon() = default;

    void add(std::string_view word, EmotionLabel label, double weight);

    /// Lines are `stem<TAB>label<TAB>weight`; `#` starts a comment line.
    /// Throws ParseError naming the line on malformed input.
    static EmotionLexicon parse(std::string_view text);
    static EmotionLexicon load(const std::filesystem::path& path);

    /// The lexicon shipped with the library.
    static const EmotionLexicon& bundled();

    [[nodiscard]] const EmotionVector* find(std::string_view word) const;
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

private:
    std::unordered_map<std::string, EmotionVector> entries_;
};

/// Per-emotion max over the sentence's tokens of their lexicon weights.
EmotionVector lexicon_score(std::string_view sentence, const EmotionLexicon& lexicon);

}  // namespace fabula
