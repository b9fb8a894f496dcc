#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fabula {

enum class CoarsePos { det, pron, noun, verb, adj, adp, other };

std::string_view to_string(CoarsePos pos) noexcept;

struct Token {
    std::string surface;
    std::string lowercase;
    CoarsePos coarse_pos = CoarsePos::other;
    std::size_t index = 0;
    /// Byte span of the surface in the source sentence.
    std::size_t begin = 0;
    std::size_t end = 0;
    /// Punctuation separated this token from the previous one.
    bool after_punctuation = false;

    friend bool operator==(const Token&, const Token&) = default;
};

/// Ordered phrases, unique under case-insensitive comparison. The first casing
/// seen wins; insertion order is preserved.
class KeywordSet {
public:
    KeywordSet() = default;
    KeywordSet(std::initializer_list<std::string> phrases);

    /// Trims the phrase; returns false for empty or duplicate phrases.
    bool insert(std::string_view phrase);
    void merge(const KeywordSet& other);

    [[nodiscard]] bool contains(std::string_view phrase) const;
    [[nodiscard]] const std::vector<std::string>& phrases() const noexcept { return phrases_; }
    [[nodiscard]] std::size_t size() const noexcept { return phrases_.size(); }
    [[nodiscard]] bool empty() const noexcept { return phrases_.empty(); }

    /// The same phrases with a leading determiner removed ("the movie" -> "movie").
    [[nodiscard]] KeywordSet without_determiners() const;

    friend bool operator==(const KeywordSet&, const KeywordSet&) = default;

private:
    std::vector<std::string> phrases_;
};

/// Word list used by the tagger: closed-class words plus open-class exceptions
/// the suffix rules would get wrong.
class WordClassList {
public:
    /// Lines are `word<TAB>POS`, POS one of DET PRON NOUN VERB ADJ ADP OTHER.
    static WordClassList parse(std::string_view text);
    static WordClassList load(const std::filesystem::path& path);
    static const WordClassList& bundled();

    [[nodiscard]] const CoarsePos* find(std::string_view lowercase) const;
    [[nodiscard]] std::size_t size() const noexcept { return words_.size(); }

private:
    std::unordered_map<std::string, CoarsePos> words_;
};

std::vector<Token> tokenize(std::string_view sentence,
                            const WordClassList& words = WordClassList::bundled());

/// Noun-phrase entities: optional determiner, adjectives, then one or more
/// nouns; plus standalone subject pronouns. Phrases are verbatim spans of the
/// input.
KeywordSet extract_keywords(std::string_view sentence,
                            const WordClassList& words = WordClassList::bundled());

/// Phrases joined by ", ".
std::string keywords_to_prompt_fragment(const KeywordSet& keywords);

}  // namespace fabula
