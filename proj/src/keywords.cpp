#include "fabula/keywords.hpp"

#include "fabula/error.hpp"
#include "fabula/resources.hpp"
#include "fabula/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

namespace fabula {
namespace {

constexpr std::array<std::string_view, 7> pos_names = {
    "DET", "PRON", "NOUN", "VERB", "ADJ", "ADP", "OTHER",
};

std::optional<CoarsePos> parse_pos(std::string_view name) {
    for (std::size_t i = 0; i < pos_names.size(); ++i) {
        if (name == pos_names[i]) return static_cast<CoarsePos>(i);
    }
    return std::nullopt;
}

constexpr std::array<std::string_view, 20> auxiliaries = {
    "is", "was", "were", "are", "am", "be", "been", "being", "do", "does", "did",
    "will", "would", "shall", "should", "can", "could", "may", "might", "must",
};

constexpr std::array<std::string_view, 5> nominative_pronouns = {"i", "he", "she", "we", "they"};
constexpr std::array<std::string_view, 2> ambiguous_subjects = {"you", "it"};

// Determiners that stand alone as pronouns when nothing nominal follows.
constexpr std::array<std::string_view, 12> pronoun_capable_determiners = {
    "her", "his", "that", "this", "these", "those", "all", "both", "some", "any", "each", "one",
};

template <std::size_t N>
bool one_of(std::string_view word, const std::array<std::string_view, N>& set) {
    return std::find(set.begin(), set.end(), word) != set.end();
}

bool ends_with(std::string_view word, std::string_view suffix) {
    return word.size() >= suffix.size() &&
           word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_ascii_alpha(char ch) {
    return std::isalpha(static_cast<unsigned char>(ch)) != 0;
}

// Length of a UTF-8 punctuation sequence at `pos` (dashes, curly quotes,
// ellipsis), or 0.
std::size_t unicode_punctuation(std::string_view text, std::size_t pos) {
    if (pos + 2 < text.size() && static_cast<unsigned char>(text[pos]) == 0xE2 &&
        static_cast<unsigned char>(text[pos + 1]) == 0x80) {
        const auto third = static_cast<unsigned char>(text[pos + 2]);
        if ((third >= 0x90 && third <= 0x9F) || third == 0xA6) return 3;
    }
    return 0;
}

bool is_curly_apostrophe(std::string_view text, std::size_t pos) {
    return pos + 2 < text.size() && static_cast<unsigned char>(text[pos]) == 0xE2 &&
           static_cast<unsigned char>(text[pos + 1]) == 0x80 &&
           static_cast<unsigned char>(text[pos + 2]) == 0x99;
}

bool is_word_byte(unsigned char ch) {
    return std::isalnum(ch) != 0 || ch >= 0x80;
}

struct RawToken {
    std::size_t begin;
    std::size_t end;
    bool after_punctuation;
};

std::vector<RawToken> split_tokens(std::string_view text) {
    std::vector<RawToken> out;
    bool pending_punctuation = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto ch = static_cast<unsigned char>(text[i]);
        if (std::isspace(ch) != 0) {
            ++i;
            continue;
        }
        if (const auto len = unicode_punctuation(text, i); len > 0 || !is_word_byte(ch)) {
            pending_punctuation = true;
            i += len > 0 ? len : 1;
            continue;
        }
        const std::size_t begin = i;
        while (i < text.size()) {
            const auto c = static_cast<unsigned char>(text[i]);
            if (unicode_punctuation(text, i) > 0) {
                // A curly apostrophe between letters stays inside the word.
                if (is_curly_apostrophe(text, i) && i + 3 < text.size() && i > begin &&
                    is_ascii_alpha(text[i - 1]) && is_ascii_alpha(text[i + 3])) {
                    i += 3;
                    continue;
                }
                break;
            }
            if (is_word_byte(c)) {
                ++i;
                continue;
            }
            const bool joins = (c == '\'' || c == '-') && i > begin && i + 1 < text.size() &&
                               is_word_byte(static_cast<unsigned char>(text[i - 1])) &&
                               is_word_byte(static_cast<unsigned char>(text[i + 1]));
            if (!joins) break;
            ++i;
        }
        out.push_back({begin, i, pending_punctuation});
        pending_punctuation = false;
    }
    return out;
}

// Working tag used while resolving open-class words.
enum class Draft { resolved, unknown, ing_ed, adj_suffix };

struct Tagged {
    Token token;
    Draft draft = Draft::resolved;
    bool listed = false;
    bool possessive = false;
    bool capitalized = false;
};

bool nominal_ahead(const std::vector<Tagged>& tags, std::size_t i) {
    if (i + 1 >= tags.size() || tags[i + 1].token.after_punctuation) return false;
    const auto& next = tags[i + 1];
    if (next.draft != Draft::resolved) return true;
    return next.token.coarse_pos == CoarsePos::noun || next.token.coarse_pos == CoarsePos::adj;
}

std::optional<CoarsePos> next_pos(const std::vector<Tagged>& tags, std::size_t i) {
    if (i + 1 >= tags.size() || tags[i + 1].token.after_punctuation) return std::nullopt;
    if (tags[i + 1].draft != Draft::resolved) return CoarsePos::noun;
    return tags[i + 1].token.coarse_pos;
}

bool is_auxiliary(const Tagged& t) {
    return t.token.coarse_pos == CoarsePos::verb &&
           (one_of(t.token.lowercase, auxiliaries) || ends_with(t.token.lowercase, "n't"));
}

bool is_subject_pronoun(const std::vector<Tagged>& tags, std::size_t i) {
    const auto& t = tags[i];
    if (t.token.coarse_pos != CoarsePos::pron) return false;
    const auto word = std::string_view(t.token.lowercase).substr(0, t.token.lowercase.find('\''));
    if (one_of(word, nominative_pronouns)) return true;
    if (!one_of(word, ambiguous_subjects)) return false;
    if (i > 0 && !t.token.after_punctuation) {
        const auto prev = tags[i - 1].token.coarse_pos;
        if (prev == CoarsePos::verb || prev == CoarsePos::adp) return false;
    }
    for (std::size_t j = i + 1; j < tags.size(); ++j) {
        if (tags[j].token.after_punctuation) return false;
        if (tags[j].token.coarse_pos == CoarsePos::other) continue;
        return tags[j].token.coarse_pos == CoarsePos::verb;
    }
    return false;
}

std::vector<Tagged> draft_tags(std::string_view sentence, const WordClassList& words) {
    std::vector<Tagged> tags;
    for (const auto& raw : split_tokens(sentence)) {
        Tagged t;
        t.token.surface = std::string(sentence.substr(raw.begin, raw.end - raw.begin));
        t.token.lowercase = to_lower(t.token.surface);
        t.token.index = tags.size();
        t.token.begin = raw.begin;
        t.token.end = raw.end;
        t.token.after_punctuation = raw.after_punctuation;
        t.capitalized = std::isupper(static_cast<unsigned char>(t.token.surface.front())) != 0;

        const std::string& w = t.token.lowercase;
        std::string normalized = w;
        // Curly apostrophes are looked up as straight ones.
        for (std::size_t p = normalized.find("\xE2\x80\x99"); p != std::string::npos;
             p = normalized.find("\xE2\x80\x99")) {
            normalized.replace(p, 3, "'");
        }
        if (const auto* pos = words.find(normalized)) {
            t.token.coarse_pos = *pos;
            t.listed = true;
        } else if (std::all_of(w.begin(), w.end(), [](unsigned char c) {
                       return std::isdigit(c) != 0 || c == '.' || c == ',';
                   })) {
            t.token.coarse_pos = CoarsePos::det;
        } else if (ends_with(normalized, "n't")) {
            t.token.coarse_pos = CoarsePos::verb;
        } else if (ends_with(normalized, "'s") || ends_with(normalized, "s'")) {
            t.token.coarse_pos = CoarsePos::noun;
            t.possessive = true;
        } else if (w.size() > 4 && ends_with(w, "ly")) {
            t.token.coarse_pos = CoarsePos::other;
        } else if ((w.size() > 4 && ends_with(w, "ing")) || (w.size() > 3 && ends_with(w, "ed"))) {
            t.draft = Draft::ing_ed;
        } else if (w.size() > 5 &&
                   (ends_with(w, "ful") || ends_with(w, "ous") || ends_with(w, "ive") ||
                    ends_with(w, "able") || ends_with(w, "ible") || ends_with(w, "less") ||
                    ends_with(w, "ish") || ends_with(w, "ical"))) {
            t.draft = Draft::adj_suffix;
        } else {
            t.draft = Draft::unknown;
        }
        tags.push_back(std::move(t));
    }
    return tags;
}

void resolve_tags(std::vector<Tagged>& tags) {
    // Determiners with nothing nominal after them act as pronouns ("sent her to").
    for (std::size_t i = 0; i < tags.size(); ++i) {
        auto& t = tags[i];
        if (t.token.coarse_pos == CoarsePos::det && t.draft == Draft::resolved &&
            one_of(t.token.lowercase, pronoun_capable_determiners) && !nominal_ahead(tags, i) &&
            next_pos(tags, i) != CoarsePos::det) {
            t.token.coarse_pos = CoarsePos::pron;
        }
    }

    for (std::size_t i = 0; i < tags.size(); ++i) {
        auto& t = tags[i];
        const Tagged* prev = i > 0 ? &tags[i - 1] : nullptr;
        const bool boundary = prev == nullptr || t.token.after_punctuation;
        const auto prev_pos = boundary ? std::optional<CoarsePos>{} : prev->token.coarse_pos;
        const bool after_det = prev_pos == CoarsePos::det ||
                               (prev_pos == CoarsePos::noun && prev->possessive);
        const bool after_modifier = after_det || prev_pos == CoarsePos::adj;
        const auto next = next_pos(tags, i);

        if (t.draft == Draft::resolved) {
            // The slot after a determiner licenses a noun head ("his home", "a drink").
            const bool licensed_head =
                after_det && t.listed && !is_auxiliary(t) &&
                (t.token.coarse_pos == CoarsePos::other || t.token.coarse_pos == CoarsePos::verb) &&
                !nominal_ahead(tags, i) && t.token.lowercase != "and" && t.token.lowercase != "or";
            if (licensed_head) t.token.coarse_pos = CoarsePos::noun;
            // "was feeling", "is building": a progressive, not the listed noun.
            if (t.token.coarse_pos == CoarsePos::noun && !boundary && is_auxiliary(*prev) &&
                ends_with(t.token.lowercase, "ing")) {
                t.token.coarse_pos = CoarsePos::verb;
            }
            continue;
        }

        if (t.capitalized && i > 0) {
            t.token.coarse_pos = CoarsePos::noun;
        } else if (t.draft == Draft::ing_ed) {
            if (after_modifier) {
                t.token.coarse_pos = nominal_ahead(tags, i) ? CoarsePos::adj : CoarsePos::noun;
            } else {
                t.token.coarse_pos = CoarsePos::verb;
            }
        } else if (t.draft == Draft::adj_suffix) {
            t.token.coarse_pos =
                after_modifier && !nominal_ahead(tags, i) ? CoarsePos::noun : CoarsePos::adj;
        } else if (i == 0) {
            t.token.coarse_pos = CoarsePos::noun;
        } else if (!prev_pos) {
            t.token.coarse_pos = CoarsePos::noun;
        } else {
            const bool object_follows = next == CoarsePos::det || next == CoarsePos::pron;
            switch (*prev_pos) {
            case CoarsePos::det:
            case CoarsePos::adj:
                t.token.coarse_pos = CoarsePos::noun;
                break;
            case CoarsePos::pron:
                t.token.coarse_pos = is_subject_pronoun(tags, i - 1) ? CoarsePos::verb : CoarsePos::noun;
                break;
            case CoarsePos::noun:
                t.token.coarse_pos = !prev->possessive && (object_follows || next == CoarsePos::adj)
                                         ? CoarsePos::verb
                                         : CoarsePos::noun;
                break;
            case CoarsePos::adp:
                t.token.coarse_pos = prev->token.lowercase == "to" && object_follows
                                         ? CoarsePos::verb
                                         : CoarsePos::noun;
                break;
            case CoarsePos::verb:
                if (is_auxiliary(*prev)) {
                    t.token.coarse_pos = CoarsePos::adj;
                } else {
                    t.token.coarse_pos = CoarsePos::noun;
                }
                break;
            case CoarsePos::other:
                t.token.coarse_pos = object_follows || next == CoarsePos::adp ? CoarsePos::verb
                                                                              : CoarsePos::noun;
                break;
            }
        }
        t.draft = Draft::resolved;
    }
}

std::vector<Tagged> tag(std::string_view sentence, const WordClassList& words) {
    auto tags = draft_tags(sentence, words);
    resolve_tags(tags);
    return tags;
}

}  // namespace

std::string_view to_string(CoarsePos pos) noexcept {
    return pos_names[static_cast<std::size_t>(pos)];
}

KeywordSet::KeywordSet(std::initializer_list<std::string> phrases) {
    for (const auto& phrase : phrases) {
        insert(phrase);
    }
}

bool KeywordSet::insert(std::string_view phrase) {
    phrase = trim(phrase);
    if (phrase.empty() || contains(phrase)) {
        return false;
    }
    phrases_.emplace_back(phrase);
    return true;
}

void KeywordSet::merge(const KeywordSet& other) {
    for (const auto& phrase : other.phrases_) {
        insert(phrase);
    }
}

bool KeywordSet::contains(std::string_view phrase) const {
    phrase = trim(phrase);
    return std::any_of(phrases_.begin(), phrases_.end(),
                       [&](const std::string& p) { return iequals(p, phrase); });
}

KeywordSet KeywordSet::without_determiners() const {
    const auto& words = WordClassList::bundled();
    KeywordSet out;
    for (const auto& phrase : phrases_) {
        const auto space = phrase.find(' ');
        if (space != std::string::npos) {
            const auto* pos = words.find(to_lower(phrase.substr(0, space)));
            if (pos != nullptr && *pos == CoarsePos::det) {
                out.insert(phrase.substr(space + 1));
                continue;
            }
        }
        out.insert(phrase);
    }
    return out;
}

WordClassList WordClassList::parse(std::string_view text) {
    WordClassList list;
    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line, '\t');
        const auto pos = fields.size() == 2 ? parse_pos(trim(fields[1])) : std::nullopt;
        if (!pos || trim(fields[0]).empty()) {
            throw ParseError("word list line " + std::to_string(line_no) +
                                 ": expected word<TAB>POS",
                             line_no);
        }
        list.words_.try_emplace(to_lower(trim(fields[0])), *pos);
    }
    return list;
}

WordClassList WordClassList::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFound("cannot open word list " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

const WordClassList& WordClassList::bundled() {
    static const WordClassList list = parse(resources::closed_class_words());
    return list;
}

const CoarsePos* WordClassList::find(std::string_view lowercase) const {
    const auto it = words_.find(std::string(lowercase));
    return it == words_.end() ? nullptr : &it->second;
}

std::vector<Token> tokenize(std::string_view sentence, const WordClassList& words) {
    std::vector<Token> out;
    for (auto& t : tag(sentence, words)) {
        out.push_back(std::move(t.token));
    }
    return out;
}

KeywordSet extract_keywords(std::string_view sentence, const WordClassList& words) {
    const auto tags = tag(sentence, words);
    KeywordSet out;
    std::size_t i = 0;
    while (i < tags.size()) {
        const auto pos = tags[i].token.coarse_pos;
        if (pos == CoarsePos::pron) {
            if (is_subject_pronoun(tags, i)) {
                const auto& token = tags[i].token;
                const auto apostrophe = token.surface.find_first_of("'\xE2");
                out.insert(token.surface.substr(0, apostrophe));
            }
            ++i;
            continue;
        }
        if (pos != CoarsePos::det && pos != CoarsePos::adj && pos != CoarsePos::noun) {
            ++i;
            continue;
        }
        // Optional determiner, adjectives, then at least one noun; punctuation ends a chunk.
        std::size_t j = i;
        const auto joined = [&](std::size_t k) { return k == i || !tags[k].token.after_punctuation; };
        if (tags[j].token.coarse_pos == CoarsePos::det) ++j;
        while (j < tags.size() && joined(j) && tags[j].token.coarse_pos == CoarsePos::adj) ++j;
        const std::size_t noun_begin = j;
        while (j < tags.size() && joined(j) && tags[j].token.coarse_pos == CoarsePos::noun) {
            const bool possessive = tags[j].possessive;
            ++j;
            // "Mary's old dog": adjectives may follow a possessive inside the phrase.
            if (possessive) {
                while (j < tags.size() && joined(j) && tags[j].token.coarse_pos == CoarsePos::adj) ++j;
            }
        }
        while (j > noun_begin && tags[j - 1].token.coarse_pos == CoarsePos::adj) --j;
        if (j == noun_begin) {
            i = std::max(i + 1, noun_begin);
            continue;
        }
        const auto begin = tags[i].token.begin;
        const auto end = tags[j - 1].token.end;
        out.insert(sentence.substr(begin, end - begin));
        i = j;
    }
    return out;
}

std::string keywords_to_prompt_fragment(const KeywordSet& keywords) {
    return join(keywords.phrases(), ", ");
}

}  // namespace fabula
