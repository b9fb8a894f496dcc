#include "fabula/prompt.hpp"

#include "fabula/error.hpp"
#include "fabula/text.hpp"

#include <array>

namespace fabula {
namespace {

constexpr std::array<std::string_view, 3> section_names = {"KEYWORDS", "CONTEXT", "EMOTION"};

std::string section(std::string_view name, std::string_view body) {
    std::string line(prompt_sentinel);
    line += name;
    line += ": [";
    line += body;
    line += ']';
    return line;
}

// Body of `<extra_id_0>NAME: [body]`, or ParseError on line `line_no`.
std::string_view section_body(std::string_view line, std::string_view name, std::size_t line_no) {
    const std::string prefix = std::string(prompt_sentinel) + std::string(name) + ": [";
    if (line.substr(0, prefix.size()) != prefix) {
        throw ParseError("line " + std::to_string(line_no) + ": expected '" + prefix + "...]'",
                         line_no);
    }
    if (line.size() < prefix.size() + 1 || line.back() != ']') {
        throw ParseError("line " + std::to_string(line_no) + ": missing closing ']'", line_no);
    }
    return line.substr(prefix.size(), line.size() - prefix.size() - 1);
}

bool sentence_final(char ch) {
    return ch == '.' || ch == '!' || ch == '?';
}

std::vector<std::string> split_sentences(std::string_view body) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < body.size(); ++i) {
        if (sentence_final(body[i]) && body[i + 1] == ' ') {
            out.emplace_back(body.substr(start, i + 1 - start));
            start = i + 2;
        }
    }
    if (start < body.size()) {
        out.emplace_back(body.substr(start));
    }
    return out;
}

}  // namespace

void PromptSpec::validate() const {
    if (context.size() > max_context) {
        throw InvalidArgument("prompt context holds at most 4 sentences");
    }
    for (const auto& sentence : context) {
        if (trim(sentence).empty()) {
            throw InvalidArgument("prompt context sentences must be non-empty");
        }
    }
}

void GenerationConfig::validate() const {
    if (max_source_length <= 0 || max_output_length <= 0 || top_k < 1 ||
        !(repetition_penalty > 0.0) || !(length_penalty > 0.0)) {
        throw InvalidArgument("generation config fields must be strictly positive");
    }
}

std::string build_prompt(const PromptSpec& spec) {
    spec.validate();
    std::string out(prompt_header);
    out += '\n';
    out += section(section_names[0], keywords_to_prompt_fragment(spec.keywords));
    out += '\n';
    out += section(section_names[1], join(spec.context, " "));
    out += '\n';
    out += section(section_names[2], join(spec.emotions.names(), ", "));
    return out;
}

PromptSpec parse_prompt(std::string_view prompt) {
    const auto lines = split(prompt, '\n');
    if (lines.empty() || lines[0] != prompt_header) {
        throw ParseError("line 1: expected header '" + std::string(prompt_header) + "'", 1);
    }
    for (std::size_t i = 0; i < section_names.size(); ++i) {
        if (lines.size() < i + 2) {
            throw ParseError("line " + std::to_string(i + 2) + ": missing " +
                                 std::string(section_names[i]) + " section",
                             i + 2);
        }
    }
    if (lines.size() > 4) {
        throw ParseError("line 5: unexpected text after EMOTION section", 5);
    }

    PromptSpec spec;
    const auto keywords = section_body(lines[1], section_names[0], 2);
    for (std::size_t start = 0; start < keywords.size();) {
        auto end = keywords.find(", ", start);
        if (end == std::string_view::npos) end = keywords.size();
        spec.keywords.insert(keywords.substr(start, end - start));
        start = end + 2;
    }

    const auto context = section_body(lines[2], section_names[1], 3);
    spec.context = split_sentences(context);
    if (spec.context.size() > PromptSpec::max_context) {
        throw ParseError("line 3: more than 4 context sentences", 3);
    }

    const auto emotions = section_body(lines[3], section_names[2], 4);
    if (!emotions.empty()) {
        for (const auto& name : split(emotions, ',')) {
            const auto label = parse_emotion(trim(name));
            if (!label) {
                throw ParseError("line 4: unknown emotion '" + std::string(trim(name)) + "'", 4);
            }
            spec.emotions.insert(*label);
        }
    }
    return spec;
}

}  // namespace fabula
