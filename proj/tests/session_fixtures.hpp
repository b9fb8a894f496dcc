#pragma once

#include "fabula/mock_backends.hpp"
#include "fabula/session.hpp"
#include "fabula/text.hpp"
#include "test_support.hpp"

#include <atomic>
#include <chrono>
#include <memory>

namespace fabula::testing {

/// Starts at 2024-01-01T00:00:00Z and advances one second per reading.
inline Clock stepping_clock() {
    auto ticks = std::make_shared<std::atomic<long>>(0);
    return [ticks] {
        return std::chrono::system_clock::time_point(std::chrono::seconds(1704067200 + (*ticks)++));
    };
}

inline std::vector<SessionAction> mary_actions() {
    std::vector<SessionAction> actions;
    for (const auto& line : split(read_fixture("mary_actions.jsonl"), '\n')) {
        if (!trim(line).empty()) actions.push_back(action_from_json(nlohmann::json::parse(line)));
    }
    return actions;
}

inline const std::vector<std::string>& mary_prompted_sentences() {
    static const std::vector<std::string> sentences = mary_script(MockTextStyle::prompted).sentences;
    return sentences;
}

}  // namespace fabula::testing
