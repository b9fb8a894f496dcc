#pragma once

#include "fabula/session.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace fabula {

struct SessionInfo {
    std::string id;
    Phase phase = Phase::awaiting_first_sentence;
    std::size_t sentences = 0;
    std::string updated_at;
    bool busy = false;
};

/// Thread-safe collection of sessions. Mutations of one session are
/// serialized; reads never wait for a running backend call and see the last
/// committed state. With a directory, every committed state is written to
/// `<dir>/<id>/session.json` and existing sessions are loaded on construction.
class SessionStore {
public:
    explicit SessionStore(std::shared_ptr<const SessionEngine> engine,
                          std::optional<std::filesystem::path> directory = std::nullopt);

    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    /// Starts a session; a colliding derived id is re-derived with a salt.
    StorySession create(std::string_view first_sentence, std::uint64_t seed, StylePrefs style = {});

    /// Throws NotFound.
    [[nodiscard]] StorySession get(const std::string& id) const;
    [[nodiscard]] bool busy(const std::string& id) const;
    [[nodiscard]] std::vector<SessionInfo> list() const;

    /// Runs `step` on the current state under the session's mutation lock,
    /// then commits and persists the result.
    StorySession mutate(const std::string& id,
                        const std::function<StorySession(const StorySession&)>& step);

    /// PNG bytes of an image referenced by the session. Throws NotFound.
    [[nodiscard]] std::vector<std::uint8_t> image(const std::string& id,
                                                  const std::string& hash) const;

    [[nodiscard]] const SessionEngine& engine() const noexcept { return *engine_; }

private:
    struct Entry {
        std::mutex mutate;
        mutable std::shared_mutex read;
        StorySession snapshot;
        std::atomic<bool> busy{false};
    };

    std::shared_ptr<Entry> entry(const std::string& id) const;
    void persist(const StorySession& session) const;

    std::shared_ptr<const SessionEngine> engine_;
    std::optional<std::filesystem::path> directory_;
    mutable std::shared_mutex entries_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

}  // namespace fabula
