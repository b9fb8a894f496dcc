#include "fabula/session_store.hpp"

#include "fabula/error.hpp"

#include <spdlog/spdlog.h>

namespace fabula {

SessionStore::SessionStore(std::shared_ptr<const SessionEngine> engine,
                           std::optional<std::filesystem::path> directory)
    : engine_(std::move(engine)), directory_(std::move(directory)) {
    if (!engine_) {
        throw InvalidArgument("session store needs an engine");
    }
    if (!directory_) return;
    std::filesystem::create_directories(*directory_);
    for (const auto& item : std::filesystem::directory_iterator(*directory_)) {
        const auto file = item.path() / "session.json";
        if (!item.is_directory() || !std::filesystem::exists(file)) continue;
        try {
            auto session = load_session(file);
            auto e = std::make_shared<Entry>();
            e->snapshot = std::move(session);
            entries_.emplace(e->snapshot.id, std::move(e));
        } catch (const Error& err) {
            spdlog::warn("skipping unreadable session {}: {}", file.string(), err.what());
        }
    }
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) const {
    const std::shared_lock lock(entries_mutex_);
    const auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw NotFound("no session with id " + id);
    }
    return it->second;
}

void SessionStore::persist(const StorySession& session) const {
    if (directory_) save_session(session, *directory_ / session.id / "session.json");
}

StorySession SessionStore::create(std::string_view first_sentence, std::uint64_t seed,
                                  StylePrefs style) {
    auto session = engine_->start_session(first_sentence, seed, style);
    const std::unique_lock lock(entries_mutex_);
    for (std::uint64_t salt = 1; entries_.count(session.id) != 0; ++salt) {
        session.id = derive_session_id(seed, session.story.front(), salt);
    }
    persist(session);
    auto e = std::make_shared<Entry>();
    e->snapshot = session;
    entries_.emplace(session.id, std::move(e));
    return session;
}

StorySession SessionStore::get(const std::string& id) const {
    const auto e = entry(id);
    const std::shared_lock lock(e->read);
    return e->snapshot;
}

bool SessionStore::busy(const std::string& id) const {
    return entry(id)->busy.load();
}

std::vector<SessionInfo> SessionStore::list() const {
    std::vector<std::shared_ptr<Entry>> all;
    {
        const std::shared_lock lock(entries_mutex_);
        for (const auto& [id, e] : entries_) all.push_back(e);
    }
    std::vector<SessionInfo> out;
    for (const auto& e : all) {
        const std::shared_lock lock(e->read);
        out.push_back({e->snapshot.id, e->snapshot.phase, e->snapshot.story.size(),
                       e->snapshot.updated_at, e->busy.load()});
    }
    return out;
}

StorySession SessionStore::mutate(const std::string& id,
                                  const std::function<StorySession(const StorySession&)>& step) {
    const auto e = entry(id);
    const std::lock_guard mutation(e->mutate);
    StorySession current;
    {
        const std::shared_lock lock(e->read);
        current = e->snapshot;
    }
    e->busy = true;
    struct ClearBusy {
        std::atomic<bool>& flag;
        ~ClearBusy() { flag = false; }
    } clear{e->busy};

    auto next = step(current);
    persist(next);
    const std::unique_lock lock(e->read);
    e->snapshot = next;
    return next;
}

std::vector<std::uint8_t> SessionStore::image(const std::string& id,
                                              const std::string& hash) const {
    const auto session = get(id);
    for (const auto& turn : session.turns) {
        for (const auto& image : turn.image_batch) {
            if (image.id == hash) return image.png;
        }
    }
    throw NotFound("session " + id + " has no image " + hash);
}

}  // namespace fabula
