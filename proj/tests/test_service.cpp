#include "fabula/error.hpp"
#include "fabula/mock_backends.hpp"
#include "fabula/service.hpp"
#include "http_server.hpp"
#include "session_fixtures.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <cstdlib>
#include <future>
#include <thread>

namespace fabula {
namespace {

using nlohmann::json;

ServiceConfig mock_config() {
    ServiceConfig c;
    c.mock = true;
    return c;
}

struct Harness {
    explicit Harness(ServiceConfig config = mock_config(),
                     BackendFactory backends = mock_backend_factory())
        : service(std::move(config), std::move(backends), testing::stepping_clock()),
          server([this](httplib::Server& s) { service.mount(s); }),
          client("127.0.0.1", server.port()) {}

    json post(const std::string& path, const json& body, int expected,
              const httplib::Headers& headers = {}) {
        const auto res = client.Post(path, headers, body.dump(), "application/json");
        EXPECT_TRUE(res) << path;
        if (!res) return {};
        EXPECT_EQ(res->status, expected) << path << ": " << res->body;
        return json::parse(res->body);
    }

    json get(const std::string& path, int expected) {
        const auto res = client.Get(path);
        EXPECT_TRUE(res) << path;
        if (!res) return {};
        EXPECT_EQ(res->status, expected) << path << ": " << res->body;
        return json::parse(res->body);
    }

    Service service;
    testing::ServerThread server;
    httplib::Client client;
};

/// Blocks text generation until released.
class GatedText final : public TextBackend {
public:
    explicit GatedText(std::shared_future<void> gate) : gate_(std::move(gate)) {}
    std::string generate_text(const std::string&, const GenerationConfig&) override {
        entered.set_value();
        gate_.wait();
        return "The gate finally opened.";
    }
    std::promise<void> entered;

private:
    std::shared_future<void> gate_;
};

json strip_view(json view) {
    view.erase("status");
    for (auto& turn : view["turns"]) {
        for (auto& image : turn["image_batch"]) image.erase("url");
    }
    return view;
}

TEST(Service, Healthz) {
    Harness h;
    EXPECT_EQ(h.get("/healthz", 200), json({{"status", "ok"}}));
}

TEST(Service, ErrorMapping) {
    Harness h;
    auto e = h.post("/sessions", {{"first_sentence", "   "}}, 400);
    EXPECT_EQ(e["error"]["code"], "invalid_argument");
    EXPECT_TRUE(e["error"]["message"].is_string());

    e = h.get("/sessions/nope", 404);
    EXPECT_EQ(e["error"]["code"], "not_found");

    const auto s = h.post("/sessions", {{"first_sentence", "Tom found a dog."}}, 201);
    const auto id = s["id"].get<std::string>();
    EXPECT_EQ(s["phase"], "SuggestionsReady");
    EXPECT_EQ(s["status"], "idle");

    e = h.post("/sessions/" + id + "/images", json::object(), 409);
    EXPECT_EQ(e["error"]["code"], "invalid_state");
    e = h.post("/sessions/" + id + "/select", {{"index", 0}}, 409);
    EXPECT_EQ(e["error"]["code"], "invalid_state");
    e = h.post("/sessions/" + id + "/select", {{"index", -1}}, 400);
    EXPECT_EQ(e["error"]["code"], "invalid_argument");

    const auto res = h.client.Post("/sessions", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"]["code"], "invalid_argument");
}

TEST(Service, BackendFailureIs502) {
    Backends backends = make_mock_backends(1);
    backends.text.reset();
    Harness h(mock_config(), fixed_backends(backends));
    const auto s = h.post("/sessions", {{"first_sentence", "Tom found a dog."}}, 201);
    const auto e = h.post("/sessions/" + s["id"].get<std::string>() + "/generate", json::object(), 502);
    EXPECT_EQ(e["error"]["code"], "backend_unavailable");
    EXPECT_EQ(h.get("/sessions/" + s["id"].get<std::string>(), 200)["phase"], "SuggestionsReady");
}

TEST(Service, PublicErrorCodes) {
    EXPECT_EQ(http_status(ErrorCode::invalid_argument), 400);
    EXPECT_EQ(http_status(ErrorCode::not_found), 404);
    EXPECT_EQ(http_status(ErrorCode::invalid_state), 409);
    EXPECT_EQ(http_status(ErrorCode::conflict), 409);
    EXPECT_EQ(http_status(ErrorCode::unsupported_version), 422);
    EXPECT_EQ(http_status(ErrorCode::backend_error), 502);
    EXPECT_EQ(error_body(Error(ErrorCode::empty_generation, "x"))["error"]["code"], "backend_error");
    EXPECT_EQ(error_body(ParseError("bad", 3))["error"]["details"]["line"], 3);
    const auto body = error_body(BackendError("upstream", 503));
    EXPECT_EQ(body["error"]["details"]["backend_status"], 503);
}

TEST(Service, IdempotentPostReplays) {
    Harness h;
    const httplib::Headers key{{"Idempotency-Key", "abc"}};
    const auto first = h.post("/sessions", {{"first_sentence", "Tom found a dog."}}, 201, key);
    const auto res = h.client.Post("/sessions", key, json({{"first_sentence", "Other."}}).dump(),
                                   "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    EXPECT_EQ(res->get_header_value("Idempotent-Replay"), "true");
    EXPECT_EQ(json::parse(res->body), first);
    EXPECT_EQ(h.get("/sessions", 200)["sessions"].size(), 1U);

    // Generating twice under one key advances the story once.
    const auto id = first["id"].get<std::string>();
    const httplib::Headers gen{{"Idempotency-Key", "g1"}};
    const auto a = h.post("/sessions/" + id + "/generate", json::object(), 200, gen);
    const auto b = h.post("/sessions/" + id + "/generate", json::object(), 200, gen);
    EXPECT_EQ(a, b);
    EXPECT_EQ(h.get("/sessions/" + id, 200)["story"].size(), 2U);
}

TEST(Service, ImagesServedAsPng) {
    Harness h;
    const auto s = h.post("/sessions", {{"first_sentence", "Tom found a dog."}}, 201);
    const auto id = s["id"].get<std::string>();
    h.post("/sessions/" + id + "/generate", json::object(), 200);
    const auto v = h.post("/sessions/" + id + "/images", {{"artist", "Claude Monet"}}, 200);
    EXPECT_EQ(v["phase"], "ImagesReady");
    const auto& batch = v["turns"].back()["image_batch"];
    ASSERT_FALSE(batch.empty());
    const auto url = batch[0]["url"].get<std::string>();
    EXPECT_EQ(url, "/sessions/" + id + "/images/" + batch[0]["hash"].get<std::string>());
    const auto res = h.client.Get(url);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(res->body.substr(1, 3), "PNG");

    const auto missing = h.client.Get("/sessions/" + id + "/images/" + std::string(64, '0'));
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    const auto selected = h.post("/sessions/" + id + "/select", {{"index", 0}}, 200);
    EXPECT_EQ(selected["phase"], "SuggestionsReady");
}

TEST(Service, EvalRun) {
    Harness h;
    const json body = {{"corpus",
                        {{{"context", {"Mary had been feeling depressed lately."}},
                          {"reference", "She decided to go see a psychiatrist."}}}}};
    const auto r = h.post("/eval/run", body, 200);
    EXPECT_EQ(r["items"], 1);
    EXPECT_EQ(r["report_a"]["bleu_avg"]["mean"], 1.0);
    EXPECT_TRUE(r["improvement"].contains("meteor"));
    h.post("/eval/run", json::object(), 400);
    h.post("/eval/run", {{"corpus_jsonl", "{\"context\":[]}"}}, 400);
}

TEST(Service, MaryWalkthroughMatchesLibrary) {
    Harness h;
    const SessionEngine engine(mock_backend_factory(), {}, testing::stepping_clock());
    const auto expected = session_to_json(replay(engine, testing::mary_actions()));

    std::string id;
    json view;
    for (const auto& action : testing::mary_actions()) {
        auto body = action_to_json(action);
        const auto op = body["op"].get<std::string>();
        body.erase("op");
        if (op == "start") {
            view = h.post("/sessions", body, 201);
            id = view["id"].get<std::string>();
        } else {
            view = h.post("/sessions/" + id + "/" + op, body, 200);
        }
    }
    EXPECT_EQ(strip_view(view), expected);
    EXPECT_EQ(strip_view(h.get("/sessions/" + id, 200)), expected);
}

TEST(Service, ReadsDoNotWaitForBackends) {
    std::promise<void> release;
    auto gate = std::make_shared<GatedText>(release.get_future().share());
    auto entered = gate->entered.get_future();
    Backends backends = make_mock_backends(3);
    backends.text = gate;
    Harness h(mock_config(), fixed_backends(backends));
    const auto s = h.post("/sessions", {{"first_sentence", "Tom found a dog."}}, 201);
    const auto id = s["id"].get<std::string>();

    auto pending = std::async(std::launch::async, [&] {
        httplib::Client c("127.0.0.1", h.server.port());
        return c.Post("/sessions/" + id + "/generate", "{}", "application/json");
    });
    entered.wait();
    const auto during = h.get("/sessions/" + id, 200);
    EXPECT_EQ(during["status"], "busy");
    EXPECT_EQ(during["phase"], "SuggestionsReady");
    release.set_value();
    const auto res = pending.get();
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto after = h.get("/sessions/" + id, 200);
    EXPECT_EQ(after["status"], "idle");
    EXPECT_EQ(after["story"].back(), "The gate finally opened.");
}

TEST(Store, ConcurrentMutationsSerialize) {
    auto engine = std::make_shared<SessionEngine>(mock_backend_factory());
    SessionStore store(engine);
    const auto s = store.create("Tom found a dog.", 5);
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    std::atomic<int> rejected{0};
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            try {
                store.mutate(s.id, [&](const StorySession& cur) {
                    return engine->generate_next_sentence(cur);
                });
                ++ok;
            } catch (const InvalidState&) {
                ++rejected;
            }
        });
    }
    for (auto& t : threads) t.join();
    // With illustration on, a second generate must wait for images.
    EXPECT_EQ(ok, 1);
    EXPECT_EQ(rejected, 7);
    EXPECT_EQ(store.get(s.id).story.size(), 2U);
}

TEST(Store, PersistsAndReloads) {
    testing::TempDir dir;
    auto config = mock_config();
    config.sessions_dir = dir.path();
    std::string id;
    json before;
    {
        Harness h(config);
        const auto s = h.post("/sessions", {{"first_sentence", "Tom found a dog."}}, 201);
        id = s["id"].get<std::string>();
        h.post("/sessions/" + id + "/generate", json::object(), 200);
        before = h.post("/sessions/" + id + "/images", json::object(), 200);
    }
    EXPECT_TRUE(std::filesystem::exists(dir.path() / id / "session.json"));
    std::filesystem::create_directories(dir.path() / "junk");
    std::ofstream(dir.path() / "junk" / "session.json") << "{";

    Harness h(config);
    EXPECT_EQ(h.get("/sessions/" + id, 200), before);
    EXPECT_EQ(h.get("/sessions", 200)["sessions"].size(), 1U);
    const auto url = before["turns"].back()["image_batch"][0]["url"].get<std::string>();
    const auto res = h.client.Get(url);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
}

TEST(Config, FileThenEnvironment) {
    ServiceConfig c;
    apply_config_text(c, "# comment\nport = 9000\nhost=0.0.0.0\nmock = true\nseed = 7\n"
                         "backend_timeout_ms = 500  # trailing\n");
    EXPECT_EQ(c.port, 9000);
    EXPECT_EQ(c.host, "0.0.0.0");
    EXPECT_TRUE(c.mock);
    EXPECT_EQ(c.seed, 7U);
    EXPECT_EQ(c.backend_timeout, std::chrono::milliseconds(500));

    ::setenv("FABULA_PORT", "9100", 1);
    ::setenv("FABULA_TEXT_URL", "http://127.0.0.1:5000", 1);
    apply_environment(c);
    ::unsetenv("FABULA_PORT");
    ::unsetenv("FABULA_TEXT_URL");
    EXPECT_EQ(c.port, 9100);
    EXPECT_EQ(c.text_url, "http://127.0.0.1:5000");
    EXPECT_EQ(c.host, "0.0.0.0");

    ::setenv("FABULA_PORT", "many", 1);
    EXPECT_THROW(apply_environment(c), InvalidArgument);
    ::unsetenv("FABULA_PORT");
}

TEST(Config, Errors) {
    ServiceConfig c;
    try {
        apply_config_text(c, "port = 1\ncolour = blue\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2U);
    }
    EXPECT_THROW(apply_config_text(c, "port = 70000\n"), ParseError);
    EXPECT_THROW(apply_config_text(c, "just words\n"), ParseError);
    EXPECT_THROW(apply_config_file(c, "/nonexistent/fabula.conf"), NotFound);
    ServiceConfig bad;
    bad.backend_retries = -1;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    EXPECT_NO_THROW(mock_config().validate());
}

}  // namespace
}  // namespace fabula
