#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "conflictforge/gateway.hpp"

using namespace conflictforge;
namespace fs = std::filesystem;

namespace {

EndpointConfig test_endpoint() {
    EndpointConfig ep;
    ep.name = "test";
    ep.base_url = "scripted://test";
    ep.model = "test-model";
    return ep;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Fails a fixed number of times before answering; used for retry tests.
class FlakyBackend : public ChatBackend {
public:
    FlakyBackend(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
    std::string complete_text(const EndpointConfig&, const CompletionRequest&) override {
        ++calls_;
        if (calls_ <= failures_) throw TransportError("simulated outage");
        return reply_;
    }
    BackendKind kind() const override { return BackendKind::Scripted; }
    int calls() const { return calls_; }

private:
    int failures_;
    std::string reply_;
    int calls_ = 0;
};

}  // namespace

TEST_CASE("cache key is stable and sensitive to every request dimension") {
    auto req = CompletionRequest::user("hello");
    DecodeParams d;
    auto base = cache_key("m1", req, d);
    CHECK(base == cache_key("m1", req, d));
    CHECK(base.size() == 64);

    CHECK(base != cache_key("m2", req, d));
    CHECK(base != cache_key("m1", CompletionRequest::user("hello!"), d));
    DecodeParams warm = d;
    warm.temperature = 0.7;
    CHECK(base != cache_key("m1", req, warm));
    DecodeParams longer = d;
    longer.max_tokens = 1024;
    CHECK(base != cache_key("m1", req, longer));

    // role matters too
    CompletionRequest sys;
    sys.messages = {{"system", "hello"}, {"user", "hello"}};
    CHECK(base != cache_key("m1", sys, d));
}

TEST_CASE("known sha-256 vectors") {
    CHECK(detail::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(detail::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("gateway caches the first response and replays it byte-identically") {
    TempDir dir("cf_gateway_cache");
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("ping", "pong");
    Gateway gw(dir.path, backend, test_endpoint());

    auto first = gw.complete(CompletionRequest::user("ping"));
    CHECK(first.response_text == "pong");
    CHECK(first.backend == BackendKind::Scripted);
    CHECK(gw.live_calls() == 1);

    auto second = gw.complete(CompletionRequest::user("ping"));
    CHECK(second.response_text == "pong");
    CHECK(second.backend == BackendKind::CacheHit);
    CHECK(second.digest == first.digest);
    CHECK(gw.live_calls() == 1);

    // warm cache serves a fresh gateway with an empty backend: zero live calls
    Gateway replay(dir.path, std::make_shared<ScriptedBackend>(), test_endpoint());
    auto third = replay.complete(CompletionRequest::user("ping"));
    CHECK(third.response_text == "pong");
    CHECK(third.backend == BackendKind::CacheHit);
    CHECK(replay.live_calls() == 0);
}

TEST_CASE("cache layout shards by digest prefix") {
    TempDir dir("cf_gateway_layout");
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("ping", "pong");
    Gateway gw(dir.path, backend, test_endpoint());
    auto rec = gw.complete(CompletionRequest::user("ping"));
    CHECK(fs::exists(dir.path / rec.digest.substr(0, 2) / (rec.digest + ".json")));
}

TEST_CASE("scripted backend is exhaustive") {
    ScriptedBackend b;
    b.script("known", "answer");
    CHECK(b.complete_text(test_endpoint(), CompletionRequest::user("known")) == "answer");
    CHECK_THROWS_AS(b.complete_text(test_endpoint(), CompletionRequest::user("unknown")),
                    UnscriptedPrompt);
}

TEST_CASE("scripted backend save/load round-trip") {
    TempDir dir("cf_script_io");
    ScriptedBackend b;
    b.script("p1", "r1");
    b.script("p2", "line1\nline2");
    auto path = (dir.path / "script.json").string();
    b.save(path);
    auto loaded = ScriptedBackend::load(path);
    CHECK(loaded->complete_text(test_endpoint(), CompletionRequest::user("p1")) == "r1");
    CHECK(loaded->complete_text(test_endpoint(), CompletionRequest::user("p2")) == "line1\nline2");
}

TEST_CASE("gateway retries transient failures with bounded attempts") {
    TempDir dir("cf_retry");
    auto flaky = std::make_shared<FlakyBackend>(2, "ok");
    Gateway gw(dir.path, flaky, test_endpoint());
    auto rec = gw.complete(CompletionRequest::user("q"));
    CHECK(rec.response_text == "ok");
    CHECK(flaky->calls() == 3);

    auto dead = std::make_shared<FlakyBackend>(100, "never");
    Gateway gw2(dir.path, dead, test_endpoint());
    CHECK_THROWS_AS(gw2.complete(CompletionRequest::user("other")), TransportError);
    CHECK(dead->calls() == 3);
}

TEST_CASE("empty responses are rejected, not cached") {
    TempDir dir("cf_empty");
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("q", "");
    Gateway gw(dir.path, backend, test_endpoint());
    CHECK_THROWS_AS(gw.complete(CompletionRequest::user("q")), EmptyResponse);
    // a later, corrected script must be able to fill the slot
    backend->script("q", "fixed");
    CHECK(gw.complete(CompletionRequest::user("q")).response_text == "fixed");
}

TEST_CASE("request validation") {
    CompletionRequest empty;
    CHECK_THROWS_AS(empty.validate(), ConfigError);
    CompletionRequest wrong_tail;
    wrong_tail.messages = {{"user", "hi"}, {"assistant", "hello"}};
    CHECK_THROWS_AS(wrong_tail.validate(), ConfigError);
}

TEST_CASE("rate limiter blocks the (n+1)th call inside a minute window") {
    using namespace std::chrono;
    auto now = steady_clock::time_point{};
    std::vector<milliseconds> sleeps;
    detail::RateLimiter limiter(
        2, [&] { return now; },
        [&](milliseconds d) {
            sleeps.push_back(d);
            now += d;  // sleeping advances the fake clock
        });

    limiter.admit();
    limiter.admit();
    CHECK(sleeps.empty());
    limiter.admit();  // must wait for the first stamp to expire
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0] > milliseconds(0));
    CHECK(sleeps[0] <= minutes(1) + milliseconds(1));

    // window has rolled: two more admits, only then a new wait
    now += minutes(1);
    limiter.admit();
    limiter.admit();
    CHECK(sleeps.size() == 1);
}

TEST_CASE("endpoint config validation") {
    auto ep = test_endpoint();
    ep.decode.max_tokens = 0;
    CHECK_THROWS_AS(ep.validate(), ConfigError);
    ep = test_endpoint();
    ep.requests_per_minute = 0;
    CHECK_THROWS_AS(ep.validate(), ConfigError);
    ep = test_endpoint();
    ep.decode.temperature = -1;
    CHECK_THROWS_AS(ep.validate(), ConfigError);
}
