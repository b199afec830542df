#include <doctest.h>

#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include "nete/error.hpp"
#include "nete/http.hpp"
#include "nete/perturbation.hpp"
#include "nete/scoring.hpp"
#include "stub_server.hpp"

using namespace nete;
using namespace std::chrono_literals;

namespace {

HttpOptions fast(int attempts = 3) {
    HttpOptions o;
    o.timeout = 2000ms;
    o.max_attempts = attempts;
    o.backoff = 1ms;
    return o;
}

void json_reply(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

TEST_CASE("remote score drops null positions") {
    StubServer srv([](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.path == "/v1/score");
        const auto body = nlohmann::json::parse(req.body);
        CHECK(body.at("text") == "a b c");
        json_reply(res, {{"tokens", {"a", "b", "c"}},
                         {"logprobs", {nullptr, -1.5, -0.5}},
                         {"ranks", {nullptr, 3, 1}},
                         {"entropies", {nullptr, 2.0, 1.0}}});
    });
    RemoteScorer s(srv.url(), fast());
    const auto r = s.score("a b c");
    CHECK(r.token_count == 2);
    CHECK(r.mean_logprob == -1.0);
    CHECK(s.identity() == "remote:" + srv.url());
}

TEST_CASE("endpoint base path is kept") {
    StubServer srv([](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.path == "/api/v1/score");
        json_reply(res, {{"tokens", {"a"}}, {"logprobs", {-1.0}}, {"ranks", {1}}, {"entropies", {0.0}}});
    });
    RemoteScorer s(srv.url() + "/api/", fast());
    CHECK(s.score("a").token_count == 1);
}

TEST_CASE("mismatched lengths are a protocol error with an excerpt") {
    StubServer srv([](const httplib::Request&, httplib::Response& res) {
        json_reply(res, {{"tokens", {"a", "b"}}, {"logprobs", {-1.0}}, {"ranks", {1, 1}}, {"entropies", {0, 0}}});
    });
    RemoteScorer s(srv.url(), fast());
    try {
        s.score("a b");
        FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("logprobs") != std::string::npos);
    }
}

TEST_CASE("invalid JSON body is a protocol error") {
    StubServer srv([](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
    RemoteScorer s(srv.url(), fast());
    CHECK_THROWS_AS(s.score("a"), ProtocolError);
}

TEST_CASE("unreachable endpoint: transport error after the configured attempts") {
    const std::string url = "http://127.0.0.1:" + std::to_string(closed_port());
    RemoteScorer s(url, fast(3));
    try {
        s.score("a b");
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 3);
        CHECK(e.endpoint().find(url) == 0);
        CHECK(std::string(e.what()).find("3 attempt") != std::string::npos);
    }
}

TEST_CASE("non-200 is reported without retry, with status and excerpt") {
    StubServer srv([](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("bad request: text too long", "text/plain");
    });
    RemoteScorer s(srv.url(), fast(3));
    try {
        s.score("a");
        FAIL("expected an HTTP status error");
    } catch (const HttpStatusError& e) {
        CHECK(e.status() == 400);
        CHECK(std::string(e.what()).find("text too long") != std::string::npos);
    }
    CHECK(srv.hits() == 1);
}

TEST_CASE("503 is retried") {
    std::atomic<int> calls{0};
    StubServer srv([&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        json_reply(res, {{"tokens", {"a"}}, {"logprobs", {-1.0}}, {"ranks", {1}}, {"entropies", {0.0}}});
    });
    RemoteScorer s(srv.url(), fast(3));
    CHECK(s.score("a").token_count == 1);
    CHECK(srv.hits() == 3);

    calls = -100;
    RemoteScorer once(srv.url(), fast(2));
    CHECK_THROWS_AS(once.score("a"), HttpStatusError);
}

TEST_CASE("slow server is a timeout") {
    StubServer srv([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(600ms);
        json_reply(res, {{"tokens", {"a"}}, {"logprobs", {-1.0}}, {"ranks", {1}}, {"entropies", {0.0}}});
    });
    auto o = fast(1);
    o.timeout = 150ms;
    RemoteScorer s(srv.url(), o);
    CHECK_THROWS_AS(s.score("a"), TimeoutError);
}

TEST_CASE("max_in_flight caps concurrent requests") {
    std::atomic<int> now{0}, peak{0};
    StubServer srv([&](const httplib::Request&, httplib::Response& res) {
        const int n = ++now;
        int p = peak.load();
        while (n > p && !peak.compare_exchange_weak(p, n)) {
        }
        std::this_thread::sleep_for(30ms);
        --now;
        json_reply(res, {{"ok", true}});
    });
    auto o = fast(1);
    o.max_in_flight = 2;
    JsonHttpClient client(srv.url(), o);
    std::vector<std::thread> ts;
    for (int i = 0; i < 6; ++i) ts.emplace_back([&] { client.post("/x", nlohmann::json::object()); });
    for (auto& t : ts) t.join();
    CHECK(peak.load() <= 2);
    CHECK(srv.hits() == 6);
}

TEST_CASE("endpoint without a scheme is rejected") {
    CHECK_THROWS_AS(JsonHttpClient("localhost:8080", fast()), InvalidArgument);
}

TEST_CASE("remote fill splices the chosen candidate") {
    StubServer srv([](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.path == "/v1/fill");
        const auto body = nlohmann::json::parse(req.body);
        CHECK(body.at("masked_text") == "a <mask_0> d");
        CHECK(body.at("num_spans") == 1);
        CHECK(body.at("candidates") == 1);
        json_reply(res, {{"fills", {{"b c"}}}});
    });
    RemoteFiller f(srv.url(), fast(), 1);
    Rng rng(0);
    CHECK(f.fill("a <mask_0> d", rng) == "a b c d");
    CHECK_THROWS_AS(f.fill("a b d", rng), InvalidArgument);
}

TEST_CASE("remote fill with too few fills is a protocol error") {
    StubServer srv([](const httplib::Request&, httplib::Response& res) { json_reply(res, {{"fills", {{"x"}}}}); });
    RemoteFiller f(srv.url(), fast(), 1);
    Rng rng(0);
    CHECK_THROWS_AS(f.fill("<mask_0> b <mask_1>", rng), ProtocolError);
}

TEST_CASE("remote fill picks among candidates with the rng") {
    StubServer srv([](const httplib::Request& req, httplib::Response& res) {
        CHECK(nlohmann::json::parse(req.body).at("candidates") == 3);
        json_reply(res, {{"fills", {{"x"}, {"y"}, {"z"}}}});
    });
    RemoteFiller f(srv.url(), fast(), 3);
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 40; ++s) {
        Rng a(s), b(s);
        const auto out = f.fill("<mask_0> end", a);
        CHECK(out == f.fill("<mask_0> end", b));
        seen.insert(out);
    }
    CHECK(seen.size() == 3);
}
