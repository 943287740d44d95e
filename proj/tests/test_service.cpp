#include <gtest/gtest.h>

#include <thread>

#include "exs/service.hpp"
#include "support/fixtures.hpp"

using namespace exs;

namespace {

const Engine& engine() {
    static const Engine instance = exs::testing::sample_engine();
    return instance;
}

nlohmann::json body_of(const HttpResponse& r) { return nlohmann::json::parse(r.body); }

}  // namespace

TEST(Service, SearchStatusCodes) {
    Service service(engine());
    EXPECT_EQ(service.search("rail strikes", "bm25", "10").status, 200);
    EXPECT_EQ(service.search("", "bm25", "10").status, 400);
    EXPECT_EQ(service.search("rail", "bm25", "0").status, 400);
    EXPECT_EQ(service.search("rail", "bm25", "ten").status, 400);
    auto unknown = service.search("rail", "drmm2", "10");
    EXPECT_EQ(unknown.status, 400);
    auto msg = body_of(unknown)["error"]["message"].get<std::string>();
    EXPECT_NE(msg.find("bm25"), std::string::npos);
    EXPECT_NE(msg.find("embed"), std::string::npos);
    EXPECT_EQ(body_of(unknown)["error"]["code"], "invalid_argument");
}

TEST(Service, ExplainStatusCodes) {
    Service service(engine());
    auto ok = service.explain(R"({"q":"rail strikes","doc_id":"news-001","ranker":"bm25","converter":"topk",
                                  "k":10,"n_words":5,"n_samples":300,"seed":4})");
    ASSERT_EQ(ok.status, 200) << ok.body;
    EXPECT_FALSE(body_of(ok)["entries"].empty());
    EXPECT_EQ(service.explain(R"({"q":"rail strikes","doc_id":"nope","k":10})").status, 404);
    EXPECT_EQ(service.explain(R"({"q":"rail strikes","doc_id":"news-011","k":10})").status, 409);
    EXPECT_EQ(service.explain(R"({"q":"rail strikes","doc_id":"news-001","converter":"rank","k":1,
                                  "n_samples":100,"seed":1})").status, 422);
    EXPECT_EQ(service.explain(R"({"q":"rail strikes","doc_id":"news-001","converter":"bogus"})").status, 400);
    EXPECT_EQ(service.explain(R"({"q":"rail strikes","doc_id":"news-001","k":-3})").status, 400);
    EXPECT_EQ(service.explain(R"({"doc_id":"news-001"})").status, 400);
    EXPECT_EQ(service.explain("not json").status, 400);
}

TEST(Service, ExplainPairAndIntentStatusCodes) {
    Service service(engine());
    auto pair = service.explain_pair(R"({"q":"rail strikes","doc_a_id":"news-001","doc_b_id":"news-003",
                                         "k":10,"n_words":5,"n_samples":300,"seed":2})");
    ASSERT_EQ(pair.status, 200) << pair.body;
    for (const auto& e : body_of(pair)["entries"]) EXPECT_GT(e["weight"].get<double>(), 0.0);
    EXPECT_EQ(service.explain_pair(R"({"q":"rail strikes","doc_a_id":"news-003","doc_b_id":"news-001",
                                       "k":10,"n_samples":300,"seed":2})").status, 409);
    EXPECT_EQ(service.explain_pair(R"({"q":"rail strikes","doc_a_id":"news-001","doc_b_id":"zzz"})").status, 404);

    auto intent = service.intent(R"({"q":"rail strikes","k":5,"n_words":5,"n_samples":300,"seed":3})");
    ASSERT_EQ(intent.status, 200) << intent.body;
    EXPECT_GE(body_of(intent)["docs_aggregated"].get<int>(), 1);
    EXPECT_EQ(service.intent(R"({"q":"zebra","k":5})").status, 404);
}

TEST(Service, RepeatWithSeedIsByteIdentical) {
    Service service(engine());
    auto first = service.explain(R"({"q":"rail strikes","doc_id":"news-002","k":10,"n_samples":300})");
    ASSERT_EQ(first.status, 200);
    auto seed = body_of(first)["seed"].get<std::uint64_t>();
    auto again = service.explain(R"({"q":"rail strikes","doc_id":"news-002","k":10,"n_samples":300,"seed":)" +
                                 std::to_string(seed) + "}");
    EXPECT_EQ(first.body, again.body);
}

TEST(Service, ServesOverHttp) {
    Service service(engine());
    httplib::Server server;
    service.bind(server);
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto meta = client.Get("/meta");
    ASSERT_TRUE(meta);
    EXPECT_EQ(meta->status, 200);
    EXPECT_EQ(nlohmann::json::parse(meta->body)["corpus"]["doc_count"], 12);

    auto search = client.Get("/search?q=rail%20strikes&ranker=bm25&k=3");
    ASSERT_TRUE(search);
    EXPECT_EQ(search->status, 200);
    EXPECT_EQ(nlohmann::json::parse(search->body)["results"].size(), 3u);

    auto bad = client.Get("/search?q=rail&ranker=drmm2");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    const std::string request = R"({"q":"rail strikes","doc_id":"news-001","k":10,"n_samples":300,"seed":12})";
    auto http = client.Post("/explain", request, "application/json");
    ASSERT_TRUE(http);
    EXPECT_EQ(http->status, 200);
    EXPECT_EQ(http->body, service.explain(request).body);

    server.stop();
    worker.join();
}
