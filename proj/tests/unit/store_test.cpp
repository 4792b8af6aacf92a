#include "test_support.hpp"

#include "zest/store.hpp"
#include "zest/tokens.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <set>
#include <thread>

namespace zest {
namespace {

using namespace std::chrono_literals;

constexpr std::string_view kSecret = "store-secret";

std::string admin(Code method, std::string_view path = "*", std::string_view id = "admin")
{
    return serialize(mint_scoped(kSecret, id, "arb", "store1", method, path));
}

class StoreTest : public ::testing::Test {
protected:
    explicit StoreTest(std::optional<std::filesystem::path> data_dir = std::nullopt) : data_dir_(std::move(data_dir))
    {
        reset_store();
    }

    void reset_store()
    {
        store_.reset();
        store_ = std::make_unique<Store>(StoreConfig{testing::memory_node("store1", std::string(kSecret)), data_dir_},
                                         server_, clock_);
        store_->start();
    }

    Message post(std::string_view path, std::string_view payload, ContentFormat format = ContentFormat::Json)
    {
        return client_.send(Code::Post, path, admin(Code::Post), format, payload);
    }
    Message get(std::string_view path) { return client_.send(Code::Get, path, admin(Code::Get), ContentFormat::Json); }
    Message del(std::string_view path) { return client_.send(Code::Delete, path, admin(Code::Delete), ContentFormat::Json); }

    std::optional<std::filesystem::path> data_dir_;
    MemoryNetwork network_;
    MemoryTransport server_{network_, "store1"};
    MemoryTransport client_transport_{network_, "client"};
    ManualClock clock_{Timestamp{1521554211213}};
    std::unique_ptr<Store> store_;
    Client client_{testing::memory_client(client_transport_, testing::memory_node("store1", ""))};
};

TEST_F(StoreTest, KvLifecycle)
{
    EXPECT_EQ(post("/kv/foo/bar", R"({"room": "lounge", "value": 1})").code, Code::AckPost);
    const auto got = get("/kv/foo/bar");
    EXPECT_EQ(got.code, Code::AckPayload);
    EXPECT_EQ(got.payload, R"({"room": "lounge", "value": 1})");
    EXPECT_EQ(decode_uint_option(*got.find(OptionCode::ContentFormat)), 50u);

    const auto deleted = del("/kv/foo/bar");
    EXPECT_EQ(encode_message(deleted), Bytes("\x42\x00\x00\x00", 4));
    EXPECT_EQ(get("/kv/foo/bar").code, Code::NotAcceptable);
    EXPECT_EQ(del("/kv/foo/bar").code, Code::NotAcceptable);
}

TEST_F(StoreTest, KvKeepsFormatAndBytes)
{
    const Bytes blob("\x00\xff\x10 binary", 9);
    post("/kv/blob", blob, ContentFormat::Binary);
    const auto got = get("/kv/blob");
    EXPECT_EQ(got.payload, blob);
    EXPECT_EQ(decode_uint_option(*got.find(OptionCode::ContentFormat)), 42u);
}

TEST_F(StoreTest, KvRejections)
{
    EXPECT_EQ(get("/kv/absent").code, Code::NotAcceptable);
    EXPECT_EQ(post("/kv/", "1").code, Code::BadRequest);
    EXPECT_EQ(post("/kv/a//b", "1").code, Code::BadRequest);
    EXPECT_EQ(post("/kv/a/*", "1").code, Code::BadRequest);
    EXPECT_EQ(client_.send(Code::Get, "/kv/foo", admin(Code::Get, "/kv/other"), ContentFormat::Json).code,
              Code::Unauthorized);

    post("/kv/foo", "1");
    auto no_format = testing::well_formed_request(Code::Delete, "/kv/foo", admin(Code::Delete));
    no_format.options.pop_back();
    EXPECT_EQ(decode_message(store_->node().handle_request(encode_message(no_format))).code, Code::BadRequest);
    EXPECT_TRUE(store_->kv_get("/kv/foo").has_value());
}

TEST_F(StoreTest, CatalogueListsKeysAndSeries)
{
    auto doc = nlohmann::json::parse(get("/cat").payload);
    EXPECT_TRUE(doc["items"].empty());
    for (int i = 0; i < 100; ++i) post("/kv/key" + std::to_string(i), "1");
    post("/ts/temp", "1");
    doc = nlohmann::json::parse(get("/cat").payload);
    std::set<std::string> hrefs;
    for (const auto& item : doc["items"]) hrefs.insert(item["href"].get<std::string>());
    EXPECT_EQ(hrefs.size(), 101u);
    EXPECT_TRUE(hrefs.count("/kv/key42"));
    EXPECT_TRUE(hrefs.count("/ts/temp"));
}

TEST_F(StoreTest, TimeSeriesAppendAndLatest)
{
    const auto appended = post("/ts/temp", R"({"c": 21})");
    ASSERT_EQ(appended.code, Code::AckPayload);
    EXPECT_EQ(nlohmann::json::parse(appended.payload), (nlohmann::json{{"timestamp", 1521554211213}}));
    for (int k = 2; k <= 5; ++k) {
        clock_.advance(10ms);
        post("/ts/temp", "{\"c\":" + std::to_string(k) + "}");
        const auto latest = nlohmann::json::parse(get("/ts/temp/latest").payload);
        EXPECT_EQ(latest["data"]["c"], k);
    }
    EXPECT_EQ(nlohmann::json::parse(get("/ts/temp").payload)["timestamp"], 1521554211213 + 40);
    EXPECT_EQ(get("/ts/absent").code, Code::NotAcceptable);
}

TEST_F(StoreTest, TimeSeriesRejections)
{
    EXPECT_EQ(post("/ts/temp", "21", ContentFormat::Text).code, Code::UnsupportedContentFormat);
    EXPECT_EQ(post("/ts/temp", "{broken").code, Code::BadRequest);
    EXPECT_EQ(post("/ts/temp/latest", "1").code, Code::BadRequest);
    post("/ts/temp", "1");
    EXPECT_EQ(get("/ts/temp/range/5/1").code, Code::BadRequest);
    EXPECT_EQ(get("/ts/temp/range/x/1").code, Code::BadRequest);
    EXPECT_EQ(get("/ts/temp/range/1").code, Code::BadRequest);
    EXPECT_EQ(get("/ts/absent/range/1/2").code, Code::NotAcceptable);
    EXPECT_EQ(get("/ts/temp/range/0/1").payload, "[]");
}

TEST_F(StoreTest, TimestampsNeverGoBackwards)
{
    testing::Rng rng(3);
    Timestamp last{0};
    for (int i = 0; i < 100; ++i) {
        clock_.set(Timestamp{1000 + static_cast<long>(rng() % 500)});
        const auto response = post("/ts/s", std::to_string(i));
        const Timestamp t{nlohmann::json::parse(response.payload)["timestamp"].get<long>()};
        EXPECT_GE(t, last);
        last = t;
    }
}

TEST_F(StoreTest, RangeMatchesBruteForce)
{
    testing::Rng rng(99);
    std::vector<TsPoint> all;
    for (int i = 0; i < 1000; ++i) {
        clock_.advance(Timestamp{static_cast<long>(rng() % 4)});
        const auto value = std::to_string(i);
        const auto response = post("/ts/r", value);
        all.push_back({Timestamp{nlohmann::json::parse(response.payload)["timestamp"].get<long>()}, value});
    }
    const auto lo = all.front().timestamp.count() - 5, hi = all.back().timestamp.count() + 5;
    for (int w = 0; w < 100; ++w) {
        auto a = lo + static_cast<long>(rng() % (hi - lo)), b = lo + static_cast<long>(rng() % (hi - lo));
        if (a > b) std::swap(a, b);
        std::vector<TsPoint> expected;
        for (const auto& p : all) {
            if (p.timestamp.count() >= a && p.timestamp.count() <= b) expected.push_back(p);
        }
        EXPECT_EQ(store_->ts_range("/ts/r", Timestamp{a}, Timestamp{b}), expected);

        const auto wire = nlohmann::json::parse(get("/ts/r/range/" + std::to_string(a) + "/" + std::to_string(b)).payload);
        ASSERT_EQ(wire.size(), expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            EXPECT_EQ(wire[i]["timestamp"], expected[i].timestamp.count());
            EXPECT_EQ(wire[i]["data"].dump(), expected[i].value);
        }
    }
    EXPECT_EQ(store_->ts_range("/ts/r", Timestamp::min(), Timestamp::max()), all);
}

TEST_F(StoreTest, EveryRequestIsAudited)
{
    post("/kv/a", "1");
    get("/kv/a");
    get("/kv/missing");
    client_.send(Code::Post, "/kv/a", "forged", ContentFormat::Json, "2");
    store_->node().handle_request("garbage");
    const auto log = store_->audit_log();
    ASSERT_EQ(log.size(), 5u);
    EXPECT_EQ(log[0].token_id, "admin");
    EXPECT_EQ(log[0].method, "POST");
    EXPECT_EQ(log[0].outcome, Code::AckPost);
    EXPECT_EQ(log[2].outcome, Code::NotAcceptable);
    EXPECT_EQ(log[3].token_id, "-");
    EXPECT_EQ(log[3].outcome, Code::Unauthorized);
    EXPECT_EQ(log[4].outcome, Code::BadRequest);
}

TEST_F(StoreTest, DataObserversSeeTheExactMetaLine)
{
    auto watcher = client_.observe("/kv/foo/bar", ObserveMode::Data, 60, admin(Code::Get, "/kv/*"));
    post("/kv/foo/bar", R"({"room": "lounge", "value": 1})");
    EXPECT_EQ(watcher.next_line(1s), R"(1521554211213 /kv/foo/bar json {"room": "lounge", "value": 1})");
}

TEST_F(StoreTest, NotificationPathsAreEventsOnly)
{
    auto server = client_.observe("/notification/request/svc/*", ObserveMode::Data, 60, admin(Code::Get));
    EXPECT_EQ(post("/notification/request/svc/1", R"({"q":1})").code, Code::AckPost);
    EXPECT_EQ(server.next_line(1s), R"(1521554211213 /notification/request/svc/1 json {"q":1})");
    EXPECT_TRUE(store_->kv_keys().empty());
    EXPECT_TRUE(nlohmann::json::parse(get("/cat").payload)["items"].empty());
    EXPECT_EQ(get("/notification/request/svc/1").code, Code::NotAcceptable);
}

TEST_F(StoreTest, ConcurrentWritersOnOneKey)
{
    constexpr int kWriters = 4, kEach = 100;
    std::set<std::string> written;
    for (int t = 0; t < kWriters; ++t) {
        for (int i = 0; i < kEach; ++i) written.insert(std::to_string(t) + "-" + std::to_string(i));
    }
    std::atomic<bool> done{false};
    std::atomic<int> phantom{0};
    std::thread reader([&] {
        MemoryTransport t(network_, "reader");
        auto c = testing::memory_client(t, store_->node().config());
        while (!done) {
            const auto r = c.send(Code::Get, "/kv/shared", admin(Code::Get), ContentFormat::Json);
            if (r.code == Code::AckPayload && !written.count(r.payload)) ++phantom;
        }
    });
    std::vector<std::thread> writers;
    for (int t = 0; t < kWriters; ++t) {
        writers.emplace_back([&, t] {
            MemoryTransport mt(network_, "writer" + std::to_string(t));
            auto c = testing::memory_client(mt, store_->node().config());
            for (int i = 0; i < kEach; ++i) {
                c.post("/kv/shared", std::to_string(t) + "-" + std::to_string(i), ContentFormat::Text, admin(Code::Post));
            }
        });
    }
    for (auto& w : writers) w.join();
    done = true;
    reader.join();
    EXPECT_EQ(phantom, 0);
    const auto final_value = store_->kv_get("/kv/shared")->value;
    EXPECT_TRUE(final_value.ends_with("-" + std::to_string(kEach - 1))) << final_value;
}

class PersistentStoreTest : public StoreTest {
protected:
    PersistentStoreTest() : StoreTest(dir_.path()) {}
    static testing::TempDir dir_;
};

testing::TempDir PersistentStoreTest::dir_;

TEST_F(PersistentStoreTest, StateSurvivesRestart)
{
    post("/kv/keep", "1");
    post("/kv/drop", "2");
    del("/kv/drop");
    post("/ts/t", "{\"v\":1}");
    clock_.advance(5ms);
    post("/ts/t", "{\"v\":2}");
    const auto audited = store_->audit_log().size();

    reset_store();
    EXPECT_EQ(store_->kv_get("/kv/keep")->value, "1");
    EXPECT_FALSE(store_->kv_get("/kv/drop"));
    EXPECT_EQ(store_->ts_range("/ts/t", Timestamp::min(), Timestamp::max()).size(), 2u);
    EXPECT_EQ(store_->ts_latest("/ts/t")->value, "{\"v\":2}");
    const auto log = store_->audit_log();
    ASSERT_EQ(log.size(), audited);
    EXPECT_EQ(log.front().token_id, "admin");
    EXPECT_EQ(log.front().method, "POST");
    EXPECT_EQ(log.front().outcome, Code::AckPost);
}

}  // namespace
}  // namespace zest
