#include "test_support.hpp"

#include "zest/catalogue.hpp"
#include "zest/meta_record.hpp"
#include "zest/node.hpp"
#include "zest/observation.hpp"
#include "zest/tokens.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace zest {
namespace {

using namespace std::chrono_literals;
using testing::memory_node;
using testing::well_formed_request;

constexpr std::string_view kSecret = "node-secret";

std::string token_for(Code method, std::string_view path, std::string_view target = "node1")
{
    return serialize(mint_scoped(kSecret, "tester", "arb", target, method, path));
}

class NodeTest : public ::testing::Test {
protected:
    NodeTest()
    {
        node_.route(Code::Post, "/kv/*", [this](const Request& r) {
            last_payload_ = r.payload;
            return Response::ack_post();
        });
        node_.route(Code::Get, "/kv/*", [](const Request& r) { return Response::with_payload(r.format, "value"); });
        node_.route(Code::Delete, "/kv/*", [](const Request&) { return Response::ack_delete(); });
        node_.route(Code::Get, "/boom", [](const Request&) -> Response { throw std::runtime_error("boom"); });
        node_.route(Code::Get, "/refuse", [](const Request&) -> Response {
            throw RequestError(Code::NotAcceptable, "nope");
        });
        node_.route(Code::Get, "/bad-response", [](const Request&) { return Response::ack_delete(); });
        node_.route(Code::Get, "/no-format", [](const Request&) {
            return Response{Code::AckPayload, std::nullopt, "x", {}};
        });
    }

    Message call(const Message& request) { return decode_message(node_.handle_request(encode_message(request))); }
    Code code_of(const Message& request) { return call(request).code; }

    MemoryNetwork network_;
    MemoryTransport transport_{network_, "node1"};
    ManualClock clock_{Timestamp{1'000'000}};
    Node node_{memory_node("node1", std::string(kSecret)), transport_, clock_};
    Bytes last_payload_;
};

TEST_F(NodeTest, ValidPostIsAcknowledged)
{
    const auto wire = node_.handle_request(encode_message(
        well_formed_request(Code::Post, "/kv/foo", token_for(Code::Post, "/kv/foo"), ContentFormat::Json, "{}")));
    ASSERT_FALSE(wire.empty());
    EXPECT_EQ(static_cast<std::uint8_t>(wire[0]), 0x41);
    EXPECT_EQ(last_payload_, "{}");
}

TEST_F(NodeTest, GetResponseCarriesContentFormat)
{
    const auto response = call(well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/kv/*")));
    EXPECT_EQ(response.code, Code::AckPayload);
    ASSERT_TRUE(response.has(OptionCode::ContentFormat));
    EXPECT_EQ(decode_uint_option(*response.find(OptionCode::ContentFormat)), 50u);
    EXPECT_EQ(response.payload, "value");
}

TEST_F(NodeTest, DeleteResponseIsHeaderOnly)
{
    const auto wire = node_.handle_request(
        encode_message(well_formed_request(Code::Delete, "/kv/foo", token_for(Code::Delete, "/kv/foo"))));
    EXPECT_EQ(wire, Bytes("\x42\x00\x00\x00", 4));
}

TEST_F(NodeTest, ErrorCodes)
{
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/kv/foo", "not a token")), Code::Unauthorized);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/kv/foo", token_for(Code::Post, "/kv/foo"))), Code::Unauthorized);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/kv/foo", "node2"))),
              Code::Unauthorized);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/nothing", token_for(Code::Get, "*"))), Code::NotAcceptable);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/boom", token_for(Code::Get, "*"))), Code::InternalServerError);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/refuse", token_for(Code::Get, "*"))), Code::NotAcceptable);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/bad-response", token_for(Code::Get, "*"))),
              Code::InternalServerError);
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/no-format", token_for(Code::Get, "*"))),
              Code::InternalServerError);

    auto unknown_format = well_formed_request(Code::Post, "/kv/foo", token_for(Code::Post, "/kv/foo"));
    unknown_format.options.back() = encode_uint_option(OptionCode::ContentFormat, 7);
    EXPECT_EQ(code_of(unknown_format), Code::UnsupportedContentFormat);

    auto short_format = well_formed_request(Code::Post, "/kv/foo", token_for(Code::Post, "/kv/foo"));
    short_format.options.back().value = "\x32";
    EXPECT_EQ(code_of(short_format), Code::BadRequest);

    EXPECT_EQ(code_of(well_formed_request(Code::Get, "relative", token_for(Code::Get, "*"))), Code::BadRequest);
}

TEST_F(NodeTest, MalformedAndResponseFramesGet128)
{
    EXPECT_EQ(decode_message(node_.handle_request("")).code, Code::BadRequest);
    EXPECT_EQ(decode_message(node_.handle_request(Bytes("\x01\x05\x00\x00", 4))).code, Code::BadRequest);
    EXPECT_EQ(code_of(Message{Code::AckPost, {}, {}, {}}), Code::BadRequest);
}

TEST_F(NodeTest, OversizePayloadGets141)
{
    const auto token = token_for(Code::Post, "/kv/big");
    EXPECT_EQ(code_of(well_formed_request(Code::Post, "/kv/big", token, ContentFormat::Binary,
                                          Bytes(kDefaultMaxPayload, 'x'))),
              Code::AckPost);
    EXPECT_EQ(code_of(well_formed_request(Code::Post, "/kv/big", token, ContentFormat::Binary,
                                          Bytes(kDefaultMaxPayload + 1, 'x'))),
              Code::RequestEntityTooLarge);
}

TEST_F(NodeTest, DrainingNodeAnswers163)
{
    node_.drain();
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/kv/foo"))),
              Code::ServiceUnavailable);
}

TEST_F(NodeTest, EveryFrameGetsExactlyOneResponseWithAListedCode)
{
    testing::Rng rng(7);
    const std::set<Code> responses = {Code::AckPost, Code::AckDelete, Code::AckPayload, Code::BadRequest,
                                      Code::Unauthorized, Code::NotAcceptable, Code::RequestEntityTooLarge,
                                      Code::UnsupportedContentFormat, Code::InternalServerError,
                                      Code::ServiceUnavailable};
    for (int i = 0; i < 2000; ++i) {
        Bytes frame;
        switch (i % 3) {
        case 0: frame = encode_message(testing::random_message(rng)); break;
        case 1: frame = testing::mutate(encode_message(well_formed_request(Code::Get, "/kv/a", token_for(Code::Get, "*"))), rng); break;
        default: frame = testing::random_bytes(rng, 64); break;
        }
        const auto response = decode_message(node_.handle_request(frame));
        ASSERT_TRUE(responses.count(response.code));
    }
}

TEST_F(NodeTest, NoHandlerRunsWithoutAuthorisation)
{
    testing::Rng rng(11);
    const std::vector<std::string> tokens = {token_for(Code::Get, "/kv/*"), token_for(Code::Post, "/kv/a"),
                                             token_for(Code::Get, "*", "node2"), "", "junk"};
    for (int i = 0; i < 500; ++i) {
        const Code method = std::array{Code::Get, Code::Post, Code::Delete}[rng() % 3];
        const std::string path = std::array{"/kv/a", "/kv/b", "/boom", "/x"}[rng() % 4];
        node_.handle_request(encode_message(well_formed_request(method, path, tokens[rng() % tokens.size()])));
    }
    const auto stats = node_.stats();
    EXPECT_EQ(stats.requests, 500u);
    EXPECT_LE(stats.handler_calls, stats.authorized);
    EXPECT_GT(stats.handler_calls, 0u);
    EXPECT_LT(stats.authorized, stats.requests);
}

TEST_F(NodeTest, ObserveReturnsUuidAndPublicKey)
{
    auto request = well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/kv/foo"));
    request.add(OptionCode::Observe, "data");
    const auto first = call(request);
    const auto second = call(request);
    ASSERT_EQ(first.code, Code::AckPayload);
    EXPECT_EQ(*first.find(OptionCode::PublicKey), "mem:node1");
    EXPECT_EQ(first.payload.size(), 36u);
    EXPECT_NE(first.payload, second.payload);
    EXPECT_EQ(node_.observations().size(), 2u);
}

TEST_F(NodeTest, ObserveNotifyUsesThePathAndRejectsCollisions)
{
    auto request = well_formed_request(Code::Get, "/notification/response/svc/1", token_for(Code::Get, "*"));
    request.add(OptionCode::Observe, "notify");
    const auto response = call(request);
    EXPECT_EQ(response.code, Code::AckPayload);
    EXPECT_TRUE(response.payload.empty());
    EXPECT_TRUE(response.has(OptionCode::PublicKey));
    EXPECT_TRUE(node_.observations().contains("/notification/response/svc/1"));
    EXPECT_EQ(call(request).code, Code::NotAcceptable);
}

TEST_F(NodeTest, ObserveErrors)
{
    auto bad_mode = well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/kv/foo"));
    bad_mode.add(OptionCode::Observe, "everything");
    EXPECT_EQ(code_of(bad_mode), Code::BadRequest);

    auto unauthorised = well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/ts/*"));
    unauthorised.add(OptionCode::Observe, "data");
    EXPECT_EQ(code_of(unauthorised), Code::Unauthorized);

    auto on_post = well_formed_request(Code::Post, "/kv/foo", token_for(Code::Post, "/kv/foo"));
    on_post.add(OptionCode::Observe, "data");
    EXPECT_EQ(code_of(on_post), Code::BadRequest);
    EXPECT_EQ(node_.observations().size(), 0u);
}

TEST_F(NodeTest, ObserveExpiryFollowsMaxAge)
{
    const auto observe = [&](std::optional<std::uint32_t> max_age) {
        auto request = well_formed_request(Code::Get, "/kv/foo", token_for(Code::Get, "/kv/foo"));
        request.add(OptionCode::Observe, "data");
        if (max_age) request.add_uint(OptionCode::MaxAge, *max_age);
        return call(request).payload;
    };
    const auto default_id = observe(std::nullopt);
    const auto forever_id = observe(0);
    const auto short_id = observe(2);
    const auto start = clock_.now();

    node_.expire_observations(start + 1900ms);
    EXPECT_TRUE(node_.observations().contains(short_id));
    node_.expire_observations(start + 2000ms);
    EXPECT_FALSE(node_.observations().contains(short_id));
    node_.expire_observations(start + 59900ms);
    EXPECT_TRUE(node_.observations().contains(default_id));
    node_.expire_observations(start + 60100ms);
    EXPECT_FALSE(node_.observations().contains(default_id));
    node_.expire_observations(start + std::chrono::seconds(1'000'000));
    EXPECT_TRUE(node_.observations().contains(forever_id));
}

TEST_F(NodeTest, CatalogueNeedsTokenAndRendersHyperCat)
{
    EXPECT_EQ(code_of(well_formed_request(Code::Get, "/cat", "")), Code::Unauthorized);
    const auto response = call(well_formed_request(Code::Get, "/cat", token_for(Code::Get, "/cat")));
    ASSERT_EQ(response.code, Code::AckPayload);
    const auto doc = nlohmann::json::parse(response.payload);
    EXPECT_TRUE(doc["items"].empty());
    EXPECT_TRUE(doc["catalogue-metadata"].is_array());
}

class NodeEvents : public ::testing::Test {
protected:
    void SetUp() override { node_.start(); }

    Observation observe(std::string_view path, ObserveMode mode, std::uint32_t max_age = 60)
    {
        return client_.observe(path, mode, max_age, serialize(mint_scoped(kSecret, "obs", "arb", "node1", Code::Get, "*")));
    }

    MemoryNetwork network_;
    MemoryTransport server_{network_, "node1"};
    MemoryTransport client_transport_{network_, "client"};
    ManualClock clock_{Timestamp{5000}};
    Node node_{memory_node("node1", std::string(kSecret)), server_, clock_};
    Client client_{testing::memory_client(client_transport_, node_.config())};
};

TEST_F(NodeEvents, DeliversToEachMatchingObserverOnce)
{
    auto exact = observe("/kv/foo/bar", ObserveMode::Data);
    auto wildcard = observe("/kv/*", ObserveMode::Data);
    auto other = observe("/ts/*", ObserveMode::Data);
    auto audit = observe("/kv/foo/bar", ObserveMode::Audit);

    const MetaRecord record{Timestamp{1521554211213}, "/kv/foo/bar", ContentFormat::Json,
                            R"({"room": "lounge", "value": 1})"};
    EXPECT_EQ(node_.emit_event(record, ObserveMode::Data), 2u);
    const auto expected = R"(1521554211213 /kv/foo/bar json {"room": "lounge", "value": 1})";
    EXPECT_EQ(exact.next_line(1s), expected);
    EXPECT_EQ(wildcard.next_line(1s), expected);
    EXPECT_EQ(exact.next_line(50ms), std::nullopt);
    EXPECT_EQ(wildcard.next_line(50ms), std::nullopt);
    EXPECT_EQ(other.next_line(50ms), std::nullopt);
    EXPECT_EQ(audit.next_line(50ms), std::nullopt);
}

TEST_F(NodeEvents, WildcardNotificationPattern)
{
    auto server = observe("/notification/request/image_capture/*", ObserveMode::Data);
    EXPECT_EQ(node_.emit_event({Timestamp{1}, "/notification/request/image_capture/001", ContentFormat::Binary, "\x01"},
                               ObserveMode::Data),
              1u);
    EXPECT_EQ(server.next_line(1s), "1 /notification/request/image_capture/001 binary AQ==");
}

TEST_F(NodeEvents, NoObserversMeansNoDeliveries)
{
    EXPECT_EQ(node_.emit_event({Timestamp{1}, "/kv/x", ContentFormat::Text, "x"}, ObserveMode::Data), 0u);
}

TEST_F(NodeEvents, ExpiredObserversReceiveNothing)
{
    auto watcher = observe("/kv/*", ObserveMode::Data, 2);
    clock_.advance(2000ms);
    EXPECT_EQ(node_.emit_event({clock_.now(), "/kv/x", ContentFormat::Text, "x"}, ObserveMode::Data), 0u);
    node_.expire_observations();
    EXPECT_EQ(node_.observations().size(), 0u);
    EXPECT_EQ(watcher.next_line(50ms), std::nullopt);
}

TEST_F(NodeEvents, DisconnectedObserversAreDropped)
{
    {
        auto watcher = observe("/kv/*", ObserveMode::Data);
    }
    EXPECT_EQ(node_.emit_event({Timestamp{1}, "/kv/x", ContentFormat::Text, "x"}, ObserveMode::Data), 0u);
    EXPECT_EQ(node_.observations().size(), 0u);
}

TEST_F(NodeEvents, AuditObserversSeeEveryRequest)
{
    auto audit = observe("/audit/kv/*", ObserveMode::Audit);
    node_.route(Code::Post, "/kv/*", [](const Request&) { return Response::ack_post(); });
    const auto token = serialize(mint_scoped(kSecret, "sensor", "arb", "node1", Code::Post, "/kv/*"));
    client_.post("/kv/foo", "1", ContentFormat::Json, token);
    client_.send(Code::Post, "/kv/foo", "bad", ContentFormat::Json, "2");
    EXPECT_EQ(audit.next_line(1s), "5000 /kv/foo text sensor POST");
    EXPECT_EQ(audit.next_line(1s), "5000 /kv/foo text - POST");
    EXPECT_EQ(audit.next_line(50ms), std::nullopt);
}

TEST(MetaRecord, FormatsAndParses)
{
    EXPECT_EQ(format_meta_record({Timestamp{0}, "/a", ContentFormat::Text, "x"}), "0 /a text x");
    const MetaRecord binary{Timestamp{42}, "/b", ContentFormat::Binary, Bytes("\x00\x01\x02\xfd\xfe\xff\x10\x20", 8)};
    EXPECT_EQ(format_meta_record(binary), "42 /b binary AAEC/f7/ECA=");
    EXPECT_EQ(parse_meta_record("42 /b binary AAEC/f7/ECA="), binary);
    const MetaRecord spaced{Timestamp{7}, "/c", ContentFormat::Json, R"({"a": 1, "b": 2})"};
    EXPECT_EQ(parse_meta_record(format_meta_record(spaced)), spaced);
    EXPECT_EQ(parse_meta_record("0 /a text "), (MetaRecord{Timestamp{0}, "/a", ContentFormat::Text, ""}));
    EXPECT_FALSE(parse_meta_record("x /a text y"));
    EXPECT_FALSE(parse_meta_record("1 /a yaml y"));
    EXPECT_FALSE(parse_meta_record("1 /a"));
}

TEST(ObservationRegistry, ExpiryBoundaries)
{
    ObservationRegistry registry;
    EXPECT_EQ(registry.expire(Timestamp{0}), 0u);
    ObservationEntry e{"id", "/kv/*", ObserveMode::Data, expiry_for(Timestamp{0}, 2), ContentFormat::Json};
    ASSERT_TRUE(registry.add(e, Timestamp{0}));
    EXPECT_FALSE(registry.add(e, Timestamp{1}));
    EXPECT_EQ(registry.matching("/kv/a", ObserveMode::Data, Timestamp{1999}).size(), 1u);
    EXPECT_EQ(registry.matching("/kv/a", ObserveMode::Audit, Timestamp{1999}).size(), 0u);
    EXPECT_EQ(registry.matching("/kv/a", ObserveMode::Data, Timestamp{2000}).size(), 0u);
    EXPECT_TRUE(registry.add(e, Timestamp{2000}));
    EXPECT_EQ(registry.expire(Timestamp{2000}), 1u);
    EXPECT_FALSE(expiry_for(Timestamp{5}, 0).has_value());
}

TEST(Catalogue, RendersItems)
{
    const auto doc = nlohmann::json::parse(render_catalogue("store1", {{"/kv/foo", {{"urn:x:rel", "v"}}}}));
    ASSERT_EQ(doc["items"].size(), 1u);
    EXPECT_EQ(doc["items"][0]["href"], "/kv/foo");
    EXPECT_EQ(doc["items"][0]["item-metadata"][0]["rel"], "urn:x:rel");
    EXPECT_EQ(doc["items"][0]["item-metadata"][0]["val"], "v");
    bool described = false;
    for (const auto& m : doc["catalogue-metadata"]) {
        described |= m["rel"] == "urn:X-hypercat:rels:hasDescription:en" && m["val"] == "store1";
    }
    EXPECT_TRUE(described);
}

}  // namespace
}  // namespace zest
