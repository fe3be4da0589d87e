#include <atomic>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fixture_scenario.hpp"
#include "stub_server.hpp"
#include "t2iattack/attack.hpp"
#include "t2iattack/error.hpp"
#include "t2iattack/remote_oracle.hpp"

namespace t2ia {
namespace {

using testing::StubReply;
using testing::StubRequest;
using testing::StubServer;

OracleConfig remote_config(const std::string& url, int retry_cap = 0) {
  OracleConfig config = testing::fixture_oracle_config(url);
  config.retry_cap = retry_cap;
  return config;
}

void expect_near(const Embedding& a, const Embedding& b) {
  ASSERT_EQ(a.dimension(), b.dimension());
  for (std::size_t j = 0; j < a.dimension(); ++j) EXPECT_NEAR(a[j], b[j], 1e-15);
}

const char* kCaps = R"({"dimension":2,"max_n":4,"encoders":["attack","eval"]})";

TEST(Wire, RequestShapes) {
  EXPECT_EQ(wire::generate_request("a cat", 3, EncoderRole::kEval, 9).dump(),
            R"({"encoder":"eval","n":3,"seed":9,"text":"a cat"})");
  EXPECT_FALSE(wire::generate_request("a", 1, EncoderRole::kAttack, std::nullopt).contains("seed"));
  EXPECT_EQ(wire::embed_text_request("a", EncoderRole::kAttack).dump(),
            R"({"encoder":"attack","text":"a"})");
}

TEST(Wire, ResponsesRoundTrip) {
  SyntheticVictimSpec spec = testing::fixture_victim_spec();
  SyntheticOracle oracle(spec, 1);
  const auto batch = oracle.generate("a red ball", 3, EncoderRole::kAttack);
  const auto parsed =
      wire::parse_generate_response(wire::generate_response(batch, "m"), "a red ball", 3, 8);
  ASSERT_EQ(parsed.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) expect_near(parsed.embeddings[i], batch.embeddings[i]);
  EXPECT_EQ(parsed.query_id, batch.query_id);
  const auto e = oracle.embed_text("a red ball", EncoderRole::kEval);
  expect_near(wire::parse_embed_text_response(wire::embed_text_response(e, "m"), 8), e);
  const Capabilities caps = wire::parse_capabilities(wire::capabilities_response({8, 4, {"x"}}));
  EXPECT_EQ(caps.dimension, 8u);
  EXPECT_EQ(caps.max_n, 4);
  EXPECT_EQ(caps.encoders, std::vector<std::string>{"x"});
}

TEST(Wire, ValidationFailuresAreProtocolErrors) {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  const auto ok = nlohmann::json::parse(
      R"({"embeddings":[[1,0],[0,1]],"model_id":"m","query_id":"q"})");
  EXPECT_NO_THROW(wire::parse_generate_response(ok, "t", 2, 2));
  // wrong count, wrong dimension, not unit norm, missing field
  EXPECT_EQ(code([&] { wire::parse_generate_response(ok, "t", 3, 2); }), ErrorCode::kProtocol);
  EXPECT_EQ(code([&] { wire::parse_generate_response(ok, "t", 2, 3); }), ErrorCode::kProtocol);
  auto scaled = ok;
  scaled["embeddings"][0] = {1.001, 0.0};
  EXPECT_EQ(code([&] { wire::parse_generate_response(scaled, "t", 2, 2); }), ErrorCode::kProtocol);
  auto nearly = ok;
  nearly["embeddings"][0] = {1.000001, 0.0};
  EXPECT_NO_THROW(wire::parse_generate_response(nearly, "t", 2, 2));
  auto missing = ok;
  missing.erase("query_id");
  EXPECT_EQ(code([&] { wire::parse_generate_response(missing, "t", 2, 2); }), ErrorCode::kProtocol);
  EXPECT_EQ(code([] { wire::parse_capabilities(nlohmann::json::parse(R"({"dimension":0,"max_n":1,"encoders":[]})")); }),
            ErrorCode::kProtocol);
}

TEST(RemoteOracle, ServesSyntheticVictimFaithfully) {
  SyntheticOracle victim(testing::fixture_victim_spec(), 3);
  StubServer server(testing::oracle_handler(victim, testing::fixture_capabilities()));
  OracleConfig config = remote_config(server.url());
  config.bearer_token = "secret";
  RemoteOracle remote(config);
  EXPECT_EQ(remote.dimension(), 8u);
  const auto batch = remote.generate("a red ball", 4, EncoderRole::kAttack);
  const auto direct = victim.generate("a red ball", 4, EncoderRole::kAttack);
  ASSERT_EQ(batch.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      EXPECT_NEAR(batch.embeddings[i][j], direct.embeddings[i][j], 1e-12);
    }
  }
  EXPECT_EQ(batch.query_id, direct.query_id);
  EXPECT_EQ(remote.model_id(), "synthetic-victim-v1");
  const auto e = remote.embed_text("a red ball", EncoderRole::kEval);
  EXPECT_NEAR(e.dot(victim.embed_text("a red ball", EncoderRole::kEval)), 1.0, 1e-12);

  const auto requests = server.requests();
  ASSERT_EQ(requests.size(), 3u);
  EXPECT_EQ(requests[0].path, "/v1/capabilities");
  for (const auto& r : requests) {
    EXPECT_EQ(r.authorization, "Bearer secret");
    EXPECT_EQ(r.protocol_version, kProtocolVersion);
  }
  const auto body = nlohmann::json::parse(requests[1].body);
  EXPECT_EQ(body.at("seed").get<std::uint64_t>(), testing::kFixtureSeed);
  EXPECT_EQ(body.at("encoder"), "attack");
}

TEST(RemoteOracle, NoBearerHeaderWithoutToken) {
  SyntheticOracle victim(testing::fixture_victim_spec(), 3);
  StubServer server(testing::oracle_handler(victim, testing::fixture_capabilities()));
  RemoteOracle remote(remote_config(server.url()));
  remote.embed_text("a", EncoderRole::kAttack);
  EXPECT_TRUE(server.requests().back().authorization.empty());
}

TEST(RemoteOracle, RejectsNAboveMaxNBeforeSending) {
  SyntheticOracle victim(testing::fixture_victim_spec(), 3);
  StubServer server(testing::oracle_handler(victim, testing::fixture_capabilities()));
  RemoteOracle remote(remote_config(server.url()));
  EXPECT_THROW(remote.generate("a cat", 5, EncoderRole::kAttack), Error);
  EXPECT_EQ(server.requests().size(), 1u);
  EXPECT_THROW(remote.generate("", 2, EncoderRole::kAttack), Error);
}

TEST(RemoteOracle, RetriesServerErrorsUpToTheCap) {
  std::atomic<int> generate_calls{0};
  StubServer server([&](const StubRequest& r) -> StubReply {
    if (r.path == "/v1/capabilities") return {200, kCaps};
    ++generate_calls;
    return {503, "{}"};
  });
  RemoteOracle remote(remote_config(server.url(), 2));
  try {
    remote.generate("a cat", 2, EncoderRole::kAttack);
    FAIL() << "expected OracleUnavailable";
  } catch (const OracleUnavailable& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.code(), ErrorCode::kOracleUnavailable);
  }
  EXPECT_EQ(generate_calls.load(), 3);
}

TEST(RemoteOracle, RetriedCallCountsOnceInTheLedger) {
  std::atomic<int> calls{0};
  StubServer server([&](const StubRequest& r) -> StubReply {
    if (r.path == "/v1/capabilities") return {200, kCaps};
    if (calls++ < 2) return {500, "{}"};
    return {200, R"({"embeddings":[[1,0],[0,1]],"model_id":"m","query_id":"q"})"};
  });
  RemoteOracle remote(remote_config(server.url(), 3));
  OracleSession session(remote);
  const auto batch = session.generate("a cat", 2, EncoderRole::kAttack, QueryPhase::kBaseline);
  EXPECT_EQ(batch.size(), 2u);
  EXPECT_EQ(session.snapshot().generation_queries(), 1u);
  EXPECT_EQ(remote.attempts(), 4u);  // capabilities + three generate attempts
}

TEST(RemoteOracle, ClientErrorsAreNotRetried) {
  std::atomic<int> calls{0};
  StubServer server([&](const StubRequest& r) -> StubReply {
    if (r.path == "/v1/capabilities") return {200, kCaps};
    ++calls;
    return {400, R"({"error":"bad"})"};
  });
  RemoteOracle remote(remote_config(server.url(), 3));
  try {
    remote.embed_text("a", EncoderRole::kAttack);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteOracle, TransportFailureBecomesUnavailable) {
  std::string url;
  {
    StubServer server([](const StubRequest&) { return StubReply{}; });
    url = server.url();
  }
  RemoteOracle remote(remote_config(url, 1));
  try {
    remote.embed_text("a", EncoderRole::kAttack);
    FAIL();
  } catch (const OracleUnavailable& e) {
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(RemoteOracle, MalformedEmbeddingIsProtocolError) {
  StubServer server([](const StubRequest& r) -> StubReply {
    if (r.path == "/v1/capabilities") return {200, kCaps};
    return {200, R"({"embedding":[0.5,0.5],"model_id":"m"})"};
  });
  RemoteOracle remote(remote_config(server.url()));
  try {
    remote.embed_text("a", EncoderRole::kAttack);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(RemoteOracle, PathPrefixIsKept) {
  SyntheticOracle victim(testing::fixture_victim_spec(), 3);
  auto inner = testing::oracle_handler(victim, testing::fixture_capabilities());
  StubServer server([&](const StubRequest& r) {
    StubRequest stripped = r;
    const std::string prefix = "/adapter";
    if (r.path.rfind(prefix, 0) != 0) return StubReply{404, "{}"};
    stripped.path = r.path.substr(prefix.size());
    return inner(stripped);
  });
  RemoteOracle remote(remote_config(server.url() + "/adapter/"));
  EXPECT_EQ(remote.dimension(), 8u);
}

class FixtureReplay : public ::testing::Test {
 protected:
  static testing::Fixture load() {
    return testing::Fixture::parse(
        testing::read_text_file(std::string(T2IA_SOURCE_DIR) + "/tests/fixtures/adapter_replay.json"));
  }
};

TEST_F(FixtureReplay, AttackOverReplayMatchesInProcessVictim) {
  const testing::Fixture fixture = load();
  StubServer server(testing::fixture_handler(fixture));
  RemoteOracle remote(remote_config(server.url()));
  const AttackResult replayed =
      run_attack(testing::kFixtureText, testing::fixture_attack_config(), remote);
  ASSERT_FALSE(replayed.error) << *replayed.error;

  SyntheticOracle victim(testing::fixture_victim_spec(), testing::kFixtureSeed);
  const AttackResult direct =
      run_attack(testing::kFixtureText, testing::fixture_attack_config(), victim);
  EXPECT_EQ(replayed.adversarial_text, direct.adversarial_text);
  EXPECT_EQ(replayed.perturbed_word_indices, direct.perturbed_word_indices);
  EXPECT_EQ(replayed.ledger, direct.ledger);
  ASSERT_TRUE(replayed.final_divergence && direct.final_divergence);
  EXPECT_NEAR(*replayed.final_divergence, *direct.final_divergence, 1e-12);
}

TEST_F(FixtureReplay, RequestsMatchRecordingAndResponsesAreByteIdentical) {
  const testing::Fixture fixture = load();
  StubServer server(testing::fixture_handler(fixture));
  RemoteOracle remote(remote_config(server.url()));
  run_attack(testing::kFixtureText, testing::fixture_attack_config(), remote);

  std::set<std::string> sent;
  for (const auto& r : server.requests()) {
    if (r.method == "POST") sent.insert(testing::Fixture::key(r.path, nlohmann::json::parse(r.body)));
  }
  std::set<std::string> recorded;
  for (const auto& [path, request] : fixture.requests) recorded.insert(testing::Fixture::key(path, request));
  EXPECT_EQ(sent, recorded);

  // Replaying the recorded fixture reproduces the file byte for byte.
  EXPECT_EQ(fixture.serialize(),
            testing::read_text_file(std::string(T2IA_SOURCE_DIR) + "/tests/fixtures/adapter_replay.json"));
}

}  // namespace
}  // namespace t2ia
