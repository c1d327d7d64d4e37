#include <gtest/gtest.h>

#include <httplib.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fixture_corpus.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/model_client.hpp"

namespace sqlforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

TEST(ExtractSql, FencesAndStatements) {
  EXPECT_EQ(extract_sql("SELECT 1"), "SELECT 1");
  EXPECT_EQ(extract_sql("  SELECT 1;  SELECT 2;"), "SELECT 1");
  EXPECT_EQ(extract_sql("```sql\nSELECT a FROM t;\n```"), "SELECT a FROM t");
  EXPECT_EQ(extract_sql("Here you go:\n```\nSELECT b FROM u\n```\nand ```SELECT c```"), "SELECT b FROM u");
  EXPECT_EQ(extract_sql("```SELECT x FROM y```"), "SELECT x FROM y");
  EXPECT_EQ(extract_sql("SELECT ';' FROM t; junk"), "SELECT ';' FROM t");
  EXPECT_EQ(extract_sql(""), "");
  EXPECT_EQ(extract_sql("   \n "), "");
}

TEST(MockClient, ServesInOrderAndRecordsPrompts) {
  MockClient mock({{std::nullopt, {"a", "b", "c"}}});
  GenerationRequest req{"p1", 0.0, 2};
  EXPECT_EQ(mock.generate(req).completions, (std::vector<std::string>{"a", "b"}));
  req.prompt = "p2";
  req.n = 1;
  EXPECT_EQ(mock.generate(req).completions, (std::vector<std::string>{"c"}));
  EXPECT_THROW(mock.generate(req), MockExhausted);
  EXPECT_EQ(mock.calls(), 3u);
  EXPECT_EQ(mock.prompts(), (std::vector<std::string>{"p1", "p2", "p2"}));
}

TEST(MockClient, MatchesBySubstringAndSpillsOver) {
  MockClient mock({{"singer", {"s1"}}, {"stadium", {"t1"}}, {std::nullopt, {"any1", "any2"}}});
  GenerationRequest req{"How many singer rows?", 0.0, 3};
  EXPECT_EQ(mock.generate(req).completions, (std::vector<std::string>{"s1", "any1", "any2"}));
  req.prompt = "stadium please";
  req.n = 1;
  EXPECT_EQ(mock.generate(req).completions, (std::vector<std::string>{"t1"}));
  EXPECT_THROW(mock.generate(req), MockExhausted);
  EXPECT_THROW(mock.generate({"x", 0.0, 0}), InvalidInput);
}

TEST(MockClient, ScriptFileRoundTrip) {
  const auto dir = testing::make_temp_dir("sqlforge-mock");
  write_mock_script(dir / "script.jsonl", {{"q1", {"SELECT 1"}}, {std::nullopt, {"SELECT 2"}}});
  auto mock = MockClient::from_file(dir / "script.jsonl");
  EXPECT_EQ(mock->generate({"q1"}).completions.at(0), "SELECT 1");
  EXPECT_EQ(mock->generate({"q1"}).completions.at(0), "SELECT 2");

  std::ofstream(dir / "bad.jsonl") << "{\"responses\": \"nope\"}\n";
  EXPECT_THROW(MockClient::from_file(dir / "bad.jsonl"), InvalidInput);
  std::ofstream(dir / "bad2.jsonl") << "{\"match\": 3, \"responses\": []}\n";
  EXPECT_THROW(MockClient::from_file(dir / "bad2.jsonl"), InvalidInput);
  EXPECT_THROW(MockClient::from_file(dir / "none.jsonl"), FileNotFound);
  fs::remove_all(dir);
}

TEST(RecordingClient, ReplaysExactly) {
  const auto dir = testing::make_temp_dir("sqlforge-record");
  MockClient inner({{std::nullopt, {"r1", "r2", "r3"}}});
  RecordingClient recorder(inner);
  recorder.generate({"first prompt", 0.0, 2});
  recorder.generate({"second", 0.0, 1});
  ASSERT_EQ(recorder.entries().size(), 2u);
  EXPECT_EQ(recorder.entries()[0].match, "first prompt");
  recorder.save(dir / "rec.jsonl");

  auto replay = MockClient::from_file(dir / "rec.jsonl");
  EXPECT_EQ(replay->generate({"second", 0.0, 1}).completions, (std::vector<std::string>{"r3"}));
  EXPECT_EQ(replay->generate({"first prompt", 0.0, 2}).completions, (std::vector<std::string>{"r1", "r2"}));
  fs::remove_all(dir);
}

TEST(MakeClient, DispatchesOnEndpointString) {
  const auto dir = testing::make_temp_dir("sqlforge-make");
  write_mock_script(dir / "m.jsonl", {{std::nullopt, {"x"}}});
  EXPECT_NE(dynamic_cast<MockClient*>(make_client("mock:" + (dir / "m.jsonl").string()).get()), nullptr);
  EXPECT_NE(dynamic_cast<MockClient*>(make_client((dir / "m.jsonl").string()).get()), nullptr);
  auto http = make_client("http://127.0.0.1:9/v1");
  ASSERT_NE(dynamic_cast<HttpChatClient*>(http.get()), nullptr);
  EXPECT_EQ(dynamic_cast<HttpChatClient*>(http.get())->config().url, "http://127.0.0.1:9/v1");
  EXPECT_THROW(make_client("ftp://nowhere"), InvalidInput);
  EXPECT_THROW(make_client((dir / "missing.jsonl").string()), InvalidInput);
  fs::remove_all(dir);
}

// Local chat-completions server. The handler gets the parsed request body
// and the Authorization header and returns (status, body).
class FakeEndpoint {
 public:
  using Handler = std::function<std::pair<int, std::string>(const json&, const std::string&)>;

  explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      auto [status, body] = handler_(json::parse(req.body), req.get_header_value("Authorization"));
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
};

std::string choices(const std::vector<std::string>& texts) {
  json j = {{"model", "fake-model"}, {"choices", json::array()},
            {"usage", {{"prompt_tokens", 5}, {"completion_tokens", 7}, {"total_tokens", 12}}}};
  for (const auto& t : texts) j["choices"].push_back({{"message", {{"role", "assistant"}, {"content", t}}}});
  return j.dump();
}

EndpointConfig fast_config(const std::string& url) {
  EndpointConfig config;
  config.url = url;
  config.model = "m";
  config.api_key_env = "SQLFORGE_TEST_KEY";
  config.initial_backoff = std::chrono::milliseconds(10);
  config.timeout = std::chrono::seconds(5);
  return config;
}

TEST(HttpChatClient, SendsRequestAndParsesChoices) {
  json seen;
  std::string auth;
  FakeEndpoint server([&](const json& body, const std::string& header) {
    seen = body;
    auth = header;
    return std::make_pair(200, choices({"SELECT 1", "SELECT 2"}));
  });
  ::setenv("SQLFORGE_TEST_KEY", "secret-token-123", 1);
  HttpChatClient client(fast_config(server.url()));
  const auto response = client.generate({"the prompt", 0.5, 2, 64});
  EXPECT_EQ(response.completions, (std::vector<std::string>{"SELECT 1", "SELECT 2"}));
  EXPECT_EQ(response.model_name, "fake-model");
  EXPECT_EQ(response.usage.total_tokens, 12u);
  EXPECT_EQ(seen.at("messages").at(0).at("content"), "the prompt");
  EXPECT_EQ(seen.at("n"), 2);
  EXPECT_EQ(seen.at("max_tokens"), 64);
  EXPECT_DOUBLE_EQ(seen.at("temperature").get<double>(), 0.5);
  EXPECT_EQ(seen.at("model"), "m");
  EXPECT_EQ(seen.at("stop"), json({";", "\n\n"}));
  EXPECT_EQ(auth, "Bearer secret-token-123");
  ::unsetenv("SQLFORGE_TEST_KEY");
}

TEST(HttpChatClient, FillsShortChoiceLists) {
  FakeEndpoint server([](const json& body, const std::string&) {
    return std::make_pair(200, choices(body.at("n").get<int>() > 1 ? std::vector<std::string>{"a"}
                                                                    : std::vector<std::string>{"b"}));
  });
  HttpChatClient client(fast_config(server.url()));
  EXPECT_EQ(client.generate({"p", 0.0, 3}).completions, (std::vector<std::string>{"a", "a", "b"}));
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpChatClient, RetriesServerErrors) {
  std::atomic<int> calls{0};
  FakeEndpoint server([&](const json&, const std::string&) {
    return ++calls < 3 ? std::make_pair(503, std::string("{}")) : std::make_pair(200, choices({"ok"}));
  });
  HttpChatClient client(fast_config(server.url()));
  EXPECT_EQ(client.generate({"p"}).completions.at(0), "ok");
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpChatClient, GivesUpAfterRetries) {
  FakeEndpoint server([](const json&, const std::string&) { return std::make_pair(429, std::string("{}")); });
  auto config = fast_config(server.url());
  config.max_retries = 2;
  HttpChatClient client(config);
  EXPECT_THROW(client.generate({"p"}), EndpointUnreachable);
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpChatClient, AuthFailureIsNotRetried) {
  FakeEndpoint server([](const json&, const std::string&) { return std::make_pair(401, std::string("{}")); });
  HttpChatClient client(fast_config(server.url()));
  EXPECT_THROW(client.generate({"p"}), AuthError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(HttpChatClient, MalformedBodies) {
  FakeEndpoint not_json([](const json&, const std::string&) { return std::make_pair(200, std::string("<html>")); });
  EXPECT_THROW(HttpChatClient(fast_config(not_json.url())).generate({"p"}), MalformedResponse);
  FakeEndpoint wrong_shape([](const json&, const std::string&) { return std::make_pair(200, std::string("{\"x\":1}")); });
  EXPECT_THROW(HttpChatClient(fast_config(wrong_shape.url())).generate({"p"}), MalformedResponse);
  FakeEndpoint bad_request([](const json&, const std::string&) { return std::make_pair(400, std::string("{}")); });
  EXPECT_THROW(HttpChatClient(fast_config(bad_request.url())).generate({"p"}), MalformedResponse);
}

TEST(HttpChatClient, UnreachableEndpoint) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto config = fast_config("http://127.0.0.1:" + std::to_string(port));
  config.max_retries = 1;
  EXPECT_THROW(HttpChatClient(config).generate({"p"}), EndpointUnreachable);
}

TEST(HttpChatClient, CredentialNeverLogged) {
  std::ostringstream captured;
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(captured);
  auto logger = std::make_shared<spdlog::logger>("capture", sink);
  logger->set_level(spdlog::level::trace);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);

  ::setenv("SQLFORGE_TEST_KEY", "very-secret-value", 1);
  {
    std::atomic<int> calls{0};
    FakeEndpoint server([&](const json&, const std::string&) {
      return ++calls < 2 ? std::make_pair(500, std::string("{}")) : std::make_pair(403, std::string("{}"));
    });
    EXPECT_THROW(HttpChatClient(fast_config(server.url())).generate({"p"}), AuthError);
  }
  ::unsetenv("SQLFORGE_TEST_KEY");
  spdlog::set_default_logger(previous);

  EXPECT_NE(captured.str().find("retrying"), std::string::npos);
  EXPECT_EQ(captured.str().find("very-secret-value"), std::string::npos);
}

}  // namespace
}  // namespace sqlforge
