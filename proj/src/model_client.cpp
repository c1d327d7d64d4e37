#include "sqlforge/model_client.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

#include "sqlforge/error.hpp"
#include "sqlforge/jsonl.hpp"
#include "sqlforge/sql_lexer.hpp"
#include "sqlforge/text.hpp"

namespace sqlforge {

namespace {

std::string_view strip_fences(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return text;
  auto body_start = text.find('\n', open + 3);
  if (body_start == std::string_view::npos) {
    // Single-line fence: ```SELECT 1```
    body_start = open + 3;
  } else {
    ++body_start;
  }
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return text.substr(body_start);
  return text.substr(body_start, close - body_start);
}

std::string truncate_for_log(std::string_view text, std::size_t limit = 200) {
  if (text.size() <= limit) return std::string(text);
  return std::string(text.substr(0, limit)) + "...";
}

}  // namespace

std::string extract_sql(std::string_view completion) {
  const auto body = strip_fences(completion);
  const auto statements = split_statements(body);
  if (statements.empty()) return {};
  return std::string(trim(statements.front()));
}

struct HttpChatClient::Target {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

HttpChatClient::HttpChatClient(EndpointConfig config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(config_.url, m, url_re)) throw InvalidInput("not an http(s) endpoint URL: " + config_.url);
  target_ = std::make_unique<Target>();
  target_->origin = m[1].str();
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.empty()) {
    path = "/v1/chat/completions";
  } else if (!path.ends_with("/chat/completions")) {
    path += "/chat/completions";
  }
  target_->path = path;
}

HttpChatClient::~HttpChatClient() = default;

GenerationResponse HttpChatClient::request_once(const GenerationRequest& request, std::size_t n) {
  nlohmann::json body = {
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"n", n},
      {"max_tokens", request.max_tokens},
  };
  if (!config_.model.empty()) body["model"] = config_.model;
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string payload = body.dump();
  std::chrono::milliseconds backoff = config_.initial_backoff;
  std::string last_failure;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("retrying {} in {} ms after: {}", target_->origin, backoff.count(), last_failure);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }

    httplib::Client client(target_->origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto result = [&] {
      in_flight_.acquire();
      auto r = client.Post(target_->path, headers, payload, "application/json");
      in_flight_.release();
      return r;
    }();

    if (!result) {
      last_failure = httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    if (status != 200) {
      throw MalformedResponse("HTTP " + std::to_string(status) + ": " + truncate_for_log(result->body));
    }

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error&) {
      throw MalformedResponse("response is not JSON: " + truncate_for_log(result->body));
    }
    GenerationResponse response;
    try {
      for (const auto& choice : reply.at("choices")) {
        const auto& content = choice.at("message").at("content");
        response.completions.push_back(content.is_null() ? std::string() : content.get<std::string>());
      }
      response.model_name = reply.value("model", config_.model);
      if (const auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
        response.usage.prompt_tokens = usage->value("prompt_tokens", std::size_t{0});
        response.usage.completion_tokens = usage->value("completion_tokens", std::size_t{0});
        response.usage.total_tokens = usage->value("total_tokens", std::size_t{0});
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedResponse(std::string("unexpected response shape: ") + e.what());
    }
    return response;
  }
  throw EndpointUnreachable(target_->origin + " unreachable after " + std::to_string(config_.max_retries + 1) +
                            " attempts: " + last_failure);
}

GenerationResponse HttpChatClient::generate(const GenerationRequest& request) {
  if (request.n == 0) throw InvalidInput("n must be positive");
  if (request.temperature < 0) throw InvalidInput("temperature must be non-negative");

  GenerationResponse response = request_once(request, request.n);
  while (response.completions.size() < request.n) {
    auto more = request_once(request, request.n - response.completions.size());
    if (more.completions.empty()) throw MalformedResponse("endpoint returned no choices");
    for (auto& c : more.completions) response.completions.push_back(std::move(c));
    response.usage.prompt_tokens += more.usage.prompt_tokens;
    response.usage.completion_tokens += more.usage.completion_tokens;
    response.usage.total_tokens += more.usage.total_tokens;
  }
  response.completions.resize(request.n);
  return response;
}

MockClient::MockClient(std::vector<MockEntry> entries) {
  slots_.reserve(entries.size());
  for (auto& e : entries) slots_.push_back({std::move(e), 0});
}

std::unique_ptr<MockClient> MockClient::from_file(const std::filesystem::path& path) {
  std::vector<MockEntry> entries;
  for_each_jsonl(path, [&](const nlohmann::json& record, std::size_t line) {
    const auto where = path.string() + ":" + std::to_string(line);
    if (!record.is_object()) throw InvalidInput(where + ": expected an object");
    MockEntry entry;
    if (const auto m = record.find("match"); m != record.end() && !m->is_null()) {
      if (!m->is_string()) throw InvalidInput(where + ": \"match\" must be a string");
      entry.match = m->get<std::string>();
    }
    const auto r = record.find("responses");
    if (r == record.end() || !r->is_array()) throw InvalidInput(where + ": \"responses\" must be an array");
    for (const auto& item : *r) {
      if (!item.is_string()) throw InvalidInput(where + ": responses must be strings");
      entry.responses.push_back(item.get<std::string>());
    }
    entries.push_back(std::move(entry));
  });
  return std::make_unique<MockClient>(std::move(entries));
}

GenerationResponse MockClient::generate(const GenerationRequest& request) {
  if (request.n == 0) throw InvalidInput("n must be positive");
  std::lock_guard lock(mutex_);
  prompts_.push_back(request.prompt);
  GenerationResponse response;
  response.model_name = "mock";
  for (std::size_t i = 0; i < request.n; ++i) {
    Slot* slot = nullptr;
    for (auto& s : slots_) {
      const bool matches = !s.entry.match || request.prompt.find(*s.entry.match) != std::string::npos;
      if (matches && s.next < s.entry.responses.size()) {
        slot = &s;
        break;
      }
    }
    if (slot == nullptr) {
      throw MockExhausted("no scripted response left for prompt: " + truncate_for_log(request.prompt, 120));
    }
    response.completions.push_back(slot->entry.responses[slot->next++]);
  }
  return response;
}

std::size_t MockClient::calls() const {
  std::lock_guard lock(mutex_);
  return prompts_.size();
}

std::vector<std::string> MockClient::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

GenerationResponse RecordingClient::generate(const GenerationRequest& request) {
  auto response = inner_.generate(request);
  std::lock_guard lock(mutex_);
  entries_.push_back({request.prompt, response.completions});
  return response;
}

std::vector<MockEntry> RecordingClient::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void RecordingClient::save(const std::filesystem::path& path) const { write_mock_script(path, entries()); }

void write_mock_script(const std::filesystem::path& path, const std::vector<MockEntry>& entries) {
  std::vector<nlohmann::json> records;
  records.reserve(entries.size());
  for (const auto& e : entries) {
    nlohmann::json j = {{"responses", e.responses}};
    if (e.match) j["match"] = *e.match;
    records.push_back(std::move(j));
  }
  write_jsonl(path, records);
}

std::unique_ptr<ModelClient> make_client(std::string_view endpoint, EndpointConfig config) {
  const std::string lower = to_lower(endpoint);
  if (lower.starts_with("http://") || lower.starts_with("https://")) {
    config.url = std::string(endpoint);
    return std::make_unique<HttpChatClient>(std::move(config));
  }
  if (endpoint.starts_with("mock:")) return MockClient::from_file(std::string(endpoint.substr(5)));
  if (std::filesystem::is_regular_file(std::string(endpoint))) return MockClient::from_file(std::string(endpoint));
  throw InvalidInput("endpoint is neither an http(s) URL nor a mock script: " + std::string(endpoint));
}

}  // namespace sqlforge
