#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge {

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.0;
  std::size_t n = 1;
  std::size_t max_tokens = 512;
  std::vector<std::string> stop_sequences{";", "\n\n"};
};

struct TokenUsage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::size_t total_tokens = 0;
};

struct GenerationResponse {
  std::vector<std::string> completions;  // exactly request.n, raw text
  std::string model_name;
  TokenUsage usage;
};

// Shared by the generator and debugger roles. Implementations are safe to
// call from several threads at once.
class ModelClient {
 public:
  virtual ~ModelClient() = default;

  // Throws EndpointUnreachable, MalformedResponse, AuthError or
  // MockExhausted.
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

// The first SQL statement of a completion: code fences are stripped (the
// first fenced block wins when present), then the text is cut at the first
// top-level ';' and trimmed.
std::string extract_sql(std::string_view completion);

inline constexpr std::string_view kDefaultApiKeyEnv = "SQLFORGE_API_KEY";

struct EndpointConfig {
  std::string url;    // http(s)://host[:port][/base]
  std::string model;  // sent as "model"; empty to omit
  std::string api_key_env{kDefaultApiKeyEnv};
  std::size_t max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t max_in_flight = 4;
  std::chrono::seconds timeout{120};
};

// Chat-completions JSON over HTTP. The bearer token is read from the
// environment variable named by `api_key_env` on every request and is never
// logged. Transport failures, 429 and 5xx are retried with exponential
// backoff; 401 and 403 raise AuthError.
class HttpChatClient final : public ModelClient {
 public:
  explicit HttpChatClient(EndpointConfig config);
  ~HttpChatClient() override;

  GenerationResponse generate(const GenerationRequest& request) override;

  const EndpointConfig& config() const noexcept { return config_; }

 private:
  struct Target;

  GenerationResponse request_once(const GenerationRequest& request, std::size_t n);

  EndpointConfig config_;
  std::unique_ptr<Target> target_;
  std::counting_semaphore<1024> in_flight_;
};

struct MockEntry {
  std::optional<std::string> match;  // prompt substring; absent matches all
  std::vector<std::string> responses;
};

// Scripted client. Each completion is taken from the first entry whose
// match occurs in the prompt and that still has responses left; a request
// may drain one entry and continue into the next matching one.
class MockClient final : public ModelClient {
 public:
  explicit MockClient(std::vector<MockEntry> entries);

  // JSON-lines of {"match": optional string, "responses": [string, ...]}.
  // Throws FileNotFound or InvalidInput.
  static std::unique_ptr<MockClient> from_file(const std::filesystem::path& path);

  GenerationResponse generate(const GenerationRequest& request) override;

  // Number of generate() calls served so far.
  std::size_t calls() const;
  // Prompts seen, in call order.
  std::vector<std::string> prompts() const;

 private:
  struct Slot {
    MockEntry entry;
    std::size_t next = 0;
  };

  mutable std::mutex mutex_;
  std::vector<Slot> slots_;
  std::vector<std::string> prompts_;
};

// Forwards to another client and records every exchange as a mock script
// entry whose match is the full prompt, so the session replays exactly.
class RecordingClient final : public ModelClient {
 public:
  explicit RecordingClient(ModelClient& inner) : inner_(inner) {}

  GenerationResponse generate(const GenerationRequest& request) override;

  std::vector<MockEntry> entries() const;
  void save(const std::filesystem::path& path) const;

 private:
  ModelClient& inner_;
  mutable std::mutex mutex_;
  std::vector<MockEntry> entries_;
};

void write_mock_script(const std::filesystem::path& path, const std::vector<MockEntry>& entries);

// `http://` or `https://` URLs give an HttpChatClient built from `config`
// with the URL replaced; `mock:<path>` or the path of an existing file gives
// a MockClient.
//
// Throws InvalidInput for anything else.
std::unique_ptr<ModelClient> make_client(std::string_view endpoint, EndpointConfig config = {});

}  // namespace sqlforge
