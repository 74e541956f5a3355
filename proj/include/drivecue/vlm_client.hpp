// Copyright 2026 The drivecue Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivecue/error.hpp"

namespace drivecue::vlm {

struct ImagePayload {
  std::string source;      // path or other identifier; never sent on the wire
  std::string media_type;  // e.g. image/jpeg
  std::string base64;      // may be empty for backends that do not need bytes

  std::string data_url() const { return "data:" + media_type + ";base64," + base64; }
};

// Reads an image file and base64-encodes it. Throws Error{kIo}.
ImagePayload load_image(const std::filesystem::path& path);

struct ModelRequest {
  std::optional<std::string> system_text;
  std::string user_text;
  std::vector<ImagePayload> images;
  double temperature = 0.2;
  int max_tokens = 512;
  std::optional<std::int64_t> seed;
};

struct ModelResponse {
  std::string text;
  double latency = 0.0;  // seconds
  std::string backend_id;
};

// Raised for HTTP failures; carries the status when one was received.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, int status, const std::string& message)
      : Error(code, message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelResponse complete(const ModelRequest& request) = 0;
  virtual std::string id() const = 0;
  // Whether requests must carry image bytes (the mock only hashes sources).
  virtual bool needs_image_bytes() const = 0;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible chat completions over HTTP.

struct HttpConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string api_key;
  std::string model = "llava-v1.6-mistral-7b";
  std::chrono::milliseconds timeout{300'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{1000};  // doubled after every retry
};

// Builds the chat-completions request body for `request`.
std::string build_chat_body(const ModelRequest& request, std::string_view model);

// Extracts choices[0].message.content. Throws Error{kResponseSchema}.
std::string parse_chat_response(std::string_view body);

class HttpBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpConfig config, Sleeper sleeper = {});

  // Retries transport failures and 5xx up to max_retries times; 4xx are
  // returned immediately (401/403 as kAuth).
  ModelResponse complete(const ModelRequest& request) override;
  std::string id() const override;
  bool needs_image_bytes() const override { return true; }

  const HttpConfig& config() const { return config_; }
  int attempts_of_last_call() const { return last_attempts_; }

 private:
  HttpConfig config_;
  Sleeper sleeper_;
  std::atomic<int> last_attempts_{0};
};

// ---------------------------------------------------------------------------
// Deterministic in-process backend.

struct MockRule {
  std::optional<std::string> stage;                 // stage name, see prompting
  std::optional<std::string> instruction_contains;  // substring of the passenger instruction
  std::string response_text;
};

struct MockScript {
  std::vector<MockRule> rules;
};

MockScript parse_mock_script(std::string_view json_text);
MockScript load_mock_script(const std::filesystem::path& path);

// Pure function of (request bytes, seed, script). Unscripted trajectory
// requests get speeds in [0, 15] m/s and curvatures in [-0.2, 0.2] 1/m
// derived from a hash of the request.
ModelResponse mock_complete(const ModelRequest& request, const MockScript& script);

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockScript script = {}) : script_(std::move(script)) {}
  ModelResponse complete(const ModelRequest& request) override;
  std::string id() const override { return "mock"; }
  bool needs_image_bytes() const override { return false; }

 private:
  MockScript script_;
};

// ---------------------------------------------------------------------------

enum class BackendKind { kMock, kHttp };

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  HttpConfig http;
  std::optional<std::filesystem::path> mock_script;
};

// Overlays DRIVECUE_BASE_URL, DRIVECUE_API_KEY (or OPENAI_API_KEY) and
// DRIVECUE_MODEL from the environment onto `config`.
void apply_environment(BackendConfig& config);

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace drivecue::vlm
