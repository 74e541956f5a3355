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

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "drivecue/runner.hpp"
#include "drivecue/vlm_client.hpp"

namespace drivecue::service {

struct ServiceConfig {
  std::filesystem::path manifest_path;
  std::optional<std::filesystem::path> annotations_path;
  vlm::BackendConfig backend;
  runner::PipelineOptions pipeline;
  std::size_t max_in_flight = 1;
  bool queue = false;  // wait for a free slot instead of answering 409
  std::string cors_origin = "*";
};

// HTTP front end over the planning pipeline:
//   GET  /api/scenes
//   GET  /api/scenes/{id}
//   POST /api/scenes/{id}/plan   {"instruction"?: string, "seed"?: int}
//   GET  /frames/...             static frame images
class Service {
 public:
  // Loads the manifest and annotations; throws Error if either is malformed.
  explicit Service(ServiceConfig config, std::unique_ptr<vlm::Backend> backend = nullptr);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Port 0 picks a free port. Returns the bound port or throws Error{kIo}.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen_after_bind();
  // Blocks until a listen_after_bind() call on another thread is accepting.
  void wait_until_ready() const;
  void stop();

  std::size_t scene_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drivecue::service
