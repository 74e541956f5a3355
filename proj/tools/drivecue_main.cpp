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

// drivecue command-line tool: batch runs, reports and the HTTP service.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "drivecue/drivecue.h"

using nlohmann::json;

namespace {

struct CommonOptions {
  std::string manifest;
  std::string annotations;
  std::string backend = "mock";
  std::string base_url;
  std::string api_key;
  std::string model;
  std::string mock_script;
  std::string frames;
  std::string injection;
  std::string config_file;
  std::optional<long long> seed;
  std::optional<std::size_t> reprompts;
  std::optional<double> oob_margin;
  std::optional<double> timeout;
  std::size_t k = 1;
  bool no_env = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--manifest", o.manifest, "Scene manifest (JSON)")->required();
  cmd->add_option("--annotations", o.annotations, "Instruction annotations (CSV or JSON)");
  cmd->add_option("--backend", o.backend, "Model backend")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--base-url", o.base_url, "OpenAI-compatible server URL");
  cmd->add_option("--api-key", o.api_key, "Bearer token (default: DRIVECUE_API_KEY)");
  cmd->add_option("--model", o.model, "Model name");
  cmd->add_option("--mock-script", o.mock_script, "Scripted responses for the mock backend");
  cmd->add_option("--frames", o.frames, "Directory relative frame paths resolve against");
  cmd->add_option("--injection", o.injection, "Where the instruction is injected")
      ->check(CLI::IsMember({"all_stages", "scene_description_only"}));
  cmd->add_option("--seed", o.seed, "Request seed");
  cmd->add_option("--reprompts", o.reprompts, "Extra attempts after an unparseable trajectory");
  cmd->add_option("--oob-margin", o.oob_margin, "Out-of-bounds margin in metres");
  cmd->add_option("--timeout", o.timeout, "HTTP request timeout in seconds");
  cmd->add_option("--k", o.k, "Maximum concurrent planning requests")->check(CLI::PositiveNumber);
  cmd->add_option("--config", o.config_file, "JSON file with extra config keys");
  cmd->add_flag("--no-env", o.no_env, "Ignore DRIVECUE_* environment variables");
}

json build_config(const CommonOptions& o) {
  json cfg = json::object();
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw std::runtime_error("cannot open " + o.config_file);
    cfg = json::parse(in);
    if (!cfg.is_object()) throw std::runtime_error(o.config_file + ": expected a JSON object");
  }
  cfg["manifest"] = o.manifest;
  if (!o.annotations.empty()) cfg["annotations"] = o.annotations;
  json& backend = cfg["backend"];
  if (!backend.is_object()) backend = json::object();
  backend["kind"] = o.backend;
  if (!o.base_url.empty()) backend["base_url"] = o.base_url;
  if (!o.api_key.empty()) backend["api_key"] = o.api_key;
  if (!o.model.empty()) backend["model"] = o.model;
  if (!o.mock_script.empty()) backend["mock_script"] = o.mock_script;
  if (o.timeout) backend["timeout_seconds"] = *o.timeout;
  if (!o.frames.empty()) cfg["frames_dir"] = o.frames;
  if (!o.injection.empty()) cfg["injection"] = o.injection;
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.reprompts) cfg["reprompt_limit"] = *o.reprompts;
  if (o.oob_margin) cfg["oob_margin"] = *o.oob_margin;
  cfg["max_in_flight"] = o.k;
  if (o.no_env) cfg["use_environment"] = false;
  return cfg;
}

int fail(dc_status status) {
  std::fprintf(stderr, "error (%s): %s\n", dc_status_name(status), dc_last_error());
  return 1;
}

int print_and_free(dc_string* s) {
  std::printf("%s\n", dc_string_data(s));
  dc_string_free(s);
  return 0;
}

int cmd_run(const CommonOptions& o, const std::string& conditions, const std::string& out) {
  json cfg = build_config(o);
  cfg["conditions"] = conditions;
  cfg["output"] = out;
  dc_string* summary = nullptr;
  dc_status st = dc_run_batch(cfg.dump().c_str(), &summary);
  if (st != DC_OK) return fail(st);
  return print_and_free(summary);
}

int cmd_report(const std::string& results, double q, const std::string& out_dir) {
  dc_string* summary = nullptr;
  dc_status st = dc_report(results.c_str(), q, out_dir.c_str(), &summary);
  if (st != DC_OK) return fail(st);
  return print_and_free(summary);
}

int cmd_serve(const CommonOptions& o, const std::string& host, int port, bool queue) {
  json cfg = build_config(o);
  cfg["queue"] = queue;
  dc_server* server = nullptr;
  dc_status st = dc_server_create(cfg.dump().c_str(), &server);
  if (st != DC_OK) return fail(st);
  int bound = 0;
  if ((st = dc_server_bind(server, host.c_str(), port, &bound)) != DC_OK) {
    dc_server_free(server);
    return fail(st);
  }

  // Signals are taken synchronously on this thread; the listener runs on its own.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  dc_status listen_status = DC_OK;
  std::thread listener([&] { listen_status = dc_server_listen(server); });
  dc_server_wait_ready(server);
  std::printf("listening on http://%s:%d\n", host.c_str(), bound);
  std::fflush(stdout);

  int sig = 0;
  sigwait(&signals, &sig);
  dc_server_stop(server);
  listener.join();
  dc_server_free(server);
  if (listen_status != DC_OK) return fail(listen_status);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction-conditioned trajectory planning evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dc_version()));

  CommonOptions run_opts;
  std::string conditions = "both";
  std::string out;
  auto* run = app.add_subcommand("run", "Run baseline and instructed planning over a dataset");
  add_common(run, run_opts);
  run->add_option("--conditions", conditions, "Which conditions to run")
      ->check(CLI::IsMember({"both", "baseline", "instructed"}));
  run->add_option("--out", out, "Results log (JSONL); resumed when it exists")->required();

  std::string results;
  double q = 0.975;
  std::string out_dir;
  auto* report = app.add_subcommand("report", "Build tables and overlays from a results log");
  report->add_option("--results", results, "Results log (JSONL)")->required();
  report->add_option("--q", q, "Quantile for the outlier filter")->check(CLI::Range(0.0, 1.0).description("in (0, 1)"));
  report->add_option("--out-dir", out_dir, "Output directory")->required();

  CommonOptions serve_opts;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool queue = false;
  auto* serve = app.add_subcommand("serve", "Serve the planning API over HTTP");
  add_common(serve, serve_opts);
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_flag("--queue", queue, "Queue requests when all slots are busy instead of 409");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts, conditions, out);
    if (*report) return cmd_report(results, q, out_dir);
    if (*serve) return cmd_serve(serve_opts, host, port, queue);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
