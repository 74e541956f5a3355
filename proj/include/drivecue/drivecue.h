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

// C interface to the drivecue library. All functions return a dc_status;
// on failure dc_last_error() describes the problem for the calling thread.
// Strings returned through dc_string handles are UTF-8 and owned by the
// handle.

#ifndef DRIVECUE_DRIVECUE_H_
#define DRIVECUE_DRIVECUE_H_

#include <stddef.h>

#if defined(DRIVECUE_BUILDING)
#define DC_API __attribute__((visibility("default")))
#else
#define DC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dc_status {
  DC_OK = 0,
  DC_ERR_INVALID_ARGUMENT = 1,
  DC_ERR_IO = 2,
  DC_ERR_SCHEMA = 3,
  DC_ERR_PARSE = 4,
  DC_ERR_TRANSPORT = 5,
  DC_ERR_AUTH = 6,
  DC_ERR_HTTP_STATUS = 7,
  DC_ERR_RESPONSE_SCHEMA = 8,
  DC_ERR_NOT_FOUND = 9,
  DC_ERR_BUSY = 10,
  DC_ERR_INTERNAL = 11
} dc_status;

typedef struct dc_string dc_string;
typedef struct dc_dataset dc_dataset;
typedef struct dc_server dc_server;

DC_API const char* dc_version(void);
DC_API const char* dc_status_name(dc_status status);
// Message for the last failed call on this thread; "" if none.
DC_API const char* dc_last_error(void);

DC_API const char* dc_string_data(const dc_string* s);
DC_API size_t dc_string_size(const dc_string* s);
DC_API void dc_string_free(dc_string* s);

// Scene manifest access.
DC_API dc_status dc_dataset_open(const char* manifest_path, dc_dataset** out);
DC_API size_t dc_dataset_scene_count(const dc_dataset* ds);
// NULL when index is out of range. Valid until dc_dataset_free.
DC_API const char* dc_dataset_scene_id(const dc_dataset* ds, size_t index);
// Scene detail as JSON (frames, ego history, ground truth, bounds).
DC_API dc_status dc_dataset_scene_json(const dc_dataset* ds, const char* scene_id, dc_string** out);
DC_API void dc_dataset_free(dc_dataset* ds);

// Batch evaluation. config_json keys:
//   manifest, output (required); annotations, conditions ("both",
//   "baseline", "instructed"), backend {kind ("mock"|"http"), base_url,
//   api_key, model, timeout_seconds, max_retries, mock_script},
//   use_environment, horizon, dt_seconds, max_in_flight, seed, frames_dir,
//   frames_per_call, reprompt_limit, temperature, max_tokens, oob_margin,
//   max_curvature, injection ("all_stages"|"scene_description_only").
// summary_json may be NULL.
DC_API dc_status dc_run_batch(const char* config_json, dc_string** summary_json);

// Writes tables, failure listings and overlays for a results log.
DC_API dc_status dc_report(const char* results_path, double q, const char* out_dir,
                           dc_string** summary_json);

// HTTP service. config_json takes the run keys (without output/conditions)
// plus queue and cors_origin.
DC_API dc_status dc_server_create(const char* config_json, dc_server** out);
// port 0 picks a free port; the bound port is stored in *bound_port.
DC_API dc_status dc_server_bind(dc_server* server, const char* host, int port, int* bound_port);
// Blocks until dc_server_stop is called from another thread.
DC_API dc_status dc_server_listen(dc_server* server);
// Returns once a concurrent dc_server_listen is accepting connections.
DC_API void dc_server_wait_ready(dc_server* server);
DC_API void dc_server_stop(dc_server* server);
DC_API void dc_server_free(dc_server* server);

// Integrates n (speed, curvature) steps; out_xy receives 2*n doubles.
DC_API dc_status dc_integrate(const double* speeds, const double* curvatures, size_t n, double dt,
                              double* out_xy);
// Mean Euclidean distance between two n-point polylines given as 2*n doubles.
DC_API dc_status dc_ade(const double* a_xy, const double* b_xy, size_t n, double* out);
// Parses a model reply into horizon speeds and curvatures. tier and
// clamp_count may be NULL.
DC_API dc_status dc_parse_trajectory(const char* text, size_t horizon, double* speeds,
                                     double* curvatures, int* tier, size_t* clamp_count);
// "98.7%"-style relative improvement; buf receives a NUL-terminated string.
DC_API dc_status dc_improvement_percent(double baseline, double value, char* buf, size_t buf_size);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // DRIVECUE_DRIVECUE_H_
