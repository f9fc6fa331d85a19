/* Copyright 2026 The collapse-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of the collapse simulator. Handles are opaque; every call
 * returns a status code and, on failure, leaves a message readable through
 * collapse_last_error() on the calling thread. */

#ifndef COLLAPSE_COLLAPSE_H
#define COLLAPSE_COLLAPSE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum collapse_status {
    COLLAPSE_OK = 0,
    COLLAPSE_VERIFY_FAILED = 1,   /* run finished, a check did not pass */
    COLLAPSE_CONFIG_ERROR = 2,    /* config rejected; see collapse_last_error_field() */
    COLLAPSE_BLOWUP = 3,          /* non-finite values during integration */
    COLLAPSE_INVALID_ARGUMENT = 4,
    COLLAPSE_INTERNAL = 5
} collapse_status;

typedef struct collapse_config collapse_config;
typedef struct collapse_report collapse_report;

/* Message and JSON pointer of the last failure on this thread ("" if none). */
const char* collapse_last_error(void);
const char* collapse_last_error_field(void);
const char* collapse_version(void);

collapse_status collapse_config_load(const char* path, collapse_config** out);
collapse_status collapse_config_parse(const char* json_text, collapse_config** out);
void collapse_config_free(collapse_config* config);

/* Overrides; each revalidates and leaves the config unchanged on failure. */
collapse_status collapse_config_set_trials(collapse_config* config, uint64_t trials);
collapse_status collapse_config_set_seed(collapse_config* config, uint64_t seed);
collapse_status collapse_config_set_output_dir(collapse_config* config, const char* dir);
collapse_status collapse_config_set_thin(collapse_config* config, uint64_t thin);
/* 0 selects machine parallelism. */
collapse_status collapse_config_set_threads(collapse_config* config, unsigned threads);
const char* collapse_config_output_dir(const collapse_config* config);

/* Each run writes report.json and timing.json under the output directory.
 * On COLLAPSE_OK and COLLAPSE_VERIFY_FAILED *out holds the report. */
collapse_status collapse_run_simulate(const collapse_config* config, collapse_report** out);
collapse_status collapse_run_simulate_full(const collapse_config* config, collapse_report** out);
collapse_status collapse_run_ruin(const collapse_config* config, collapse_report** out);
collapse_status collapse_run_verify(const collapse_config* config, collapse_report** out);

const char* collapse_report_json(const collapse_report* report);
const char* collapse_report_summary(const collapse_report* report);
int collapse_report_passed(const collapse_report* report);
void collapse_report_free(collapse_report* report);

/* COLLAPSE_OK when the text is a valid report; COLLAPSE_VERIFY_FAILED with
 * the problems in collapse_last_error() otherwise. */
collapse_status collapse_validate_report(const char* json_text);

/* Detector estimate: action Q e U t / hbar and the rate 1 / (action t). */
collapse_status collapse_estimate_zeta(double charge_carriers, double bias_voltage, double duration,
                                       double* action, double* zeta);
/* Exact two-player exit probability for a fixed step on the lattice. */
collapse_status collapse_exit_probability_oracle(double w0, double delta, double sign_bias, double* probability);

#ifdef __cplusplus
}
#endif

#endif /* COLLAPSE_COLLAPSE_H */
