/* Copyright 2026 The hginet-desk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HGI_HGI_H_
#define HGI_HGI_H_

#include <stddef.h>
#include <stdint.h>

#if defined(HGI_BUILDING_LIBRARY)
#define HGI_API __attribute__((visibility("default")))
#else
#define HGI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes for the command-line tool. */
typedef enum hgi_status {
  HGI_OK = 0,
  HGI_ERR_USAGE = 1,   /* bad arguments, configuration or contract */
  HGI_ERR_DATA = 2,    /* unreadable, malformed or mismatched data */
  HGI_ERR_NUMERIC = 3  /* non-finite values during training */
} hgi_status;

typedef struct hgi_model hgi_model;

typedef struct hgi_metric_report {
  double s_measure;
  double weighted_f;
  double mean_e;
  double mae;
} hgi_metric_report;

typedef struct hgi_synth_options {
  size_t size;
  size_t n_train;
  size_t n_val;
  size_t min_objects;
  size_t max_objects;
  double contrast;
  uint64_t seed;
} hgi_synth_options;

HGI_API const char* hgi_version(void);
/* Message of the last failed call on this thread; "" after success. */
HGI_API const char* hgi_last_error(void);
/* 0 trace, 1 debug, 2 info, 3 warn, 4 error, 6 off. */
HGI_API hgi_status hgi_set_log_level(int level);

HGI_API void hgi_synth_defaults(hgi_synth_options* opt);
HGI_API hgi_status hgi_synth(const char* out_dir, const hgi_synth_options* opt);

/* config_path may be NULL for the desk profile; seed overrides the model
 * seed when non-NULL. */
HGI_API hgi_status hgi_train(const char* config_path, const char* data_dir,
                             const char* out_dir, const uint64_t* seed);

HGI_API hgi_status hgi_infer(const char* checkpoint, const char* const* inputs,
                             size_t n_inputs, const char* out_dir, size_t jobs);

/* Writes the metric CSV to csv_path, or to stdout when it is NULL. The
 * dataset mean is stored in *mean when non-NULL. */
HGI_API hgi_status hgi_eval(const char* pred_dir, const char* gt_dir,
                            const char* csv_path, size_t jobs,
                            hgi_metric_report* mean);

HGI_API hgi_status hgi_golden_regen(const char* dir);
/* HGI_ERR_DATA when any output differs; the message names the files. */
HGI_API hgi_status hgi_golden_verify(const char* dir);

HGI_API hgi_status hgi_model_load(const char* checkpoint, hgi_model** out);
HGI_API void hgi_model_free(hgi_model* model);
HGI_API hgi_status hgi_model_input_size(const hgi_model* model, size_t* height,
                                        size_t* width);
/* image: 3×height×width planes in [0, 1]; out: height×width map. */
HGI_API hgi_status hgi_model_predict(const hgi_model* model, const double* image,
                                     size_t height, size_t width, double* out);

/* pred in [0, 1], gt binary, both height×width row-major. */
HGI_API hgi_status hgi_metrics(const double* pred, const double* gt, size_t height,
                               size_t width, hgi_metric_report* out);

#ifdef __cplusplus
}
#endif

#endif /* HGI_HGI_H_ */
