/* C interface to the change-detection library: background modeling driven by
 * a flux-tensor motion detector, a patch-classifying network, and the
 * evaluation harness. All functions are thread-safe unless they share a
 * handle; a handle may be used by one thread at a time.
 *
 * Conventions
 *   - Frames are float32 planar RGB in [0,1]: data[(c*height + y)*width + x].
 *   - Masks are one byte per pixel: 0 background, 255 foreground, 170 ignored.
 *   - Functions return CSEG_OK or an error code; cseg_last_error() describes
 *     the most recent failure on the calling thread.
 *   - Returned string and byte buffers are malloc'd; release them with
 *     cseg_free().
 */
#ifndef CSEG_H
#define CSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CSEG_API __declspec(dllexport)
#else
#define CSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cseg_status {
    CSEG_OK = 0,
    CSEG_ERR_INVALID_ARGUMENT = 1,
    CSEG_ERR_IO = 2,
    CSEG_ERR_FORMAT = 3,
    CSEG_ERR_STATE = 4,
    CSEG_ERR_NOT_READY = 5,
    CSEG_ERR_INTERNAL = 6
} cseg_status;

/* Empty string when no failure has occurred on this thread. */
CSEG_API const char* cseg_last_error(void);

CSEG_API const char* cseg_version(void);

CSEG_API void cseg_free(void* buffer);

/* Background-memory interpretation of the motion fraction. */
enum {
    CSEG_BM_MONOTONE_DECREASING = 0, /* high motion -> short memory (default) */
    CSEG_BM_AS_PRINTED = 1           /* high motion -> long memory */
};

/* ---------------------------------------------------------------- images */

typedef struct cseg_image cseg_image;

CSEG_API cseg_status cseg_image_read(const char* path, cseg_image** out);
CSEG_API cseg_status cseg_image_new(int height, int width, const float* planar_rgb,
                                    cseg_image** out);
CSEG_API void cseg_image_free(cseg_image* image);
CSEG_API int cseg_image_height(const cseg_image* image);
CSEG_API int cseg_image_width(const cseg_image* image);
/* Planar RGB, 3*height*width floats, valid until the image is freed. */
CSEG_API const float* cseg_image_data(const cseg_image* image);
/* Format chosen by extension: .png, .ppm or .pgm. */
CSEG_API cseg_status cseg_image_write(const cseg_image* image, const char* path);

CSEG_API cseg_status cseg_mask_write(const uint8_t* mask, int height, int width,
                                     const char* path);
CSEG_API cseg_status cseg_mask_read(const char* path, int* height, int* width,
                                    uint8_t** mask_out);

/* ------------------------------------------------------- background model */

typedef struct cseg_bgmodel cseg_bgmodel;

CSEG_API cseg_status cseg_bgmodel_new(int height, int width, int bm_mode,
                                      double naive_tau, cseg_bgmodel** out);
CSEG_API void cseg_bgmodel_free(cseg_bgmodel* model);
/* Feeds one frame; the frame's size must match the model's. */
CSEG_API cseg_status cseg_bgmodel_step(cseg_bgmodel* model, const cseg_image* frame);
/* Current rendered background; CSEG_ERR_NOT_READY before any frame. */
CSEG_API cseg_status cseg_bgmodel_background(const cseg_bgmodel* model, cseg_image** out);
/* Smoothed motion fraction, memory length and padding radius. Any output
 * pointer may be NULL. */
CSEG_API cseg_status cseg_bgmodel_motion(const cseg_bgmodel* model, double* fs,
                                         double* bm, int* padding);
CSEG_API int cseg_bgmodel_height(const cseg_bgmodel* model);
CSEG_API int cseg_bgmodel_width(const cseg_bgmodel* model);
CSEG_API cseg_status cseg_bgmodel_save(const cseg_bgmodel* model, const char* path);
CSEG_API cseg_status cseg_bgmodel_load(const char* path, cseg_bgmodel** out);

/* ---------------------------------------------------- segmentation model */

typedef struct cseg_model cseg_model;

CSEG_API cseg_status cseg_model_load(const char* path, cseg_model** out);
CSEG_API void cseg_model_free(cseg_model* model);
/* Side length of the square patches the model classifies. */
CSEG_API int cseg_model_input_side(const cseg_model* model);

/* Foreground probability per pixel; scores_out holds height*width floats. */
CSEG_API cseg_status cseg_model_score(const cseg_model* model, const cseg_image* frame,
                                      const cseg_image* background, int threads,
                                      float* scores_out);
/* Scores, median filter (median_kernel <= 1 disables it), then threshold.
 * mask_out holds height*width bytes in {0,255}. */
CSEG_API cseg_status cseg_model_segment(const cseg_model* model, const cseg_image* frame,
                                        const cseg_image* background, float threshold,
                                        int median_kernel, int threads, uint8_t* mask_out);

/* -------------------------------------------------------------- metrics */

typedef struct cseg_confusion {
    uint64_t tp, fp, tn, fn;
} cseg_confusion;

/* Adds the pixel counts of one (prediction, truth) mask pair. Truth bytes
 * of 170 are skipped; a non-255 prediction counts as background. */
CSEG_API cseg_status cseg_confusion_accumulate(const uint8_t* pred, const uint8_t* truth,
                                               size_t count, cseg_confusion* inout);
/* Re, Sp, FPR, FNR, PWC, FM, Pr in that order; NaN when undefined. */
CSEG_API void cseg_metrics(const cseg_confusion* counts, double out[7]);

/* ------------------------------------------------------------ whole runs
 * One call per command-line subcommand. Each options struct has an _init
 * that installs the defaults; unset paths stay NULL. */

typedef struct cseg_build_bg_options {
    const char* frames_dir; /* image frames, processed in name order */
    const char* out_dir;    /* receives bg%06d.png and motion_log.txt */
    int every;              /* write every Nth background (1 = all) */
    int bm_mode;
    double naive_tau;       /* hook threshold for the naive segmenter */
    const char* state_out;  /* optional model-state checkpoint */
    int quiet;
} cseg_build_bg_options;

CSEG_API void cseg_build_bg_options_init(cseg_build_bg_options* opt);
CSEG_API cseg_status cseg_run_build_bg(const cseg_build_bg_options* opt);

typedef struct cseg_train_options {
    const char* root;     /* dataset tree: <root>/<category>/<video>/input,... */
    const char* store;    /* alternative: previously prepared sample store */
    const char* model_out;
    const char* history_out; /* default: model_out path + ".history" */
    const char* store_out;   /* optional: save the prepared samples */
    uint32_t seed;
    int epochs;   /* 10 */
    int batch;    /* 150 */
    double lr;    /* 2.5e-3 */
    int bm_mode;
    double naive_tau;
    int threads;  /* 0 = CSEG_THREADS env or hardware */
    int train_frames_per_video;  /* 150 */
    int val_frames_per_video;    /* 20 */
    int patch_stride;            /* 10: patch grid spacing inside a frame */
    int max_patches_per_frame;   /* 0 = keep all */
    int target_height, target_width; /* resample frames; 0 = native size */
    int quiet;
} cseg_train_options;

CSEG_API void cseg_train_options_init(cseg_train_options* opt);
CSEG_API cseg_status cseg_run_train(const cseg_train_options* opt);

typedef struct cseg_segment_options {
    const char* frames_dir; /* frames of one video, processed in name order */
    const char* model;
    const char* out_dir;    /* receives bin%06d.png */
    float threshold;        /* 0.3 */
    int median;             /* 9 */
    int bm_mode;
    double naive_tau;
    int threads;
    int target_height, target_width; /* network runs at this size; 0 = native */
    int quiet;
} cseg_segment_options;

CSEG_API void cseg_segment_options_init(cseg_segment_options* opt);
CSEG_API cseg_status cseg_run_segment(const cseg_segment_options* opt);

typedef struct cseg_evaluate_options {
    const char* root;  /* dataset tree with groundtruth and temporalROI */
    const char* masks; /* <masks>/<category>/<video>/bin%06d.png */
    const char* report_txt;  /* optional file copies of the reports */
    const char* report_json;
    int quiet;
} cseg_evaluate_options;

CSEG_API void cseg_evaluate_options_init(cseg_evaluate_options* opt);
/* report_out (optional) receives the tabular report. */
CSEG_API cseg_status cseg_run_evaluate(const cseg_evaluate_options* opt, char** report_out);

typedef struct cseg_bench_options {
    const char* model; /* NULL benches a freshly initialized network */
    int height, width; /* 240 x 320 */
    int frames;        /* per timed pass, 50 */
    int repeats;       /* 3 */
    int threads;
    uint32_t seed;
} cseg_bench_options;

CSEG_API void cseg_bench_options_init(cseg_bench_options* opt);
/* fps_out (optional): mean background-model-only, network-only and full
 * pipeline frame rates. report_out (optional): text with per-repeat rates. */
CSEG_API cseg_status cseg_run_bench(const cseg_bench_options* opt, double fps_out[3],
                                    char** report_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CSEG_H */
