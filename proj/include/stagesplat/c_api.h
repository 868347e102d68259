/* C interface to the stagesplat library. All functions returning int return
 * an ss_status; on failure ss_last_error() describes the problem (per
 * thread, valid until the next failing call on that thread). */
#ifndef STAGESPLAT_C_API_H
#define STAGESPLAT_C_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(STAGESPLAT_BUILDING_LIBRARY)
#define SS_API __attribute__((visibility("default")))
#else
#define SS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
  SS_OK = 0,
  SS_ERR_RUNTIME = 1,
  SS_ERR_VALIDATION = 2,
  SS_ERR_IO = 3,
  SS_ERR_ARGUMENT = 4
} ss_status;

typedef struct ss_scene ss_scene;
typedef struct ss_cloud ss_cloud;
typedef struct ss_config ss_config;

typedef void (*ss_log_fn)(const char* message, void* user);

SS_API const char* ss_version(void);
SS_API const char* ss_last_error(void);

/* Scene specs */
SS_API int ss_scene_load(const char* path, ss_scene** out);
SS_API int ss_scene_parse(const char* json_text, ss_scene** out);
SS_API void ss_scene_free(ss_scene* scene);
SS_API int ss_scene_object_count(const ss_scene* scene, size_t* out);
SS_API int ss_scene_edge_count(const ss_scene* scene, size_t* out);
SS_API int ss_scene_warning_count(const ss_scene* scene, size_t* out);
/* Returns NULL when the index is out of range. */
SS_API const char* ss_scene_warning(const ss_scene* scene, size_t index);

/* Gaussian clouds */
SS_API int ss_cloud_assemble(const ss_scene* scene, size_t points_per_object, uint64_t seed, ss_cloud** out);
SS_API int ss_cloud_load_ply(const char* path, ss_cloud** out);
/* object may be NULL to export every object. */
SS_API int ss_cloud_save_ply(const ss_cloud* cloud, const char* object, const char* path);
SS_API int ss_cloud_size(const ss_cloud* cloud, size_t* out);
SS_API int ss_cloud_object_count(const ss_cloud* cloud, size_t* out);
SS_API void ss_cloud_free(ss_cloud* cloud);

/* Run configuration. Overrides take a key (dotted for nested groups, e.g.
 * "camera.fov_y_deg") and a JSON literal; bare words are taken as strings. */
SS_API int ss_config_new(ss_config** out);
SS_API int ss_config_load(const char* path, ss_config** out);
SS_API int ss_config_set(ss_config* config, const char* key, const char* json_value);
/* Resolved configuration as JSON; the string lives until the next call on
 * this config. */
SS_API const char* ss_config_json(ss_config* config);
SS_API void ss_config_free(ss_config* config);

SS_API int ss_run(const ss_config* config, ss_log_fn log, void* user);
/* heuristics: comma-separated names. Writes compare.csv and summary.csv. */
SS_API int ss_compare(const ss_config* config, const char* heuristics, ss_log_fn log, void* user);

typedef struct ss_render_options {
  double azimuth;
  double elevation;
  double radius; /* 0 fits the cloud */
  int width;
  int height;
  double fov_y_deg;
  double background;
  int turntable; /* nonzero: 36 frames at 10 degree steps, output is a directory */
  const char* object; /* NULL renders every object */
} ss_render_options;

SS_API void ss_render_options_default(ss_render_options* options);
SS_API int ss_render(const char* input, const char* output, const ss_render_options* options, size_t* frames_written);

#ifdef __cplusplus
}
#endif

#endif
