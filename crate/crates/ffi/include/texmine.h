#ifndef TEXMINE_H
#define TEXMINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TmStatus {
  TM_STATUS_OK = 0,
  TM_STATUS_NULL_POINTER = 1,
  TM_STATUS_INVALID_ARGUMENT = 2,
  TM_STATUS_UNSUPPORTED_FORMAT = 3,
  TM_STATUS_CORRUPT_IMAGE = 4,
  TM_STATUS_IMAGE_TOO_SMALL = 5,
  TM_STATUS_OUT_OF_RANGE = 6,
  TM_STATUS_BUFFER_TOO_SMALL = 7,
  TM_STATUS_IO = 8,
  TM_STATUS_PANIC = 9,
  TM_STATUS_INTERNAL = 10,
} TmStatus;

/**
 * Output maps of a material.
 */
typedef enum TmMapKind {
  TM_MAP_KIND_ALBEDO = 0,
  TM_MAP_KIND_ROUGHNESS = 1,
  TM_MAP_KIND_METALLIC = 2,
  TM_MAP_KIND_HEIGHT = 3,
  TM_MAP_KIND_NORMAL = 4,
  TM_MAP_KIND_TRANSMISSION = 5,
} TmMapKind;

/**
 * A generated material bundle.
 */
typedef struct TmMaterial TmMaterial;

/**
 * Decoded image, values in [0,1].
 */
typedef struct TmRaster TmRaster;

/**
 * Regions found by `tm_detect`, with their crops.
 */
typedef struct TmRegionList TmRegionList;

/**
 * Detection parameters. Start from `tm_detect_params_default`.
 */
typedef struct TmDetectParams {
  size_t cell_px;
  size_t bins;
  double threshold;
  size_t min_cells;
  size_t max_cells;
  double flat_std;
  double overlap_iou;
  /**
   * Images are downscaled so their longest edge is at most this.
   */
  size_t resize_long_edge;
  size_t min_crop_px;
  size_t max_crop_px;
} TmDetectParams;

/**
 * A detected region in pixels of the analyzed (resized) image.
 */
typedef struct TmRegion {
  size_t x;
  size_t y;
  size_t w;
  size_t h;
  double max_pair_distance;
} TmRegion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tm_version(void);

/**
 * Message for the last failed call on this thread, or "" after a success.
 * Valid until the next call into the library on the same thread.
 */
const char *tm_last_error_message(void);

/**
 * Decodes a PNG or JPEG held in memory.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum TmStatus tm_raster_decode(const uint8_t *data, size_t len, struct TmRaster **out);

/**
 * Wraps interleaved 8-bit RGB pixels (`width * height * 3` bytes).
 *
 * # Safety
 * `data` must point to `width * height * 3` readable bytes; `out` must be writable.
 */
enum TmStatus tm_raster_from_rgb8(const uint8_t *data,
                                  size_t width,
                                  size_t height,
                                  struct TmRaster **out);

/**
 * # Safety
 * `r` must be null or a live raster handle.
 */
size_t tm_raster_width(const struct TmRaster *r);

/**
 * # Safety
 * `r` must be null or a live raster handle.
 */
size_t tm_raster_height(const struct TmRaster *r);

/**
 * # Safety
 * `r` must be null or a handle from this library not freed before.
 */
void tm_raster_free(struct TmRaster *r);

/**
 * Defaults used by the `texmine` command line tool.
 */
struct TmDetectParams tm_detect_params_default(void);

/**
 * Detects uniform regions and cuts their crops exactly as one
 * image of `texmine extract` is processed.
 *
 * # Safety
 * `raster` and `params` must be live, `out` writable.
 */
enum TmStatus tm_detect(const struct TmRaster *raster,
                        const struct TmDetectParams *params,
                        struct TmRegionList **out);

/**
 * # Safety
 * `list` must be null or a live region list.
 */
size_t tm_region_list_len(const struct TmRegionList *list);

/**
 * # Safety
 * `list` must be live and `out` writable.
 */
enum TmStatus tm_region_list_get(const struct TmRegionList *list,
                                 size_t index,
                                 struct TmRegion *out);

/**
 * # Safety
 * `list` must be null or a handle from this library not freed before.
 */
void tm_region_list_free(struct TmRegionList *list);

/**
 * Generates the material for region `index` of `list` with `seed`.
 *
 * # Safety
 * `list` must be live and `out` writable.
 */
enum TmStatus tm_material_generate(const struct TmRegionList *list,
                                   size_t index,
                                   uint64_t seed,
                                   struct TmMaterial **out);

/**
 * # Safety
 * `m` must be null or a live material.
 */
size_t tm_material_width(const struct TmMaterial *m);

/**
 * # Safety
 * `m` must be null or a live material.
 */
size_t tm_material_height(const struct TmMaterial *m);

/**
 * Number of floats in a map: width * height * (3 for albedo and normal, else 1).
 *
 * # Safety
 * `m` must be null or a live material.
 */
size_t tm_material_map_len(const struct TmMaterial *m, enum TmMapKind kind);

/**
 * Copies a map, row-major and channel-interleaved, into `buf`.
 *
 * # Safety
 * `m` must be live and `buf` must have room for `len` floats.
 */
enum TmStatus tm_material_map(const struct TmMaterial *m,
                              enum TmMapKind kind,
                              float *buf,
                              size_t len);

/**
 * The material's generation recipe as JSON. Free with `tm_string_free`.
 *
 * # Safety
 * `m` must be live and `out` writable.
 */
enum TmStatus tm_material_recipes_json(const struct TmMaterial *m, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library not freed before.
 */
void tm_string_free(char *s);

/**
 * # Safety
 * `m` must be null or a handle from this library not freed before.
 */
void tm_material_free(struct TmMaterial *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEXMINE_H */
