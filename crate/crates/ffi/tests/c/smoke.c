/* Links against the static library and exercises the C API end to end. */
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>

#include "texmine.h"

int main(void) {
    const size_t w = 480, h = 480;
    uint8_t *px = malloc(w * h * 3);
    uint32_t s = 7;
    for (size_t i = 0; i < w * h * 3; i++) {
        s = s * 1664525u + 1013904223u;
        px[i] = (uint8_t)(100 + (s >> 27));
    }

    TmRaster *r = NULL;
    if (tm_raster_from_rgb8(px, w, h, &r) != TM_STATUS_OK) return 1;
    free(px);

    TmDetectParams p = tm_detect_params_default();
    TmRegionList *list = NULL;
    if (tm_detect(r, &p, &list) != TM_STATUS_OK) return 2;
    size_t n = tm_region_list_len(list);
    if (n == 0) return 3;

    TmRegion region;
    if (tm_region_list_get(list, 0, &region) != TM_STATUS_OK) return 4;

    TmMaterial *m = NULL;
    if (tm_material_generate(list, 0, 42, &m) != TM_STATUS_OK) return 5;
    size_t len = tm_material_map_len(m, TM_MAP_KIND_NORMAL);
    float *buf = malloc(len * sizeof(float));
    if (tm_material_map(m, TM_MAP_KIND_NORMAL, buf, len) != TM_STATUS_OK) return 6;
    free(buf);

    char *json = NULL;
    if (tm_material_recipes_json(m, &json) != TM_STATUS_OK) return 7;
    printf("%s %zu %zu %zu\n", tm_version(), n, region.w, len);
    tm_string_free(json);

    if (tm_region_list_get(list, n, &region) != TM_STATUS_OUT_OF_RANGE) return 8;
    if (tm_last_error_message()[0] == '\0') return 9;

    tm_material_free(m);
    tm_region_list_free(list);
    tm_raster_free(r);
    return 0;
}
