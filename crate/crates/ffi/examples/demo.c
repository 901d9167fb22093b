/* Build: cargo build -p trngbench-ffi --release
 *        cc demo.c -I../include ../../../target/release/libtrngbench_ffi.a -lpthread -ldl -lm -o demo
 */
#include <stdio.h>
#include <stdint.h>

#include "trngbench.h"

int main(void) {
    TrngDevice *dev = NULL;
    if (trng_device_new_simulated("intel", 42, &dev) != TRNG_STATUS_OK) {
        fprintf(stderr, "open failed: %s\n", trng_last_error_message());
        return 1;
    }

    uint8_t buf[4096];
    size_t len = 0;
    double us = 0.0;
    if (trng_device_get_random(dev, 1024, buf, sizeof buf, &len, &us) != TRNG_STATUS_OK) {
        fprintf(stderr, "draw failed: %s\n", trng_last_error_message());
        trng_device_free(dev);
        return 2;
    }
    printf("got %zu bytes in %.0f us (%.1f B/s)\n", len, us, len * 1e6 / us);

    TrngQualityReport report;
    if (trng_analyze(buf, len, &report) == TRNG_STATUS_OK) {
        printf("entropy %.4f bits/byte, chi-square exceedance %.4f\n",
               report.byte_level.entropy, report.byte_level.chi_square_exceed_prob);
    }
    trng_device_free(dev);
    return 0;
}
