// NEON variant of the batched 4-D Gaussian log-density, two components per
// iteration. Mirrors the scalar kernel's operation order; no fused ops.

#include "ntt/kernels.hpp"

#include <stdexcept>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace ntt::kernels {

#if defined(__aarch64__)

bool neon_available() { return true; }

void gauss4_logpdf_batch_neon(const Gauss4Batch& b, const double z[4],
                              double* out) {
  const std::size_t n = b.size();
  const float64x2_t z0 = vdupq_n_f64(z[0]);
  const float64x2_t z1 = vdupq_n_f64(z[1]);
  const float64x2_t z2 = vdupq_n_f64(z[2]);
  const float64x2_t z3 = vdupq_n_f64(z[3]);
  const float64x2_t half = vdupq_n_f64(0.5);
  const float64x2_t two = vdupq_n_f64(2.0);

  std::size_t v = 0;
  for (; v + 2 <= n; v += 2) {
    const float64x2_t d0 = vsubq_f64(z0, vld1q_f64(&b.eta[0][v]));
    const float64x2_t d1 = vsubq_f64(z1, vld1q_f64(&b.eta[1][v]));
    const float64x2_t d2 = vsubq_f64(z2, vld1q_f64(&b.eta[2][v]));
    const float64x2_t d3 = vsubq_f64(z3, vld1q_f64(&b.eta[3][v]));

    const float64x2_t s0 = vld1q_f64(&b.sinv[0][v]);
    const float64x2_t s1 = vld1q_f64(&b.sinv[1][v]);
    const float64x2_t s2 = vld1q_f64(&b.sinv[2][v]);
    const float64x2_t s3 = vld1q_f64(&b.sinv[3][v]);
    const float64x2_t s4 = vld1q_f64(&b.sinv[4][v]);
    const float64x2_t s5 = vld1q_f64(&b.sinv[5][v]);
    const float64x2_t s6 = vld1q_f64(&b.sinv[6][v]);
    const float64x2_t s7 = vld1q_f64(&b.sinv[7][v]);
    const float64x2_t s8 = vld1q_f64(&b.sinv[8][v]);
    const float64x2_t s9 = vld1q_f64(&b.sinv[9][v]);

    const float64x2_t diag =
        vaddq_f64(vaddq_f64(vmulq_f64(s0, vmulq_f64(d0, d0)),
                            vmulq_f64(s4, vmulq_f64(d1, d1))),
                  vaddq_f64(vmulq_f64(s7, vmulq_f64(d2, d2)),
                            vmulq_f64(s9, vmulq_f64(d3, d3))));
    const float64x2_t off = vaddq_f64(
        vaddq_f64(vaddq_f64(vmulq_f64(s1, vmulq_f64(d0, d1)),
                            vmulq_f64(s2, vmulq_f64(d0, d2))),
                  vaddq_f64(vmulq_f64(s3, vmulq_f64(d0, d3)),
                            vmulq_f64(s5, vmulq_f64(d1, d2)))),
        vaddq_f64(vmulq_f64(s6, vmulq_f64(d1, d3)),
                  vmulq_f64(s8, vmulq_f64(d2, d3))));

    const float64x2_t quad = vaddq_f64(diag, vmulq_f64(two, off));
    const float64x2_t res =
        vsubq_f64(vld1q_f64(&b.log_norm[v]), vmulq_f64(half, quad));
    vst1q_f64(&out[v], res);
  }

  for (; v < n; ++v) {
    const double d0 = z[0] - b.eta[0][v];
    const double d1 = z[1] - b.eta[1][v];
    const double d2 = z[2] - b.eta[2][v];
    const double d3 = z[3] - b.eta[3][v];
    const double diag = ((b.sinv[0][v] * (d0 * d0) + b.sinv[4][v] * (d1 * d1)) +
                         (b.sinv[7][v] * (d2 * d2) + b.sinv[9][v] * (d3 * d3)));
    const double off =
        ((b.sinv[1][v] * (d0 * d1) + b.sinv[2][v] * (d0 * d2)) +
         (b.sinv[3][v] * (d0 * d3) + b.sinv[5][v] * (d1 * d2))) +
        (b.sinv[6][v] * (d1 * d3) + b.sinv[8][v] * (d2 * d3));
    out[v] = b.log_norm[v] - 0.5 * (diag + 2.0 * off);
  }
}

#else

bool neon_available() { return false; }

void gauss4_logpdf_batch_neon(const Gauss4Batch&, const double[4], double*) {
  throw std::runtime_error("neon kernel not built for this architecture");
}

#endif

}  // namespace ntt::kernels
