// AVX2 variant of the batched 4-D Gaussian log-density. Four components per
// iteration, one per lane. Multiplies and adds are kept in the same
// association order as the scalar kernel and FMA is deliberately not used,
// so each lane performs the exact scalar instruction sequence.

#include "ntt/kernels.hpp"

#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace ntt::kernels {

#if defined(__x86_64__) || defined(__i386__)

bool avx2_available() { return __builtin_cpu_supports("avx2") != 0; }

void gauss4_logpdf_batch_avx2(const Gauss4Batch& b, const double z[4],
                              double* out) {
  const std::size_t n = b.size();
  const __m256d z0 = _mm256_set1_pd(z[0]);
  const __m256d z1 = _mm256_set1_pd(z[1]);
  const __m256d z2 = _mm256_set1_pd(z[2]);
  const __m256d z3 = _mm256_set1_pd(z[3]);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d two = _mm256_set1_pd(2.0);

  std::size_t v = 0;
  for (; v + 4 <= n; v += 4) {
    const __m256d d0 = _mm256_sub_pd(z0, _mm256_loadu_pd(&b.eta[0][v]));
    const __m256d d1 = _mm256_sub_pd(z1, _mm256_loadu_pd(&b.eta[1][v]));
    const __m256d d2 = _mm256_sub_pd(z2, _mm256_loadu_pd(&b.eta[2][v]));
    const __m256d d3 = _mm256_sub_pd(z3, _mm256_loadu_pd(&b.eta[3][v]));

    const __m256d s0 = _mm256_loadu_pd(&b.sinv[0][v]);
    const __m256d s1 = _mm256_loadu_pd(&b.sinv[1][v]);
    const __m256d s2 = _mm256_loadu_pd(&b.sinv[2][v]);
    const __m256d s3 = _mm256_loadu_pd(&b.sinv[3][v]);
    const __m256d s4 = _mm256_loadu_pd(&b.sinv[4][v]);
    const __m256d s5 = _mm256_loadu_pd(&b.sinv[5][v]);
    const __m256d s6 = _mm256_loadu_pd(&b.sinv[6][v]);
    const __m256d s7 = _mm256_loadu_pd(&b.sinv[7][v]);
    const __m256d s8 = _mm256_loadu_pd(&b.sinv[8][v]);
    const __m256d s9 = _mm256_loadu_pd(&b.sinv[9][v]);

    const __m256d diag = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(s0, _mm256_mul_pd(d0, d0)),
                      _mm256_mul_pd(s4, _mm256_mul_pd(d1, d1))),
        _mm256_add_pd(_mm256_mul_pd(s7, _mm256_mul_pd(d2, d2)),
                      _mm256_mul_pd(s9, _mm256_mul_pd(d3, d3))));
    const __m256d off = _mm256_add_pd(
        _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(s1, _mm256_mul_pd(d0, d1)),
                          _mm256_mul_pd(s2, _mm256_mul_pd(d0, d2))),
            _mm256_add_pd(_mm256_mul_pd(s3, _mm256_mul_pd(d0, d3)),
                          _mm256_mul_pd(s5, _mm256_mul_pd(d1, d2)))),
        _mm256_add_pd(_mm256_mul_pd(s6, _mm256_mul_pd(d1, d3)),
                      _mm256_mul_pd(s8, _mm256_mul_pd(d2, d3))));

    const __m256d quad = _mm256_add_pd(diag, _mm256_mul_pd(two, off));
    const __m256d res = _mm256_sub_pd(_mm256_loadu_pd(&b.log_norm[v]),
                                      _mm256_mul_pd(half, quad));
    _mm256_storeu_pd(&out[v], res);
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

bool avx2_available() { return false; }

void gauss4_logpdf_batch_avx2(const Gauss4Batch&, const double[4], double*) {
  throw std::runtime_error("avx2 kernel not built for this architecture");
}

#endif

}  // namespace ntt::kernels
