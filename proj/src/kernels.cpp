#include "ntt/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ntt::kernels {

void Gauss4Batch::clear() {
  for (auto& e : eta) e.clear();
  for (auto& s : sinv) s.clear();
  log_norm.clear();
}

void Gauss4Batch::push_back(const Eigen::Vector4d& eta_v,
                            const Eigen::Matrix4d& s_inv, double log_det_s) {
  for (int i = 0; i < 4; ++i) eta[i].push_back(eta_v(i));
  int k = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      sinv[k++].push_back(s_inv(i, j));
    }
  }
  constexpr double k4Log2Pi = 4.0 * 1.8378770664093454835606594728112;
  log_norm.push_back(-0.5 * (k4Log2Pi + log_det_s));
}

void gauss4_logpdf_batch_scalar(const Gauss4Batch& b, const double z[4],
                                double* out) {
  const std::size_t n = b.size();
  for (std::size_t v = 0; v < n; ++v) {
    const double d0 = z[0] - b.eta[0][v];
    const double d1 = z[1] - b.eta[1][v];
    const double d2 = z[2] - b.eta[2][v];
    const double d3 = z[3] - b.eta[3][v];
    // Same association order as the SIMD variant so results match bit-wise
    // apart from lane-independent rounding.
    const double diag = ((b.sinv[0][v] * (d0 * d0) + b.sinv[4][v] * (d1 * d1)) +
                         (b.sinv[7][v] * (d2 * d2) + b.sinv[9][v] * (d3 * d3)));
    const double off =
        ((b.sinv[1][v] * (d0 * d1) + b.sinv[2][v] * (d0 * d2)) +
         (b.sinv[3][v] * (d0 * d3) + b.sinv[5][v] * (d1 * d2))) +
        (b.sinv[6][v] * (d1 * d3) + b.sinv[8][v] * (d2 * d3));
    out[v] = b.log_norm[v] - 0.5 * (diag + 2.0 * off);
  }
}

namespace {

Backend pick_default() {
  if (avx2_available()) return Backend::avx2;
  if (neon_available()) return Backend::neon;
  return Backend::scalar;
}

Backend g_backend = pick_default();

}  // namespace

Backend active_backend() { return g_backend; }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
    default:
      return "scalar";
  }
}

void force_backend(Backend b) {
  if ((b == Backend::avx2 && !avx2_available()) ||
      (b == Backend::neon && !neon_available())) {
    throw std::runtime_error(std::string(backend_name(b)) +
                             " backend requested but not supported here");
  }
  g_backend = b;
}

void gauss4_logpdf_batch(const Gauss4Batch& batch, const double z[4],
                         double* out) {
  switch (g_backend) {
    case Backend::avx2:
      gauss4_logpdf_batch_avx2(batch, z, out);
      break;
    case Backend::neon:
      gauss4_logpdf_batch_neon(batch, z, out);
      break;
    default:
      gauss4_logpdf_batch_scalar(batch, z, out);
  }
}

double logsumexp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;  // empty, all -inf, or a stray +inf
  double acc = 0.0;
  for (double x : xs) {
    if (x == -std::numeric_limits<double>::infinity()) continue;
    acc += std::exp(x - hi);
  }
  return hi + std::log(acc);
}

}  // namespace ntt::kernels
