#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

// Batched evaluation of 4-D Gaussian log-densities in measurement space.
// This is the hot loop of the update step: every measurement is scored
// against every mixture component of every type. Components are stored
// structure-of-arrays so the SIMD variant can process four per iteration.

namespace ntt::kernels {

// Packed upper triangle of the 4x4 inverse innovation covariance, row-major:
// (0,0) (0,1) (0,2) (0,3) (1,1) (1,2) (1,3) (2,2) (2,3) (3,3).
inline constexpr int kPackedSize = 10;

struct Gauss4Batch {
  std::vector<double> eta[4];              // predicted measurement mean
  std::vector<double> sinv[kPackedSize];   // packed S^-1
  std::vector<double> log_norm;            // -0.5*(4 log 2pi + log det S)

  std::size_t size() const { return log_norm.size(); }
  bool empty() const { return log_norm.empty(); }
  void clear();
  void push_back(const Eigen::Vector4d& eta_v, const Eigen::Matrix4d& s_inv,
                 double log_det_s);
};

enum class Backend { scalar, avx2, neon };

// Backend picked at load time from CPU capabilities; tests and the CLI can
// pin it to compare variants. Throws if the requested backend is missing.
Backend active_backend();
const char* backend_name(Backend b);
void force_backend(Backend b);
bool avx2_available();
bool neon_available();

// out[v] = log N(z; eta_v, S_v) for every component in the batch.
// `out` must have room for batch.size() doubles.
void gauss4_logpdf_batch(const Gauss4Batch& batch, const double z[4],
                         double* out);

// Direct entry points for equivalence testing.
void gauss4_logpdf_batch_scalar(const Gauss4Batch& batch, const double z[4],
                                double* out);
void gauss4_logpdf_batch_avx2(const Gauss4Batch& batch, const double z[4],
                              double* out);
void gauss4_logpdf_batch_neon(const Gauss4Batch& batch, const double z[4],
                              double* out);

// log(sum exp(x_v)) with the usual max shift; -inf entries are skipped so a
// sum over an empty or fully impossible set stays exactly -inf.
double logsumexp(std::span<const double> xs);

}  // namespace ntt::kernels
