#pragma once

#include <Eigen/Dense>
#include <utility>

namespace ntt {

// One weighted Gaussian term of an intensity function. The weight is an
// expected-count contribution, not a probability, so it can exceed 1.
struct GaussianComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Cholesky factorization with diagonal jitter escalation: tries the matrix
// as given, then adds 1e-12 .. 1e-6*trace/d to the diagonal before giving up.
// Throws std::runtime_error naming `what` if the matrix never factorizes.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& a,
                                                 const char* what);

// Forces exact symmetry; covariance updates accumulate asymmetric noise.
inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& p) {
  return 0.5 * (p + p.transpose());
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov);

// m' = F m, P' = Q + F P F^T, w' = p_s * w
GaussianComponent predict_component(const GaussianComponent& c,
                                    const Eigen::MatrixXd& f,
                                    const Eigen::MatrixXd& q, double p_s);

struct UpdateResult {
  GaussianComponent component;  // weight copied from input, caller rescales
  double log_likelihood;        // log N(z; H m, R + H P H^T)
};

UpdateResult update_component(const GaussianComponent& c,
                              const Eigen::VectorXd& z,
                              const Eigen::MatrixXd& h,
                              const Eigen::MatrixXd& r);

// Marginal of int N(y; M u, P1) N(u; m2, P2) du = N(y; M m2, P1 + M P2 M^T).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> gaussian_product_marginal(
    const Eigen::MatrixXd& m, const Eigen::MatrixXd& p1,
    const Eigen::VectorXd& m2, const Eigen::MatrixXd& p2);

}  // namespace ntt
