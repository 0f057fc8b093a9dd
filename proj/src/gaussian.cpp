#include "ntt/gaussian.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ntt {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string("non-finite values in ") + what);
  }
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string("non-finite values in ") + what);
  }
}

}  // namespace

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& a,
                                                 const char* what) {
  const auto d = a.rows();
  if (d == 0 || a.cols() != d) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;

  const double scale = std::max(a.trace() / static_cast<double>(d), 1.0);
  for (double jitter = 1e-12; jitter <= 1e-6 * scale; jitter *= 100.0) {
    Eigen::MatrixXd bumped = a;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt;
  }
  std::ostringstream msg;
  msg << what << ": not positive definite even after diagonal jitter\n" << a;
  throw std::runtime_error(msg.str());
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size() ||
      cov.cols() != x.size()) {
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  }
  require_finite(x, "mvn_logpdf x");
  require_finite(mean, "mvn_logpdf mean");
  require_finite(cov, "mvn_logpdf cov");

  const auto llt = cholesky_with_jitter(cov, "mvn_logpdf cov");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd y = l.triangularView<Eigen::Lower>().solve(x - mean);
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det +
                 y.squaredNorm());
}

GaussianComponent predict_component(const GaussianComponent& c,
                                    const Eigen::MatrixXd& f,
                                    const Eigen::MatrixXd& q, double p_s) {
  const auto d = c.mean.size();
  if (f.rows() != d || f.cols() != d || q.rows() != d || q.cols() != d ||
      c.cov.rows() != d || c.cov.cols() != d) {
    throw std::invalid_argument("predict_component: dimension mismatch");
  }
  if (p_s < 0.0 || p_s > 1.0) {
    throw std::invalid_argument("predict_component: p_s outside [0,1]");
  }
  GaussianComponent out;
  out.weight = p_s * c.weight;
  out.mean = f * c.mean;
  out.cov = symmetrize(q + f * c.cov * f.transpose());
  return out;
}

UpdateResult update_component(const GaussianComponent& c,
                              const Eigen::VectorXd& z,
                              const Eigen::MatrixXd& h,
                              const Eigen::MatrixXd& r) {
  const auto dx = c.mean.size();
  const auto dz = z.size();
  if (h.rows() != dz || h.cols() != dx || r.rows() != dz || r.cols() != dz ||
      c.cov.rows() != dx || c.cov.cols() != dx) {
    throw std::invalid_argument("update_component: dimension mismatch");
  }
  require_finite(z, "update_component z");

  const Eigen::VectorXd eta = h * c.mean;
  const Eigen::MatrixXd s = symmetrize(r + h * c.cov * h.transpose());
  const auto llt = cholesky_with_jitter(s, "update_component innovation cov");

  const Eigen::MatrixXd k = llt.solve(h * c.cov).transpose();  // P H^T S^-1

  UpdateResult out;
  out.component.weight = c.weight;
  out.component.mean = c.mean + k * (z - eta);
  // Joseph form keeps P positive semi-definite under roundoff.
  const Eigen::MatrixXd ikh =
      Eigen::MatrixXd::Identity(dx, dx) - k * h;
  out.component.cov =
      symmetrize(ikh * c.cov * ikh.transpose() + k * r * k.transpose());

  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd y = l.triangularView<Eigen::Lower>().solve(z - eta);
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  out.log_likelihood = -0.5 * (static_cast<double>(dz) * kLog2Pi + log_det +
                               y.squaredNorm());
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> gaussian_product_marginal(
    const Eigen::MatrixXd& m, const Eigen::MatrixXd& p1,
    const Eigen::VectorXd& m2, const Eigen::MatrixXd& p2) {
  if (m.cols() != m2.size() || p1.rows() != m.rows() || p1.cols() != m.rows() ||
      p2.rows() != m2.size() || p2.cols() != m2.size()) {
    throw std::invalid_argument("gaussian_product_marginal: dimension mismatch");
  }
  return {m * m2, symmetrize(p1 + m * p2 * m.transpose())};
}

}  // namespace ntt
