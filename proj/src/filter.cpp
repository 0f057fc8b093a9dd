#include "ntt/filter.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "ntt/kernels.hpp"

namespace ntt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Components of one source intensity projected through one detector channel,
// prepared for bulk log-likelihood evaluation. Uses the batched 4-D kernel
// when the measurement space allows it, otherwise a per-component solve.
class LikelihoodEvaluator {
 public:
  explicit LikelihoodEvaluator(int meas_dim) : dz_(meas_dim) {}

  void add(const Eigen::VectorXd& eta, const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    if (dz_ == 4) {
      const Eigen::Matrix4d s_inv =
          llt.solve(Eigen::MatrixXd::Identity(4, 4));
      batch_.push_back(eta.head<4>(), s_inv, log_det);
    } else {
      eta_.push_back(eta);
      lower_.push_back(l);
      log_det_.push_back(log_det);
    }
    ++count_;
  }

  std::size_t size() const { return count_; }

  void eval(const Eigen::VectorXd& z, double* out) const {
    if (dz_ == 4) {
      kernels::gauss4_logpdf_batch(batch_, z.data(), out);
      return;
    }
    for (std::size_t v = 0; v < count_; ++v) {
      const Eigen::VectorXd y =
          lower_[v].triangularView<Eigen::Lower>().solve(z - eta_[v]);
      out[v] = -0.5 * (dz_ * kLog2Pi + log_det_[v] + y.squaredNorm());
    }
  }

 private:
  int dz_;
  std::size_t count_ = 0;
  kernels::Gauss4Batch batch_;
  std::vector<Eigen::VectorXd> eta_;
  std::vector<Eigen::MatrixXd> lower_;
  std::vector<double> log_det_;
};

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

void FilterConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("FilterConfig: " + msg);
  };
  if (n_types < 1) fail("n_types must be >= 1");
  const auto n = static_cast<std::size_t>(n_types);
  if (types.size() != n) fail("types must have n_types entries");
  if (p_detect.size() != n || h.size() != n || r.size() != n) {
    fail("p_detect/h/r must be n_types x n_types");
  }

  const int dx = int(types[0].f.rows());
  if (dx < 1) fail("state dimension must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = types[i];
    const std::string at = "types[" + std::to_string(i) + "]";
    if (t.f.rows() != dx || t.f.cols() != dx) fail(at + ".f must be d_x x d_x");
    if (t.q.rows() != dx || t.q.cols() != dx) fail(at + ".q must be d_x x d_x");
    if (t.birth_cov.rows() != dx || t.birth_cov.cols() != dx) {
      fail(at + ".birth_cov must be d_x x d_x");
    }
    if (!(t.p_survival >= 0.0 && t.p_survival <= 1.0)) {
      fail(at + ".p_survival outside [0,1]");
    }
    if (!(t.birth_weight >= 0.0) || !std::isfinite(t.birth_weight)) {
      fail(at + ".birth_weight must be finite and nonnegative");
    }
    if (!(t.clutter_rate >= 0.0) || !std::isfinite(t.clutter_rate)) {
      fail(at + ".clutter_rate must be finite and nonnegative");
    }
  }

  int dz = -1;
  for (std::size_t j = 0; j < n; ++j) {
    if (p_detect[j].size() != n || h[j].size() != n || r[j].size() != n) {
      fail("p_detect/h/r must be n_types x n_types");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::string at =
          "[" + std::to_string(j) + "][" + std::to_string(i) + "]";
      const double p = p_detect[j][i];
      if (!(p >= 0.0 && p <= 1.0)) fail("p_detect" + at + " outside [0,1]");
      if (dz < 0) dz = int(h[j][i].rows());
      if (h[j][i].rows() != dz || h[j][i].cols() != dx) {
        fail("h" + at + " must be d_z x d_x");
      }
      if (r[j][i].rows() != dz || r[j][i].cols() != dz) {
        fail("r" + at + " must be d_z x d_z");
      }
    }
  }

  if (!(prune_threshold > 0.0)) fail("prune_threshold must be > 0");
  if (!(merge_threshold > 0.0)) fail("merge_threshold must be > 0");
  if (max_components < 1) fail("max_components must be >= 1");
  if (!(extract_threshold >= 0.0)) fail("extract_threshold must be >= 0");

  bool needs_region = false;
  for (const auto& t : types) needs_region |= t.clutter_rate > 0.0;
  if (needs_region && !(region.volume() > 0.0)) {
    fail("region must have positive volume when clutter is modeled");
  }

  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off = std::max(off, p_detect[j][i]);
    }
    if (n > 1 && p_detect[i][i] <= off) {
      std::cerr << "warning: p_detect[" << i << "][" << i
                << "] does not dominate the confusion probabilities for type "
                << i << "; tracking quality will suffer\n";
    }
  }
}

double FilterConfig::clutter_log_intensity(int type_index,
                                           const Eigen::VectorXd& z) const {
  if (type_index < 0 || type_index >= n_types) {
    throw std::invalid_argument("clutter_log_intensity: type index out of range");
  }
  const double rate = types[type_index].clutter_rate;
  if (rate <= 0.0 || !region.contains(z)) return kNegInf;
  return std::log(rate) - std::log(region.volume());
}

std::vector<GaussianComponent> birth_intensity(
    const std::vector<Eigen::VectorXd>& measurements, const FilterConfig& cfg,
    int type_index) {
  if (type_index < 0 || type_index >= cfg.n_types) {
    throw std::invalid_argument("birth_intensity: type index out of range");
  }
  const auto& tm = cfg.types[type_index];
  if (tm.birth_cov.rows() != 6) {
    throw std::invalid_argument(
        "birth_intensity: measurement-driven birth needs the 6-D state layout");
  }
  std::vector<GaussianComponent> out;
  out.reserve(measurements.size());
  for (const auto& z : measurements) {
    if (z.size() != 4) {
      throw std::invalid_argument(
          "birth_intensity: measurements must be [cx, cy, w, h]");
    }
    GaussianComponent c;
    c.weight = tm.birth_weight;
    c.mean = Eigen::VectorXd::Zero(6);
    c.mean(0) = z(0);
    c.mean(1) = z(1);
    c.mean(4) = z(2);
    c.mean(5) = z(3);
    c.cov = tm.birth_cov;
    out.push_back(std::move(c));
  }
  return out;
}

TypedIntensity predict(const TypedIntensity& prior,
                       const std::vector<GaussianComponent>& births,
                       const FilterConfig& cfg) {
  const int i = prior.type_index;
  if (i < 0 || i >= cfg.n_types) {
    throw std::invalid_argument("predict: type index out of range");
  }
  const auto& tm = cfg.types[i];
  TypedIntensity out;
  out.type_index = i;
  out.components.reserve(births.size() + prior.components.size());
  // Birth components enter the update as-is; only surviving prior
  // components move through the dynamics this frame.
  out.components.insert(out.components.end(), births.begin(), births.end());
  for (const auto& c : prior.components) {
    out.components.push_back(predict_component(c, tm.f, tm.q, tm.p_survival));
  }
  return out;
}

double confusion_clutter_logintensity(
    const Eigen::VectorXd& z, int type_index,
    const std::vector<TypedIntensity>& predicted, const FilterConfig& cfg) {
  if (type_index < 0 || type_index >= cfg.n_types) {
    throw std::invalid_argument(
        "confusion_clutter_logintensity: type index out of range");
  }
  if (predicted.size() != static_cast<std::size_t>(cfg.n_types)) {
    throw std::invalid_argument(
        "confusion_clutter_logintensity: need all N predicted intensities");
  }
  const int dz = int(z.size());
  std::vector<double> terms;
  std::vector<double> lik;
  for (int j = 0; j < cfg.n_types; ++j) {
    if (j == type_index) continue;
    const double p = cfg.p_detect[j][type_index];
    const auto& src = predicted[j];
    if (p <= 0.0 || src.components.empty()) continue;
    const auto& hm = cfg.h[j][type_index];
    const auto& rm = cfg.r[j][type_index];
    LikelihoodEvaluator ev(dz);
    for (const auto& c : src.components) {
      const Eigen::MatrixXd s = symmetrize(rm + hm * c.cov * hm.transpose());
      ev.add(hm * c.mean,
             cholesky_with_jitter(s, "confusion innovation covariance"));
    }
    lik.resize(src.components.size());
    ev.eval(z, lik.data());
    const double log_p = std::log(p);
    for (std::size_t v = 0; v < src.components.size(); ++v) {
      terms.push_back(log_p + log_or_neg_inf(src.components[v].weight) +
                      lik[v]);
    }
  }
  return kernels::logsumexp(terms);
}

TypedIntensity update(const TypedIntensity& predicted_i,
                      const DetectionFrame& frame_i,
                      const std::vector<TypedIntensity>& all_predicted,
                      const FilterConfig& cfg) {
  const int i = predicted_i.type_index;
  if (i < 0 || i >= cfg.n_types) {
    throw std::invalid_argument("update: type index out of range");
  }
  if (frame_i.detector != i) {
    std::ostringstream msg;
    msg << "update: type " << i << " must be updated with detector " << i
        << "'s measurements, got detector " << frame_i.detector;
    throw std::invalid_argument(msg.str());
  }
  if (all_predicted.size() != static_cast<std::size_t>(cfg.n_types)) {
    throw std::invalid_argument("update: need all N predicted intensities");
  }
  for (int j = 0; j < cfg.n_types; ++j) {
    if (all_predicted[j].type_index != j) {
      throw std::invalid_argument(
          "update: predicted intensities must be ordered by type");
    }
  }

  const int dz = cfg.meas_dim();
  const auto& hm = cfg.h[i][i];
  const auto& rm = cfg.r[i][i];
  const double p_dd = cfg.p_detect[i][i];
  const auto& comps = predicted_i.components;
  const std::size_t n = comps.size();
  const auto& zs = frame_i.measurements;

  // Per-component quantities that do not depend on z: predicted measurement,
  // Kalman gain, updated covariance, and the projected density.
  LikelihoodEvaluator own(dz);
  std::vector<Eigen::VectorXd> eta(n);
  std::vector<Eigen::MatrixXd> gain(n), cov_upd(n);
  std::vector<double> log_pw(n);
  const Eigen::MatrixXd ident =
      Eigen::MatrixXd::Identity(cfg.state_dim(), cfg.state_dim());
  for (std::size_t v = 0; v < n; ++v) {
    const auto& c = comps[v];
    eta[v] = hm * c.mean;
    const Eigen::MatrixXd s = symmetrize(rm + hm * c.cov * hm.transpose());
    const auto llt = cholesky_with_jitter(s, "update innovation covariance");
    gain[v] = llt.solve(hm * c.cov).transpose();  // P H^T S^-1
    const Eigen::MatrixXd ikh = ident - gain[v] * hm;
    cov_upd[v] = symmetrize(ikh * c.cov * ikh.transpose() +
                            gain[v] * rm * gain[v].transpose());
    own.add(eta[v], llt);
    log_pw[v] = log_or_neg_inf(p_dd) + log_or_neg_inf(c.weight);
  }

  // Confusion channels: other types' predicted mixtures seen through this
  // detector, weighted by the cross detection probability.
  std::vector<LikelihoodEvaluator> conf;
  std::vector<std::vector<double>> conf_offset;
  for (int j = 0; j < cfg.n_types; ++j) {
    if (j == i) continue;
    const double p = cfg.p_detect[j][i];
    const auto& src = all_predicted[j];
    if (p <= 0.0 || src.components.empty()) continue;
    const auto& hj = cfg.h[j][i];
    const auto& rj = cfg.r[j][i];
    LikelihoodEvaluator ev(dz);
    std::vector<double> offs;
    offs.reserve(src.components.size());
    const double log_p = std::log(p);
    for (const auto& c : src.components) {
      const Eigen::MatrixXd s = symmetrize(rj + hj * c.cov * hj.transpose());
      ev.add(hj * c.mean,
             cholesky_with_jitter(s, "confusion innovation covariance"));
      offs.push_back(log_p + log_or_neg_inf(c.weight));
    }
    conf.push_back(std::move(ev));
    conf_offset.push_back(std::move(offs));
  }

  TypedIntensity out;
  out.type_index = i;
  out.components.reserve((zs.size() + 1) * n);

  for (std::size_t v = 0; v < n; ++v) {
    out.components.push_back(
        {(1.0 - p_dd) * comps[v].weight, comps[v].mean, comps[v].cov});
  }

  std::vector<double> loglik(n);
  std::vector<double> conf_buf, conf_terms, den;
  for (const auto& z : zs) {
    if (z.size() != dz) {
      throw std::invalid_argument("update: measurement dimension mismatch");
    }
    if (n > 0) own.eval(z, loglik.data());

    conf_terms.clear();
    for (std::size_t k = 0; k < conf.size(); ++k) {
      conf_buf.resize(conf[k].size());
      conf[k].eval(z, conf_buf.data());
      for (std::size_t v = 0; v < conf_buf.size(); ++v) {
        conf_terms.push_back(conf_offset[k][v] + conf_buf[v]);
      }
    }
    const double log_ct = kernels::logsumexp(conf_terms);
    const double log_cs = cfg.clutter_log_intensity(i, z);

    den.clear();
    den.push_back(log_cs);
    den.push_back(log_ct);
    for (std::size_t v = 0; v < n; ++v) den.push_back(log_pw[v] + loglik[v]);
    const double log_den = kernels::logsumexp(den);

    for (std::size_t v = 0; v < n; ++v) {
      const double t = log_pw[v] + loglik[v];
      GaussianComponent c;
      c.weight = (t == kNegInf || log_den == kNegInf)
                     ? 0.0
                     : std::exp(t - log_den);
      c.mean = comps[v].mean + gain[v] * (z - eta[v]);
      c.cov = cov_upd[v];
      out.components.push_back(std::move(c));
    }
  }
  return out;
}

TypedIntensity prune_and_merge(const TypedIntensity& intensity,
                               const FilterConfig& cfg) {
  TypedIntensity out;
  out.type_index = intensity.type_index;

  std::vector<const GaussianComponent*> alive;
  for (const auto& c : intensity.components) {
    if (c.weight >= cfg.prune_threshold) alive.push_back(&c);
  }
  if (alive.empty()) return out;

  // The merge test needs each candidate's inverse covariance; factor once.
  std::vector<std::optional<Eigen::LLT<Eigen::MatrixXd>>> fact(alive.size());
  for (std::size_t k = 0; k < alive.size(); ++k) {
    try {
      fact[k] = cholesky_with_jitter(alive[k]->cov, "merge covariance");
    } catch (const std::runtime_error&) {
      std::cerr << "warning: prune_and_merge skipping merge for a component "
                   "with singular covariance\n";
    }
  }

  std::vector<bool> used(alive.size(), false);
  std::size_t remaining = alive.size();
  std::vector<GaussianComponent> merged;
  std::vector<std::size_t> group;
  while (remaining > 0) {
    std::size_t pivot = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (!used[k] && alive[k]->weight > best) {
        best = alive[k]->weight;
        pivot = k;
      }
    }

    group.clear();
    group.push_back(pivot);
    const Eigen::VectorXd& mu = alive[pivot]->mean;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (used[k] || k == pivot || !fact[k]) continue;
      const Eigen::VectorXd d = alive[k]->mean - mu;
      if (d.dot(fact[k]->solve(d)) <= cfg.merge_threshold) group.push_back(k);
    }

    double w_sum = 0.0;
    for (std::size_t k : group) w_sum += alive[k]->weight;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mu.size());
    for (std::size_t k : group) m += alive[k]->weight * alive[k]->mean;
    m /= w_sum;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mu.size(), mu.size());
    for (std::size_t k : group) {
      const Eigen::VectorXd d = m - alive[k]->mean;
      p += alive[k]->weight * (alive[k]->cov + d * d.transpose());
    }
    p /= w_sum;

    merged.push_back({w_sum, std::move(m), symmetrize(p)});
    for (std::size_t k : group) used[k] = true;
    remaining -= group.size();
  }

  if (merged.size() > static_cast<std::size_t>(cfg.max_components)) {
    // Keep the heaviest but preserve emission order among the kept.
    std::vector<std::size_t> order(merged.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return merged[a].weight > merged[b].weight;
    });
    std::vector<bool> keep(merged.size(), false);
    for (int k = 0; k < cfg.max_components; ++k) keep[order[k]] = true;
    std::vector<GaussianComponent> capped;
    capped.reserve(cfg.max_components);
    for (std::size_t k = 0; k < merged.size(); ++k) {
      if (keep[k]) capped.push_back(std::move(merged[k]));
    }
    merged = std::move(capped);
  }

  out.components = std::move(merged);
  return out;
}

std::vector<TypedEstimate> extract_states(const TypedIntensity& intensity,
                                          const FilterConfig& cfg) {
  std::vector<TypedEstimate> out;
  for (const auto& c : intensity.components) {
    if (c.weight > cfg.extract_threshold) {
      out.push_back({intensity.type_index, c.mean, c.weight, 0});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TypedEstimate& a, const TypedEstimate& b) {
                     return a.weight > b.weight;
                   });
  for (auto& e : out) e.extracted_count = static_cast<int>(out.size());
  return out;
}

StepResult step(const std::vector<TypedIntensity>& state,
                const std::vector<DetectionFrame>& frames,
                const FilterConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.n_types);
  if (frames.size() != n) {
    throw std::invalid_argument("step: need exactly one frame per detector");
  }
  if (state.size() != n) {
    throw std::invalid_argument("step: need exactly one intensity per type");
  }

  std::vector<TypedIntensity> predicted(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (state[i].type_index != static_cast<int>(i)) {
      throw std::invalid_argument("step: state must be ordered by type");
    }
    if (frames[i].detector != static_cast<int>(i)) {
      throw std::invalid_argument("step: frames must be ordered by detector");
    }
    const auto births =
        birth_intensity(frames[i].measurements, cfg, static_cast<int>(i));
    predicted[i] = predict(state[i], births, cfg);
  }

  // The predicted snapshot stays immutable while every type updates
  // against it; updates are independent of each other.
  StepResult res;
  res.state.resize(n);
  res.estimates.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto updated = update(predicted[i], frames[i], predicted, cfg);
    res.state[i] = prune_and_merge(updated, cfg);
    res.estimates[i] = extract_states(res.state[i], cfg);
  }
  return res;
}

NTypeFilter::NTypeFilter(FilterConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  state_.resize(cfg_.n_types);
  for (int i = 0; i < cfg_.n_types; ++i) state_[i].type_index = i;
}

std::vector<std::vector<TypedEstimate>> NTypeFilter::step(
    const std::vector<DetectionFrame>& frames) {
  auto res = ntt::step(state_, frames, cfg_);
  state_ = std::move(res.state);
  return std::move(res.estimates);
}

FilterConfig zero_confusion(FilterConfig cfg) {
  for (int j = 0; j < cfg.n_types; ++j) {
    for (int i = 0; i < cfg.n_types; ++i) {
      if (j != i) cfg.p_detect[j][i] = 0.0;
    }
  }
  return cfg;
}

FilterConfig single_type_config(const FilterConfig& cfg, int type_index) {
  if (type_index < 0 || type_index >= cfg.n_types) {
    throw std::invalid_argument("single_type_config: type index out of range");
  }
  FilterConfig out;
  out.n_types = 1;
  out.types = {cfg.types[type_index]};
  out.p_detect = {{cfg.p_detect[type_index][type_index]}};
  out.h = {{cfg.h[type_index][type_index]}};
  out.r = {{cfg.r[type_index][type_index]}};
  out.region = cfg.region;
  out.prune_threshold = cfg.prune_threshold;
  out.merge_threshold = cfg.merge_threshold;
  out.extract_threshold = cfg.extract_threshold;
  out.max_components = cfg.max_components;
  return out;
}

}  // namespace ntt
