#ifndef FRICTIONFUSE_GP_HPP
#define FRICTIONFUSE_GP_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace frictionfuse {

class FactorizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Stationary 1-D covariance function with a known prior variance k(x, x).
template <typename K>
concept Kernel1d = requires(const K& k, double a, double b) {
  { k(a, b) } -> std::convertible_to<double>;
  { k.prior_variance() } -> std::convertible_to<double>;
};

class SquaredExponential {
public:
  SquaredExponential(double sigma_f, double length_scale)
      : sigma_f_(sigma_f), length_scale_(length_scale) {
    if (!(sigma_f > 0.0) || !std::isfinite(sigma_f))
      throw std::invalid_argument("sigma_f must be > 0");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale))
      throw std::invalid_argument("length_scale must be > 0");
  }

  double sigma_f() const { return sigma_f_; }
  double length_scale() const { return length_scale_; }
  double prior_variance() const { return sigma_f_ * sigma_f_; }

  double operator()(double xi, double xj) const {
    const double r = xi - xj;
    return sigma_f_ * sigma_f_ * std::exp(-r * r / (2.0 * length_scale_ * length_scale_));
  }

  bool operator==(const SquaredExponential&) const = default;

private:
  double sigma_f_;
  double length_scale_;
};

template <Kernel1d K>
struct GpPrior {
  double mean;
  K kernel;

  GpPrior(double mean_, K kernel_) : mean(mean_), kernel(std::move(kernel_)) {
    if (!(mean > 0.0 && mean < 2.0))
      throw std::invalid_argument("prior mean must lie in (0, 2)");
  }
};

struct ObservationSet {
  std::vector<double> locations;
  std::vector<double> values;
  std::vector<double> noise_std;

  std::size_t size() const { return locations.size(); }

  void validate() const {
    if (values.size() != locations.size() || noise_std.size() != locations.size())
      throw std::invalid_argument("observation lists must have equal length");
    for (double s : noise_std)
      if (!(s >= 0.0) || !std::isfinite(s))
        throw std::invalid_argument("noise_std entries must be finite and >= 0");
  }
};

struct PosteriorSummary {
  std::vector<double> test_locations;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd std;
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-6;
inline constexpr double kCovarianceTolerance = 1e-9;

template <Kernel1d K>
double kernel_eval(const K& kernel, double xi, double xj) {
  return kernel(xi, xj);
}

template <Kernel1d K>
Eigen::MatrixXd gram_matrix(const K& kernel, std::span<const double> xs_a,
                            std::span<const double> xs_b) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(xs_a.size()),
                    static_cast<Eigen::Index>(xs_b.size()));
  for (std::size_t i = 0; i < xs_a.size(); ++i)
    for (std::size_t j = 0; j < xs_b.size(); ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel(xs_a[i], xs_b[j]);
  return g;
}

namespace detail {

// Factor a + jitter*I, escalating jitter x10 until it succeeds or passes kJitterMax.
inline Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.000001; jitter *= 10.0) {
    Eigen::MatrixXd reg = a;
    reg.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) continue;
    const auto diag = llt.matrixLLT().diagonal();
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) ok = false;
    if (ok) return llt;
  }
  throw FactorizationError("gram matrix is not positive definite after jitter escalation to " +
                           std::to_string(kJitterMax));
}

inline ObservationSet sorted(const ObservationSet& obs) {
  std::vector<std::size_t> idx(obs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(obs.locations[a], obs.values[a], obs.noise_std[a]) <
           std::tie(obs.locations[b], obs.values[b], obs.noise_std[b]);
  });
  ObservationSet out;
  for (std::size_t i : idx) {
    out.locations.push_back(obs.locations[i]);
    out.values.push_back(obs.values[i]);
    out.noise_std.push_back(obs.noise_std[i]);
  }
  return out;
}

inline Eigen::VectorXd clamped_std(const Eigen::MatrixXd& cov) {
  Eigen::VectorXd sd(cov.rows());
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    double c = cov(i, i);
    if (!std::isfinite(c) || c < -kCovarianceTolerance)
      throw FactorizationError("posterior variance " + std::to_string(c) + " at index " +
                               std::to_string(i) + " is below -1e-9");
    sd(i) = c < 0.0 ? 0.0 : std::sqrt(c);
  }
  return sd;
}

}  // namespace detail

template <Kernel1d K>
PosteriorSummary posterior(const GpPrior<K>& prior, const ObservationSet& obs,
                           std::span<const double> test_locations) {
  obs.validate();
  if (test_locations.empty())
    throw std::invalid_argument("posterior needs at least one test location");

  PosteriorSummary out;
  out.test_locations.assign(test_locations.begin(), test_locations.end());
  const auto m = static_cast<Eigen::Index>(test_locations.size());
  Eigen::MatrixXd kss = gram_matrix(prior.kernel, test_locations, test_locations);

  if (obs.size() == 0) {
    out.mean = Eigen::VectorXd::Constant(m, prior.mean);
    out.covariance = kss;
  } else {
    // canonical order, so the result does not depend on how observations were listed
    const ObservationSet o = detail::sorted(obs);
    const auto n = static_cast<Eigen::Index>(o.size());
    Eigen::MatrixXd kxx = gram_matrix(prior.kernel, o.locations, o.locations);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = o.noise_std[static_cast<std::size_t>(i)];
      kxx(i, i) += s * s;
    }
    const Eigen::MatrixXd kxs = gram_matrix(prior.kernel, o.locations, test_locations);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = o.values[static_cast<std::size_t>(i)] - prior.mean;

    const auto llt = detail::factor_with_jitter(kxx);
    const Eigen::VectorXd alpha = llt.solve(r);
    out.mean = (kxs.transpose() * alpha).array() + prior.mean;

    const Eigen::MatrixXd v = llt.matrixL().solve(kxs);
    Eigen::MatrixXd cov = kss - v.transpose() * v;
    out.covariance = 0.5 * (cov + cov.transpose());
  }
  out.std = detail::clamped_std(out.covariance);
  return out;
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_GP_HPP
