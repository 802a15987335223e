#ifndef FRICTIONFUSE_FUSION_HPP
#define FRICTIONFUSE_FUSION_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gp.hpp"

namespace frictionfuse {

inline constexpr double kZ95 = 1.96;
inline constexpr double kDefaultLengthScale = 10.0;
inline constexpr double kDefaultLocalThreshold = 5.0;

class SGrid {
public:
  SGrid(double ds = 1.0, double s_f = 50.0) : ds_(ds), s_f_(s_f) {
    if (!(ds > 0.0) || !std::isfinite(ds)) throw std::invalid_argument("ds must be > 0");
    if (!(s_f >= 0.0) || !std::isfinite(s_f)) throw std::invalid_argument("s_f must be >= 0");
    const double q = s_f / ds;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q))
      throw std::invalid_argument("s_f must be an exact multiple of ds");
    count_ = static_cast<std::size_t>(std::llround(q)) + 1;
  }

  double ds() const { return ds_; }
  double s_f() const { return s_f_; }
  std::size_t size() const { return count_; }
  double at(std::size_t i) const { return static_cast<double>(i) * ds_; }

  std::vector<double> points() const {
    std::vector<double> p(count_);
    for (std::size_t i = 0; i < count_; ++i) p[i] = at(i);
    return p;
  }

  bool operator==(const SGrid&) const = default;

private:
  double ds_;
  double s_f_;
  std::size_t count_ = 0;
};

struct Reading {
  double mu;
  double margin;
};

struct EstimateSeries {
  SGrid grid;
  std::vector<double> mu_prime;
  std::vector<double> margin;

  void validate() const {
    if (mu_prime.size() != grid.size() || margin.size() != grid.size())
      throw std::invalid_argument("estimate series length must equal grid size");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(mu_prime[i] > 0.0 && mu_prime[i] <= 1.5))
        throw std::invalid_argument("mu_prime entries must lie in (0, 1.5]");
      if (!(margin[i] >= 0.0) || !std::isfinite(margin[i]))
        throw std::invalid_argument("margin entries must be finite and >= 0");
    }
  }
};

struct FusedEstimate {
  SGrid grid;
  std::vector<double> mu_hat;
  PosteriorSummary posterior;
};

inline GpPrior<SquaredExponential> calibrate_prior(double length_scale = kDefaultLengthScale) {
  // eta +- 1.96 sigma_f spans [0.1, 1.0]
  return {0.55, SquaredExponential(0.45 / kZ95, length_scale)};
}

inline double margin_to_std(double margin) {
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be >= 0");
  return margin / kZ95;
}

inline EstimateSeries assemble_input(const SGrid& grid, const std::vector<Reading>& predictive,
                                     const std::optional<Reading>& local, double s_l) {
  if (predictive.size() != grid.size())
    throw std::invalid_argument("predictive readings must cover every grid point");
  if (!(s_l >= 0.0)) throw std::invalid_argument("s_l must be >= 0");
  EstimateSeries out{grid, {}, {}};
  out.mu_prime.resize(grid.size());
  out.margin.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Reading& r = (local && grid.at(i) < s_l) ? *local : predictive[i];
    out.mu_prime[i] = r.mu;
    out.margin[i] = r.margin;
  }
  return out;
}

inline std::vector<double> lower_confidence_bound(const PosteriorSummary& post) {
  std::vector<double> lcb(static_cast<std::size_t>(post.mean.size()));
  for (Eigen::Index i = 0; i < post.mean.size(); ++i)
    lcb[static_cast<std::size_t>(i)] = post.mean(i) - kZ95 * post.std(i);
  return lcb;
}

template <Kernel1d K>
FusedEstimate fuse(const GpPrior<K>& prior, const EstimateSeries& series) {
  series.validate();
  ObservationSet obs;
  obs.locations = series.grid.points();
  obs.values = series.mu_prime;
  obs.noise_std.reserve(series.margin.size());
  for (double m : series.margin) obs.noise_std.push_back(margin_to_std(m));

  FusedEstimate out{series.grid, {}, posterior(prior, obs, obs.locations)};
  out.mu_hat = lower_confidence_bound(out.posterior);
  return out;
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_FUSION_HPP
