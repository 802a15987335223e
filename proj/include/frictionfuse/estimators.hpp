#ifndef FRICTIONFUSE_ESTIMATORS_HPP
#define FRICTIONFUSE_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fusion.hpp"

namespace frictionfuse {

class FrictionProfile {
public:
  struct Segment {
    double s_start;
    double mu;
    bool operator==(const Segment&) const = default;
  };

  explicit FrictionProfile(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw std::invalid_argument("friction profile needs a segment");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (!(segments_[i].mu >= 0.05 && segments_[i].mu <= 1.2))
        throw std::invalid_argument("segment mu must lie in [0.05, 1.2]");
      if (i > 0 && !(segments_[i].s_start > segments_[i - 1].s_start))
        throw std::invalid_argument("segment starts must be strictly increasing");
    }
  }

  double s_min() const { return segments_.front().s_start; }
  const std::vector<Segment>& segments() const { return segments_; }

  double operator()(double s) const {
    if (s < s_min()) throw std::out_of_range("friction profile lookup below s_min");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                               [](double v, const Segment& seg) { return v < seg.s_start; });
    return std::prev(it)->mu;
  }

  // Same surface seen from a new arc-length origin.
  FrictionProfile relative_to(double origin) const {
    std::vector<Segment> shifted = segments_;
    for (auto& seg : shifted) seg.s_start -= origin;
    return FrictionProfile(std::move(shifted));
  }

  bool operator==(const FrictionProfile&) const = default;

private:
  std::vector<Segment> segments_;
};

enum class SurfaceKind { dry, wet, snow_ice };

struct SurfaceClass {
  SurfaceKind kind;
  double mu_min;
  double mu_max;
  double mean;
  double margin;

  std::string_view name() const {
    switch (kind) {
      case SurfaceKind::dry: return "dry";
      case SurfaceKind::wet: return "wet";
      case SurfaceKind::snow_ice: return "snow_ice";
    }
    return "";
  }
};

inline constexpr SurfaceClass kDry{SurfaceKind::dry, 0.6, 1.2, 0.8, 0.2};
inline constexpr SurfaceClass kWet{SurfaceKind::wet, 0.4, 0.6, 0.5, 0.1};
inline constexpr SurfaceClass kSnowIce{SurfaceKind::snow_ice, 0.1, 0.4, 0.25, 0.15};

// 0.6 itself is wet: dry needs mu strictly above 0.6.
inline SurfaceClass classify(double mu) {
  if (!(mu >= 0.1)) throw std::out_of_range("cannot classify mu below 0.1");
  if (mu > 0.6) return kDry;
  if (mu >= 0.4) return kWet;
  return kSnowIce;
}

struct ErrorMode {
  enum class Kind { worst_over, worst_under, fixed };
  Kind kind = Kind::worst_over;
  double value = 0.0;  // fixed only

  static ErrorMode worst_over() { return {Kind::worst_over, 0.0}; }
  static ErrorMode worst_under() { return {Kind::worst_under, 0.0}; }
  static ErrorMode fixed(double e) { return {Kind::fixed, e}; }

  double error(double max_abs) const {
    switch (kind) {
      case Kind::worst_over: return max_abs;
      case Kind::worst_under: return -max_abs;
      case Kind::fixed: return value;
    }
    return 0.0;
  }

  bool operator==(const ErrorMode&) const = default;
};

class LocalEstimator {
public:
  static constexpr double kMaxAbsError = 0.025;
  static constexpr double kAvailabilityThreshold = 0.5;

  LocalEstimator(ErrorMode mode, double seed_mu) : mode_(mode), last_available_(seed_mu) {
    if (mode.kind == ErrorMode::Kind::fixed && !(std::abs(mode.value) <= kMaxAbsError))
      throw std::invalid_argument("fixed local error must satisfy |e_l| <= 0.025");
  }

  const ErrorMode& mode() const { return mode_; }
  double error() const { return mode_.error(kMaxAbsError); }
  double last_available() const { return last_available_; }
  void set_last_available(double mu) { last_available_ = mu; }

private:
  ErrorMode mode_;
  double last_available_;
};

// profile is vehicle-relative: s = 0 is under the vehicle.
inline std::optional<Reading> local_estimate(const FrictionProfile& profile, double lambda_t,
                                             LocalEstimator& estimator) {
  if (!(lambda_t >= 0.0 && lambda_t <= 1.0))
    throw std::invalid_argument("lambda_t must lie in [0, 1]");
  if (!(lambda_t > LocalEstimator::kAvailabilityThreshold)) return std::nullopt;
  Reading r{profile(0.0) + estimator.error(), LocalEstimator::kMaxAbsError};
  estimator.set_last_available(r.mu);
  return r;
}

enum class ConfigKind { gt, l, p, f };

inline std::string_view to_string(ConfigKind k) {
  switch (k) {
    case ConfigKind::gt: return "gt";
    case ConfigKind::l: return "l";
    case ConfigKind::p: return "p";
    case ConfigKind::f: return "f";
  }
  return "";
}

struct Configuration {
  ConfigKind kind = ConfigKind::f;
  double s_l = kDefaultLocalThreshold;
  GpPrior<SquaredExponential> prior = calibrate_prior();
};

// Everything one replan knows about its estimate; columns of the estimate dump.
struct EstimateSnapshot {
  std::vector<double> mu_hat;
  std::vector<double> mu_prime;
  std::vector<double> margin;
  std::vector<double> post_mean;  // empty unless F
  std::vector<double> post_std;   // empty unless F
  std::vector<double> mu_gt;
  bool local_available = false;
};

inline EstimateSnapshot estimate_snapshot(const Configuration& config,
                                          const FrictionProfile& profile, const SGrid& grid,
                                          double lambda_t, LocalEstimator& estimator) {
  const std::size_t n = grid.size();
  EstimateSnapshot snap;
  snap.mu_gt.resize(n);
  for (std::size_t i = 0; i < n; ++i) snap.mu_gt[i] = profile(grid.at(i));

  const std::optional<Reading> local = local_estimate(profile, lambda_t, estimator);
  snap.local_available = local.has_value();
  const double l_margin = LocalEstimator::kMaxAbsError;

  switch (config.kind) {
    case ConfigKind::gt:
      snap.mu_hat = snap.mu_gt;
      snap.mu_prime = snap.mu_gt;
      snap.margin.assign(n, 0.0);
      break;
    case ConfigKind::l: {
      const double mu0 = local ? local->mu : estimator.last_available();
      snap.mu_hat.assign(n, mu0 - l_margin);
      snap.mu_prime.assign(n, mu0);
      snap.margin.assign(n, l_margin);
      break;
    }
    case ConfigKind::p:
      for (double mu : snap.mu_gt) {
        const SurfaceClass c = classify(mu);
        snap.mu_hat.push_back(c.mu_min);
        snap.mu_prime.push_back(c.mean);
        snap.margin.push_back(c.margin);
      }
      break;
    case ConfigKind::f: {
      std::vector<Reading> predictive;
      predictive.reserve(n);
      for (double mu : snap.mu_gt) {
        const SurfaceClass c = classify(mu);
        predictive.push_back({c.mean, c.margin});
      }
      const EstimateSeries series = assemble_input(grid, predictive, local, config.s_l);
      FusedEstimate fused = fuse(config.prior, series);
      snap.mu_hat = std::move(fused.mu_hat);
      snap.mu_prime = series.mu_prime;
      snap.margin = series.margin;
      snap.post_mean.assign(fused.posterior.mean.begin(), fused.posterior.mean.end());
      snap.post_std.assign(fused.posterior.std.begin(), fused.posterior.std.end());
      break;
    }
  }
  return snap;
}

inline std::vector<double> build_estimate(const Configuration& config,
                                          const FrictionProfile& profile, const SGrid& grid,
                                          double lambda_t, LocalEstimator& estimator) {
  return estimate_snapshot(config, profile, grid, lambda_t, estimator).mu_hat;
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_ESTIMATORS_HPP
