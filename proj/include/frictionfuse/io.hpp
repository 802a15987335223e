#ifndef FRICTIONFUSE_IO_HPP
#define FRICTIONFUSE_IO_HPP

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simulator.hpp"

namespace frictionfuse {

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioId { turn, collision };

inline std::string_view to_string(ScenarioId id) {
  return id == ScenarioId::turn ? "turn" : "collision";
}

inline ScenarioId parse_scenario_id(std::string_view s, std::string_view flag = "--scenario") {
  if (s == "turn") return ScenarioId::turn;
  if (s == "collision") return ScenarioId::collision;
  throw UsageError(std::string(flag) + " must be one of {turn, collision}, got '" + std::string(s) + "'");
}

inline ConfigKind parse_config_kind(std::string_view s, std::string_view flag = "--config") {
  if (s == "gt") return ConfigKind::gt;
  if (s == "l") return ConfigKind::l;
  if (s == "p") return ConfigKind::p;
  if (s == "f") return ConfigKind::f;
  throw UsageError(std::string(flag) + " must be one of {gt, l, p, f}, got '" + std::string(s) + "'");
}

// Shortest round-trip form; used where the text must parse back exactly.
inline std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// CSV number: 9 significant digits, '.' separator, independent of locale.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

inline std::string to_string(const ErrorMode& e) {
  switch (e.kind) {
    case ErrorMode::Kind::worst_over: return "worst-over";
    case ErrorMode::Kind::worst_under: return "worst-under";
    case ErrorMode::Kind::fixed: return "fixed=" + shortest(e.value);
  }
  return "";
}

inline ErrorMode parse_error_mode(std::string_view s, std::string_view flag = "--error") {
  if (s == "worst-over") return ErrorMode::worst_over();
  if (s == "worst-under") return ErrorMode::worst_under();
  if (s.starts_with("fixed=")) {
    const std::string_view num = s.substr(6);
    double v = 0.0;
    auto r = std::from_chars(num.data(), num.data() + num.size(), v);
    if (r.ec != std::errc() || r.ptr != num.data() + num.size() || num.empty())
      throw UsageError(std::string(flag) + " fixed=<v> needs a number, got '" + std::string(num) + "'");
    if (!(std::abs(v) <= LocalEstimator::kMaxAbsError))
      throw UsageError(std::string(flag) + " fixed value must satisfy |e_l| <= 0.025, got " + std::string(num));
    return ErrorMode::fixed(v);
  }
  throw UsageError(std::string(flag) + " must be worst-over, worst-under or fixed=<v>, got '" +
                   std::string(s) + "'");
}

inline ErrorMode adversarial_error(ScenarioId id) {
  return id == ScenarioId::turn ? ErrorMode::worst_over() : ErrorMode::worst_under();
}

struct Overrides {
  std::optional<double> ds, s_f, l, sigma_f, eta, s_l, replan_dt, sim_dt, lane_half_width, turn_radius;
  bool operator==(const Overrides&) const = default;
};

struct RunConfig {
  ScenarioId scenario = ScenarioId::turn;
  ConfigKind config = ConfigKind::f;
  ErrorMode error = ErrorMode::worst_over();
  Overrides overrides;
  std::string out_dir = "out";
  bool csv = true;
  bool json = false;
  bool dump_estimates = false;
  bool operator==(const RunConfig&) const = default;
};

inline void validate(const Overrides& o) {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw UsageError(msg);
  };
  const double ds = o.ds.value_or(1.0);
  const double s_f = o.s_f.value_or(50.0);
  if (o.ds) need(ds > 0.0 && std::isfinite(ds), "--ds must be > 0");
  if (o.s_f) need(s_f >= 0.0 && std::isfinite(s_f), "--s-f must be >= 0");
  const double q = s_f / ds;
  need(std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q), "--s-f must be an exact multiple of --ds");
  if (o.l) need(*o.l > 0.0 && std::isfinite(*o.l), "--l must be > 0");
  if (o.sigma_f) need(*o.sigma_f > 0.0 && std::isfinite(*o.sigma_f), "--sigma-f must be > 0");
  if (o.eta) need(*o.eta > 0.0 && *o.eta < 2.0, "--eta must lie in (0, 2)");
  if (o.s_l) need(*o.s_l >= 0.0 && std::isfinite(*o.s_l), "--s-l must be >= 0");
  if (o.sim_dt) need(*o.sim_dt > 0.0 && *o.sim_dt <= 0.05, "--sim-dt must lie in (0, 0.05]");
  if (o.replan_dt) need(*o.replan_dt > 0.0 && std::isfinite(*o.replan_dt), "--replan-dt must be > 0");
  try {
    steps_per_replan(o.replan_dt.value_or(0.1), o.sim_dt.value_or(0.01));
  } catch (const std::invalid_argument&) {
    throw UsageError("--replan-dt must be a multiple of --sim-dt");
  }
  if (o.lane_half_width)
    need(*o.lane_half_width > 0.0 && std::isfinite(*o.lane_half_width), "--lane-half-width must be > 0");
  if (o.turn_radius) need(*o.turn_radius > 0.0 && std::isfinite(*o.turn_radius), "--turn-radius must be > 0");
}

inline void validate(const RunConfig& rc) {
  validate(rc.overrides);
  if (rc.error.kind == ErrorMode::Kind::fixed && !(std::abs(rc.error.value) <= LocalEstimator::kMaxAbsError))
    throw UsageError("--error fixed value must satisfy |e_l| <= 0.025");
  if (!rc.csv && !rc.json) throw UsageError("--format must select csv, json or both");
  if (rc.out_dir.empty()) throw UsageError("--out must not be empty");
}

inline Scenario make_scenario(ScenarioId id, const Overrides& o) {
  ScenarioOptions so;
  if (o.lane_half_width) so.lane_half_width = *o.lane_half_width;
  if (o.turn_radius) so.turn_radius = *o.turn_radius;
  return id == ScenarioId::turn ? turn_scenario(so) : collision_scenario(so);
}

inline Configuration make_configuration(ConfigKind kind, const Overrides& o) {
  const GpPrior<SquaredExponential> cal = calibrate_prior(o.l.value_or(kDefaultLengthScale));
  return {kind, o.s_l.value_or(kDefaultLocalThreshold),
          GpPrior<SquaredExponential>(o.eta.value_or(cal.mean),
                                      SquaredExponential(o.sigma_f.value_or(cal.kernel.sigma_f()),
                                                         cal.kernel.length_scale()))};
}

inline SimulationOptions make_options(const ErrorMode& error, const Overrides& o) {
  SimulationOptions so;
  so.replan_dt = o.replan_dt.value_or(so.replan_dt);
  so.sim_dt = o.sim_dt.value_or(so.sim_dt);
  so.grid = SGrid(o.ds.value_or(1.0), o.s_f.value_or(50.0));
  so.error = error;
  return so;
}

inline ScenarioResult run(const RunConfig& rc) {
  validate(rc);
  return run(make_scenario(rc.scenario, rc.overrides), make_configuration(rc.config, rc.overrides),
             make_options(rc.error, rc.overrides));
}

// ---- RunConfig json ----

inline nlohmann::ordered_json to_json(const RunConfig& rc) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  const Overrides& o = rc.overrides;
  nlohmann::ordered_json j;
  j["scenario"] = to_string(rc.scenario);
  j["config"] = to_string(rc.config);
  j["error"] = to_string(rc.error);
  j["overrides"] = {{"ds", opt(o.ds)},
                    {"s_f", opt(o.s_f)},
                    {"l", opt(o.l)},
                    {"sigma_f", opt(o.sigma_f)},
                    {"eta", opt(o.eta)},
                    {"s_l", opt(o.s_l)},
                    {"replan_dt", opt(o.replan_dt)},
                    {"sim_dt", opt(o.sim_dt)},
                    {"lane_half_width", opt(o.lane_half_width)},
                    {"turn_radius", opt(o.turn_radius)}};
  j["out"] = rc.out_dir;
  nlohmann::ordered_json formats = nlohmann::ordered_json::array();
  if (rc.csv) formats.push_back("csv");
  if (rc.json) formats.push_back("json");
  j["formats"] = formats;
  j["dump_estimates"] = rc.dump_estimates;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::ordered_json& j) {
  RunConfig rc;
  try {
    rc.scenario = parse_scenario_id(j.at("scenario").get<std::string>());
    rc.config = parse_config_kind(j.at("config").get<std::string>());
    rc.error = parse_error_mode(j.at("error").get<std::string>());
    const auto& o = j.at("overrides");
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!o.contains(key) || o.at(key).is_null()) return std::nullopt;
      return o.at(key).get<double>();
    };
    rc.overrides = {opt("ds"),     opt("s_f"),    opt("l"),
                    opt("sigma_f"), opt("eta"),   opt("s_l"),
                    opt("replan_dt"), opt("sim_dt"), opt("lane_half_width"),
                    opt("turn_radius")};
    rc.out_dir = j.at("out").get<std::string>();
    rc.csv = rc.json = false;
    for (const auto& f : j.at("formats")) {
      const auto s = f.get<std::string>();
      if (s == "csv") rc.csv = true;
      else if (s == "json") rc.json = true;
      else throw UsageError("formats entries must be csv or json, got '" + s + "'");
    }
    rc.dump_estimates = j.at("dump_estimates").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("run config json: ") + e.what());
  }
  validate(rc);
  return rc;
}

// ---- traces ----

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> c{"t", "s", "d", "v", "lambda", "outcome_so_far"};
  return c;
}

inline const std::vector<std::string>& estimate_columns() {
  static const std::vector<std::string> c{"s", "mu_prime", "margin", "post_mean", "post_std", "mu_hat", "mu_gt"};
  return c;
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> c{"scenario",        "config",        "error_mode",
                                          "outcome",         "max_abs_d",     "min_clearance",
                                          "impact_velocity", "mean_utilization_ratio", "error"};
  return c;
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

inline std::string replan_tag(double t) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, t, std::chars_format::fixed, 3);
  return std::string(buf, r.ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
  f.close();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline std::string trace_csv(const ScenarioResult& r) {
  std::string out = join(trace_columns()) + '\n';
  for (const auto& s : r.trace)
    out += join({format_number(s.t), format_number(s.s), format_number(s.d), format_number(s.v),
                 format_number(s.lambda), std::string(to_string(s.outcome))}) + '\n';
  return out;
}

inline std::string trace_json(const ScenarioResult& r) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : r.trace)
    rows.push_back({{"t", s.t}, {"s", s.s}, {"d", s.d}, {"v", s.v}, {"lambda", s.lambda},
                    {"outcome_so_far", to_string(s.outcome)}});
  return rows.dump(1) + '\n';
}

inline std::string estimate_csv(const ReplanRecord& rec, const SGrid& grid) {
  const EstimateSnapshot& e = rec.estimate;
  std::string out = join(estimate_columns()) + '\n';
  const bool has_post = !e.post_mean.empty();
  for (std::size_t i = 0; i < e.mu_hat.size(); ++i)
    out += join({format_number(grid.at(i)), format_number(e.mu_prime[i]), format_number(e.margin[i]),
                 has_post ? format_number(e.post_mean[i]) : "", has_post ? format_number(e.post_std[i]) : "",
                 format_number(e.mu_hat[i]), format_number(e.mu_gt[i])}) + '\n';
  return out;
}

inline std::string estimate_json(const ReplanRecord& rec, const SGrid& grid) {
  const EstimateSnapshot& e = rec.estimate;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  const bool has_post = !e.post_mean.empty();
  for (std::size_t i = 0; i < e.mu_hat.size(); ++i)
    rows.push_back({{"s", grid.at(i)},
                    {"mu_prime", e.mu_prime[i]},
                    {"margin", e.margin[i]},
                    {"post_mean", has_post ? nlohmann::ordered_json(e.post_mean[i]) : nlohmann::ordered_json(nullptr)},
                    {"post_std", has_post ? nlohmann::ordered_json(e.post_std[i]) : nlohmann::ordered_json(nullptr)},
                    {"mu_hat", e.mu_hat[i]},
                    {"mu_gt", e.mu_gt[i]}});
  return rows.dump(1) + '\n';
}

inline constexpr std::string_view kUtilizationNote =
    "utilization is the mu-level ratio mu_hat(0)/mu_gt(0); utilization_reduction = 1 - ratio. "
    "Force-level utilization reductions (32.6% for P, 5.6% for F) require a tire-force polygon "
    "model that is not part of this simulator and are not reproduced.";

inline nlohmann::ordered_json metrics_json(const ScenarioResult& r) {
  const ScenarioMetrics& m = r.metrics;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["config"] = to_string(r.config);
  j["error_mode"] = to_string(r.error);
  j["outcome"] = to_string(m.outcome);
  j["max_abs_d"] = m.max_abs_d;
  j["min_clearance"] = opt(m.min_clearance);
  j["impact_velocity"] = m.impact_velocity;
  j["turn_entry_speed"] = opt(m.turn_entry_speed);
  j["mean_utilization_ratio"] = m.mean_utilization_ratio;
  j["utilization_reduction"] = 1.0 - m.mean_utilization_ratio;
  j["infeasible_replans"] = m.infeasible_replans;
  j["end_time"] = m.end_time;
  j["final_d"] = m.final_d;
  j["failure"] = r.failure ? nlohmann::ordered_json(*r.failure) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (const auto& rec : r.replans)
    series.push_back({{"t", rec.t},
                      {"s", rec.s},
                      {"ratio", rec.utilization_ratio},
                      {"reduction", 1.0 - rec.utilization_ratio},
                      {"local_available", rec.estimate.local_available},
                      {"plan_feasible", rec.plan.feasible}});
  j["utilization_ratio"] = series;
  j["utilization_note"] = kUtilizationNote;
  return j;
}

inline void emit_traces(const ScenarioResult& result, const RunConfig& rc) {
  namespace fs = std::filesystem;
  const fs::path dir(rc.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());

  const SGrid grid(rc.overrides.ds.value_or(1.0), rc.overrides.s_f.value_or(50.0));
  if (rc.csv) write_file(dir / "trace.csv", trace_csv(result));
  if (rc.json) write_file(dir / "trace.json", trace_json(result));
  if (rc.dump_estimates)
    for (const auto& rec : result.replans) {
      const std::string stem = "estimate_" + replan_tag(rec.t);
      if (rc.csv) write_file(dir / (stem + ".csv"), estimate_csv(rec, grid));
      if (rc.json) write_file(dir / (stem + ".json"), estimate_json(rec, grid));
    }
  write_file(dir / "metrics.json", metrics_json(result).dump(2) + '\n');
}

// ---- matrix ----

struct MatrixConfig {
  std::vector<ScenarioId> scenarios{ScenarioId::turn, ScenarioId::collision};
  std::vector<ConfigKind> configs{ConfigKind::gt, ConfigKind::l, ConfigKind::p, ConfigKind::f};
  std::vector<ErrorMode> errors;  // empty: the adversarial mode of each scenario
  Overrides overrides;
  std::string out_dir = "out";
  bool csv = true;
  bool json = false;
  bool dump_estimates = false;
};

struct SummaryRow {
  ScenarioId scenario;
  ConfigKind config;
  ErrorMode error;
  std::optional<ScenarioMetrics> metrics;
  std::string error_message;
};

inline std::string summary_line(const SummaryRow& row) {
  std::vector<std::string> cells{std::string(to_string(row.scenario)), std::string(to_string(row.config)),
                                 to_string(row.error)};
  if (row.metrics && row.error_message.empty()) {
    const ScenarioMetrics& m = *row.metrics;
    cells.insert(cells.end(), {std::string(to_string(m.outcome)), format_number(m.max_abs_d),
                               m.min_clearance ? format_number(*m.min_clearance) : "",
                               format_number(m.impact_velocity), format_number(m.mean_utilization_ratio), ""});
  } else {
    std::string msg = row.error_message;
    for (char& c : msg)
      if (c == ',' || c == '\n' || c == '\r') c = ' ';
    cells.insert(cells.end(), {"failed", "", "", "", "", msg});
  }
  return join(cells);
}

inline std::vector<SummaryRow> run_matrix(const MatrixConfig& mc) {
  if (mc.scenarios.empty() || mc.configs.empty())
    throw UsageError("matrix needs at least one scenario and one configuration");
  validate(mc.overrides);

  std::vector<RunConfig> runs;
  for (ScenarioId sid : mc.scenarios) {
    const std::vector<ErrorMode> errs = mc.errors.empty() ? std::vector<ErrorMode>{adversarial_error(sid)} : mc.errors;
    for (ConfigKind ck : mc.configs)
      for (const ErrorMode& e : errs) {
        RunConfig rc{sid, ck, e, mc.overrides, {}, mc.csv, mc.json, mc.dump_estimates};
        std::string sub = std::string(to_string(sid)) + "_" + std::string(to_string(ck)) + "_" + to_string(e);
        rc.out_dir = (std::filesystem::path(mc.out_dir) / sub).string();
        runs.push_back(std::move(rc));
      }
  }

  std::vector<std::future<SummaryRow>> jobs;
  jobs.reserve(runs.size());
  for (const RunConfig& rc : runs)
    jobs.push_back(std::async(std::launch::async, [&rc] {
      SummaryRow row{rc.scenario, rc.config, rc.error, std::nullopt, {}};
      try {
        ScenarioResult res = run(rc);
        emit_traces(res, rc);
        row.metrics = res.metrics;
        if (res.failure) row.error_message = *res.failure;
      } catch (const std::exception& e) {
        row.error_message = e.what();
      }
      return row;
    }));

  std::vector<SummaryRow> rows;
  rows.reserve(jobs.size());
  for (auto& j : jobs) rows.push_back(j.get());

  std::string out = join(summary_columns()) + '\n';
  for (const auto& row : rows) out += summary_line(row) + '\n';
  std::error_code ec;
  std::filesystem::create_directories(mc.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + mc.out_dir + ": " + ec.message());
  write_file(std::filesystem::path(mc.out_dir) / "summary.csv", out);
  return rows;
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_IO_HPP
