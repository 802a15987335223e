#ifndef FRICTIONFUSE_CLI_HPP
#define FRICTIONFUSE_CLI_HPP

#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "io.hpp"

namespace frictionfuse::cli {

struct HelpRequest {
  std::string text;
};

using Command = std::variant<RunConfig, MatrixConfig, HelpRequest>;

namespace detail {

struct CommonFlags {
  Overrides overrides;
  std::string out = "out";
  std::string format = "csv";
  bool dump_estimates = false;
};

inline void add_common(CLI::App& app, CommonFlags& c) {
  Overrides& o = c.overrides;
  app.add_option("--ds", o.ds, "grid spacing [m]");
  app.add_option("--s-f", o.s_f, "horizon length [m]");
  app.add_option("--l", o.l, "GP length scale [m]");
  app.add_option("--sigma-f", o.sigma_f, "GP signal std");
  app.add_option("--eta", o.eta, "GP prior mean");
  app.add_option("--s-l", o.s_l, "local-influence threshold [m]");
  app.add_option("--replan-dt", o.replan_dt, "replanning period [s]");
  app.add_option("--sim-dt", o.sim_dt, "integration step [s]");
  app.add_option("--lane-half-width", o.lane_half_width, "lane half-width [m]");
  app.add_option("--turn-radius", o.turn_radius, "turn radius [m]");
  app.add_option("--out", c.out, "output directory");
  app.add_option("--format", c.format, "csv, json or both");
  app.add_flag("--dump-estimates", c.dump_estimates, "write estimate_<t> files for every replan");
}

inline void apply_format(const std::string& f, bool& csv, bool& json) {
  if (f == "csv") csv = true, json = false;
  else if (f == "json") csv = false, json = true;
  else if (f == "both") csv = json = true;
  else throw UsageError("--format must be one of {csv, json, both}, got '" + f + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace detail

// args excludes the program name.
inline Command parse_command(std::vector<std::string> args) {
  CLI::App app{"friction estimate fusion and scenario simulator", "frictionfuse"};
  app.fallthrough();
  detail::CommonFlags common;
  std::string scenario, config, error;
  app.add_option("--scenario", scenario, "turn or collision");
  app.add_option("--config", config, "gt, l, p or f");
  app.add_option("--error", error, "worst-over, worst-under or fixed=<v>");
  detail::add_common(app, common);

  CLI::App* matrix = app.add_subcommand("matrix", "run every scenario x config x error combination");
  std::string scenarios = "turn,collision", configs = "gt,l,p,f", errors = "adversarial";
  matrix->add_option("--scenarios", scenarios, "comma separated scenarios");
  matrix->add_option("--configs", configs, "comma separated configurations");
  matrix->add_option("--errors", errors, "comma separated error modes, or adversarial");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::Success&) {
    return HelpRequest{app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (matrix->parsed()) {
    if (!scenario.empty() || !config.empty() || !error.empty())
      throw UsageError("matrix takes --scenarios/--configs/--errors instead of --scenario/--config/--error");
    MatrixConfig mc;
    mc.scenarios.clear();
    mc.configs.clear();
    for (const auto& s : detail::split_list(scenarios)) mc.scenarios.push_back(parse_scenario_id(s, "--scenarios"));
    for (const auto& c : detail::split_list(configs)) mc.configs.push_back(parse_config_kind(c, "--configs"));
    if (errors != "adversarial")
      for (const auto& e : detail::split_list(errors)) mc.errors.push_back(parse_error_mode(e, "--errors"));
    if (mc.scenarios.empty()) throw UsageError("--scenarios must name at least one scenario");
    if (mc.configs.empty()) throw UsageError("--configs must name at least one configuration");
    mc.overrides = common.overrides;
    mc.out_dir = common.out;
    detail::apply_format(common.format, mc.csv, mc.json);
    mc.dump_estimates = common.dump_estimates;
    validate(mc.overrides);
    if (mc.out_dir.empty()) throw UsageError("--out must not be empty");
    return mc;
  }

  if (scenario.empty()) throw UsageError("--scenario is required (turn or collision)");
  if (config.empty()) throw UsageError("--config is required (gt, l, p or f)");
  RunConfig rc;
  rc.scenario = parse_scenario_id(scenario);
  rc.config = parse_config_kind(config);
  rc.error = error.empty() ? adversarial_error(rc.scenario) : parse_error_mode(error);
  rc.overrides = common.overrides;
  rc.out_dir = common.out;
  detail::apply_format(common.format, rc.csv, rc.json);
  rc.dump_estimates = common.dump_estimates;
  validate(rc);
  return rc;
}

inline RunConfig parse_args(const std::vector<std::string>& args) {
  Command c = parse_command(args);
  if (auto* rc = std::get_if<RunConfig>(&c)) return *rc;
  throw UsageError("expected a single run (--scenario/--config), not a subcommand or help");
}

inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Command cmd;
  try {
    cmd = parse_command(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  if (auto* h = std::get_if<HelpRequest>(&cmd)) {
    out << h->text;
    return 0;
  }

  if (auto* mc = std::get_if<MatrixConfig>(&cmd)) {
    try {
      const auto rows = run_matrix(*mc);
      bool failed = false;
      for (const auto& row : rows) {
        out << summary_line(row) << "\n";
        failed = failed || !row.error_message.empty();
      }
      return failed ? 2 : 0;
    } catch (const std::exception& e) {
      err << "run failure: " << e.what() << "\n";
      return 2;
    }
  }

  const RunConfig& rc = std::get<RunConfig>(cmd);
  try {
    const ScenarioResult res = run(rc);
    emit_traces(res, rc);
    const ScenarioMetrics& m = res.metrics;
    out << to_string(rc.scenario) << " " << to_string(rc.config) << " " << to_string(rc.error)
        << " outcome=" << to_string(m.outcome) << " max_abs_d=" << format_number(m.max_abs_d)
        << " impact_velocity=" << format_number(m.impact_velocity) << "\n";
    if (res.failure) {
      err << "run failure: " << *res.failure << "\n";
      return 2;
    }
  } catch (const std::exception& e) {
    err << "run failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace frictionfuse::cli

#endif  // FRICTIONFUSE_CLI_HPP
