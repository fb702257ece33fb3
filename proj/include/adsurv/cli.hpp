#pragma once

// Command-line front end. run_cli is callable from tests; tools/main.cpp
// only forwards argv to it.
//
// Exit codes: 0 success, 2 parse/validation, 3 numerical failure,
// 4 insufficient events. Failures print one line on the error stream:
//   error category=<parse|validation|numerical|insufficient_events> message="..."

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adsurv/combo_test.hpp"
#include "adsurv/cond_error.hpp"
#include "adsurv/errors.hpp"
#include "adsurv/scenario_io.hpp"
#include "adsurv/sim_engine.hpp"
#include "adsurv/surv_core.hpp"
#include "adsurv/wiener_bound.hpp"

namespace adsurv {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 2,
  kExitNumerical = 3,
  kExitInsufficientEvents = 4,
};

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Parse:
    case ErrorCategory::Validation: return kExitInvalid;
    case ErrorCategory::Numerical: return kExitNumerical;
    case ErrorCategory::InsufficientEvents: return kExitInsufficientEvents;
  }
  return kExitNumerical;
}

namespace cli_detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

inline std::string one_line(std::string msg) {
  for (auto& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return msg;
}

inline void check_probability(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw ValidationError(std::string(name) + " must lie in (0,1), got " + detail::format_real(v));
  }
}

class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(dir.empty() ? "." : std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir_.string() + "'");
  }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path.string() + "'");
    f << content;
    return path;
  }

 private:
  std::filesystem::path dir_;
};

inline std::vector<double> decile_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

inline std::vector<double> p2_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
  return g;
}

// Key/value report shared by stdout and a CSV file.
class Report {
 public:
  void add(std::string key, std::string value) { rows_.emplace_back(std::move(key), std::move(value)); }
  std::string text() const {
    std::ostringstream s;
    for (const auto& [k, v] : rows_) s << k << " = " << v << '\n';
    return s.str();
  }
  std::string csv() const {
    std::ostringstream s;
    s << "quantity,value\n";
    for (const auto& [k, v] : rows_) s << k << ',' << v << '\n';
    return s.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// Command parameter blocks

struct DesignArgs {
  std::string scenario;
  double alpha = -1.0, beta = -1.0, theta = -1.0;
};

struct BoundArgs {
  double w1 = 0.0, u1 = 0.0, alpha = 0.0;
  int knots = kDefaultKnots;
};

struct TableArgs {
  double alpha = 0.0;
  int knots = kDefaultKnots;
  std::string rows = "w1sq";
};

struct PowerArgs {
  std::int64_t d1_t1 = 0, d1_tmax = 0;
  double w1 = 0.0, theta = 0.0, alpha = 0.0;
  double k_star = -1.0;  // < 0: computed
  int knots = kDefaultKnots;
};

struct SimulateArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::int64_t reps = 1000;
  int threads = 0;
  int knots = kDefaultKnots;
};

struct AnalyzeArgs {
  double alpha = 0.0;
  int knots = kDefaultKnots;
  // Dataset mode.
  std::string data;
  std::int64_t d12 = 0;
  std::int64_t d12_star = 0;
  std::string weight_rule = "irle";
  std::int64_t d1 = 0, d2 = 0;
  double t_max = -1.0;
  // Snapshot mode.
  bool snapshots = false;
  double s1_t12 = 0.0, s1_star = 0.0, s12_star = 0.0;
  std::int64_t d1_t12 = 0, d1_star = 0, d12s = 0, d1_tmax = 0;
};

// ---------------------------------------------------------------------------
// Commands

inline void cmd_design(const DesignArgs& a, const cli_detail::OutputDir&, std::ostream& out) {
  cli_detail::Report r;
  if (!a.scenario.empty()) {
    const ScenarioConfig sc = parse_scenario(a.scenario);
    const auto req = required_events(sc.design.alpha, sc.design.beta, sc.design.theta_R);
    r.add("required_events_exact", fmt_sig(req.exact, 6));
    r.add("required_events", std::to_string(req.rounded));
    r.add("d12", std::to_string(sc.design.d12));
    r.add("subjects", std::to_string(sc.n_subjects()));
    r.add("t_max", fmt_sig(sc.t_max(), 6));
    r.add("expected_events_t_max", fmt_sig(expected_events(sc, sc.t_max()), 6));
    if (sc.interim.kind == Interim::Kind::AtMonth) {
      r.add("expected_events_interim", fmt_sig(expected_events(sc, sc.interim.value), 6));
    }
  } else {
    if (a.alpha < 0 || a.beta < 0 || a.theta < 0) {
      throw ValidationError("design needs --scenario or all of --alpha, --beta, --theta");
    }
    cli_detail::check_probability(a.alpha, "alpha");
    cli_detail::check_probability(a.beta, "beta");
    const auto req = required_events(a.alpha, a.beta, a.theta);
    r.add("required_events_exact", fmt_sig(req.exact, 6));
    r.add("required_events", std::to_string(req.rounded));
  }
  out << r.text();
}

inline void cmd_bound(const BoundArgs& a, std::ostream& out) {
  cli_detail::check_probability(a.alpha, "alpha");
  if (!(a.w1 > 0.0 && a.w1 <= 1.0)) throw ValidationError("w1 must lie in (0,1]");
  if (!(a.u1 > 0.0 && a.u1 <= 1.0)) throw ValidationError("u1 must lie in (0,1]");
  if (a.knots < 1) throw ValidationError("knots must be >= 1");
  out << "worst_case_alpha = " << fmt_prob(worst_case_alpha(a.w1, a.u1, a.alpha, a.knots)) << '\n';
}

/// Rows are labelled by w1^2 (the first-stage information share) by
/// default; `rows = "w1"` labels them by the weight itself.
inline std::string cutoff_table_csv(double alpha, int knots, const std::string& rows) {
  const auto labels = cli_detail::decile_grid();
  std::vector<double> w1 = labels;
  if (rows == "w1sq") {
    for (auto& v : w1) v = std::sqrt(v);
  } else if (rows != "w1") {
    throw ValidationError("rows must be w1sq or w1");
  }
  const auto u1 = cli_detail::decile_grid();
  const auto table = kstar_table(w1, u1, alpha, knots);
  std::ostringstream s;
  s << (rows == "w1sq" ? "w1sq" : "w1");
  for (double u : u1) s << ",u1=" << fmt_sig(u, 2);
  s << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s << fmt_sig(labels[i], 2);
    for (std::size_t j = 0; j < u1.size(); ++j) s << ',' << fmt_cutoff(table[i][j]);
    s << '\n';
  }
  return s.str();
}

inline void cmd_cutoff_table(const TableArgs& a, const cli_detail::OutputDir& dir,
                             RunManifest& manifest, std::ostream& out) {
  cli_detail::check_probability(a.alpha, "alpha");
  if (a.knots < 1) throw ValidationError("knots must be >= 1");
  const std::string csv = cutoff_table_csv(a.alpha, a.knots, a.rows);
  manifest.parameters = {{"alpha", detail::format_real(a.alpha)},
                         {"knots", std::to_string(a.knots)},
                         {"rows", a.rows}};
  out << "wrote " << dir.write("table.csv", csv).string() << '\n';
}

inline std::string power_csv(const PowerInputs& pi, int knots) {
  const auto grid = cli_detail::p2_grid();
  const auto pts = power_curves(pi, grid, knots);
  std::ostringstream s;
  s << "p2,A,B,C,D\n";
  for (const auto& p : pts) {
    s << fmt_sig(p.p2, 2) << ',' << fmt_prob(p.a) << ',' << fmt_prob(p.b) << ',' << fmt_prob(p.c)
      << ',' << fmt_prob(p.d) << '\n';
  }
  return s.str();
}

inline void cmd_power(const PowerArgs& a, const cli_detail::OutputDir& dir, RunManifest& manifest,
                      std::ostream& out) {
  cli_detail::check_probability(a.alpha, "alpha");
  if (!(a.w1 > 0.0 && a.w1 < 1.0)) throw ValidationError("w1 must lie in (0,1)");
  PowerInputs pi;
  pi.w = Weights::from_first(a.w1);
  pi.d1_t1 = a.d1_t1;
  pi.d1_tmax = a.d1_tmax;
  pi.theta_R = a.theta;
  pi.alpha = a.alpha;
  pi.validate();
  pi.k_star = a.k_star >= 0.0 ? a.k_star : corrected_kstar(a.w1, pi.u1(), a.alpha, a.knots);
  manifest.parameters = {{"d1_t1", std::to_string(a.d1_t1)},
                         {"d1_tmax", std::to_string(a.d1_tmax)},
                         {"w1", detail::format_real(a.w1)},
                         {"theta", detail::format_real(a.theta)},
                         {"alpha", detail::format_real(a.alpha)},
                         {"k_star", detail::format_real(pi.k_star)},
                         {"knots", std::to_string(a.knots)}};
  out << "k_star = " << fmt_cutoff(pi.k_star) << '\n';
  out << "wrote " << dir.write("power.csv", power_csv(pi, a.knots)).string() << '\n';
}

inline std::string summary_csv(const SimSummary& s) {
  std::ostringstream o;
  o << "variant,rejections,replications,rate,se\n";
  auto row = [&](const char* name, const RateEstimate& r) {
    o << name << ',' << r.rejections << ',' << r.replications << ',' << fmt_prob(r.rate()) << ','
      << fmt_prob(r.se()) << '\n';
  };
  row("combination", s.combination);
  row("naive_zstar", s.naive);
  row("corrected_kstar", s.corrected);
  return o.str();
}

inline std::string events_csv(const SimSummary& s) {
  std::ostringstream o;
  o << "quantity,value\n";
  o << "replications," << s.replications << '\n';
  o << "psi_evaluated," << s.psi_evaluated << '\n';
  o << "psi_agreements," << s.psi_agreements << '\n';
  o << "mean_d1_t1," << fmt_sig(s.mean_d1_t1, 6) << '\n';
  o << "mean_d1_tmax," << fmt_sig(s.mean_d1_window_end, 6) << '\n';
  o << "mean_d_final," << fmt_sig(s.mean_d_final, 6) << '\n';
  o << "mean_information_deficit," << fmt_sig(s.mean_information_deficit, 6) << '\n';
  o << "mean_w1," << fmt_sig(s.mean_w1, 6) << '\n';
  o << "mean_u1," << fmt_sig(s.mean_u1, 6) << '\n';
  o << "mean_k_star," << fmt_cutoff(s.mean_k_star) << '\n';
  return o.str();
}

inline void cmd_simulate(const SimulateArgs& a, const cli_detail::OutputDir& dir,
                         RunManifest& manifest, std::ostream& out) {
  if (a.reps < 1) throw ValidationError("reps must be >= 1");
  if (a.threads < 0) throw ValidationError("threads must be >= 0");
  const ScenarioConfig sc = parse_scenario(a.scenario);
  SimOptions opt;
  opt.threads = a.threads;
  opt.knot_segments = a.knots;
  const SimResult res = operating_characteristics(sc, sc.rule, a.reps, a.seed, opt);
  manifest.seed = a.seed;
  manifest.scenario = sc;
  manifest.parameters = {{"reps", std::to_string(a.reps)}, {"knots", std::to_string(a.knots)}};
  out << summary_csv(res.summary);
  dir.write("summary.csv", summary_csv(res.summary));
  dir.write("events.csv", events_csv(res.summary));
}

/// Decisions computed from snapshot values (scores and event counts).
inline cli_detail::Report analyze_snapshots(const TwoStageSnapshots& s, double alpha,
                                            std::int64_t d1_tmax, int knots) {
  cli_detail::Report r;
  const Weights w = irle_weights(s.d1_t12, s.d12);
  const double p1 = p1_first_stage(s.s1_t12, s.d1_t12);
  const double p2 = p2_increment(s.s12_star, s.s1_star, s.d12_star, s.d1_star);
  const auto eq = equivalence_check(s, alpha);
  const double z_star = z_star_naive(w, s.s1_star, s.d1_star, p2);
  const double cut = z_from_p(alpha);
  r.add("w1", fmt_prob(w.w1()));
  r.add("p1", fmt_prob(p1));
  r.add("p2", fmt_prob(p2));
  r.add("z", fmt_cutoff(eq.combination.z));
  r.add("cutoff", fmt_cutoff(cut));
  r.add("combination_decision", eq.combination.reject ? "reject" : "no reject");
  r.add("conditional_error", fmt_prob(eq.record.ce));
  r.add("c_star", fmt_cutoff(eq.record.c_star));
  r.add("b_star", fmt_cutoff(eq.record.b_star));
  r.add("psi_statistic", fmt_cutoff(2.0 * s.s12_star / std::sqrt(static_cast<double>(s.d12_star))));
  r.add("psi_decision", eq.psi ? "reject" : "no reject");
  r.add("z_star", fmt_cutoff(z_star));
  r.add("naive_decision", decide(z_star, cut).reject ? "reject" : "no reject");
  if (d1_tmax > 0) {
    if (d1_tmax < s.d1_t12) throw ValidationError("d1-tmax must be >= d1-t12");
    const double u1 = static_cast<double>(s.d1_t12) / static_cast<double>(d1_tmax);
    const double k = corrected_kstar(w.w1(), u1, alpha, knots);
    r.add("u1", fmt_prob(u1));
    r.add("k_star", fmt_cutoff(k));
    r.add("corrected_decision", decide(z_star, k).reject ? "reject" : "no reject");
  }
  return r;
}

/// Decisions from a dataset. Irle weighting runs the conditional-error path
/// as well; Jenkins weighting fixes T1 at the d1-th first-stage event.
inline cli_detail::Report analyze_dataset(std::span<const SubjectRecord> data, const AnalyzeArgs& a) {
  cli_detail::Report r;
  const auto first = select_stage(data, Stage::First);
  const auto second = select_stage(data, Stage::Second);
  if (first.empty() || second.empty()) throw ValidationError("dataset needs both stages");
  if (a.d12 < 2) throw ValidationError("d12 must be >= 2");
  const std::int64_t d_final = a.d12_star > 0 ? a.d12_star : a.d12;
  if (d_final < a.d12) throw ValidationError("d12-star must be >= d12");
  const double cut = z_from_p(a.alpha);
  const double t12 = calendar_time_of_event_count(data, a.d12);
  const double t_final = calendar_time_of_event_count(data, d_final);
  const bool irle = a.weight_rule == "irle";
  if (!irle && a.weight_rule != "jenkins") throw ValidationError("weight-rule must be irle or jenkins");

  double t1 = t12;
  Weights w = Weights::from_first(1.0);
  if (irle) {
    w = irle_weights(event_count(first, t12), a.d12);
  } else {
    t1 = calendar_time_of_event_count(first, a.d1);
    w = jenkins_weights(a.d1, a.d2);
  }
  const Snapshot s1 = snapshot(first, t1);
  const Snapshot f1 = snapshot(first, t_final);
  const Snapshot f12 = snapshot(data, t_final);
  const double z1 = s1.d_events > 0 ? standardized_score(s1.score, s1.d_events) : 0.0;
  double z2 = 0.0;
  if (irle) {
    z2 = z_from_p(p2_increment(f12.score, f1.score, f12.d_events, f1.d_events));
  } else {
    const Snapshot s2 = snapshot(second, t_final);
    z2 = standardized_score(s2.score, s2.d_events);
  }
  const auto comb = decide(combine_standardized(w, z1, z2), cut);
  r.add("t1", fmt_sig(t1, 6));
  r.add("t_final", fmt_sig(t_final, 6));
  r.add("d1_t1", std::to_string(s1.d_events));
  r.add("w1", fmt_prob(w.w1()));
  r.add("p1", fmt_prob(norm_sf(z1)));
  r.add("p2", fmt_prob(norm_sf(z2)));
  r.add("z", fmt_cutoff(comb.z));
  r.add("cutoff", fmt_cutoff(cut));
  r.add("combination_decision", comb.reject ? "reject" : "no reject");
  if (irle) {
    TwoStageSnapshots ts{s1.score, s1.d_events, a.d12, f1.score, f1.d_events, f12.score, f12.d_events};
    const auto eq = equivalence_check(ts, a.alpha);
    r.add("conditional_error", fmt_prob(eq.record.ce));
    r.add("b_star", fmt_cutoff(eq.record.b_star));
    r.add("psi_decision", eq.psi ? "reject" : "no reject");
  }
  const double z_star = combine_standardized(w, f1.d_events > 0 ? standardized_score(f1.score, f1.d_events) : 0.0, z2);
  r.add("z_star", fmt_cutoff(z_star));
  r.add("naive_decision", decide(z_star, cut).reject ? "reject" : "no reject");
  double t_max = a.t_max;
  if (t_max < 0.0) {
    t_max = 0.0;
    for (const auto& s : first) t_max = std::max(t_max, s.event_time());
  }
  t_max = std::max(t_max, t_final);
  const auto d1_max = event_count(first, t_max);
  if (d1_max > 0 && s1.d_events > 0 && w.w1() > 0.0) {
    const double u1 = static_cast<double>(s1.d_events) / static_cast<double>(d1_max);
    const double k = u1 < 1.0 ? corrected_kstar(w.w1(), u1, a.alpha, a.knots) : cut;
    r.add("u1", fmt_prob(u1));
    r.add("k_star", fmt_cutoff(k));
    r.add("corrected_decision", decide(z_star, k).reject ? "reject" : "no reject");
  }
  return r;
}

inline void cmd_analyze(const AnalyzeArgs& a, const cli_detail::OutputDir& dir,
                        RunManifest& manifest, std::ostream& out) {
  cli_detail::check_probability(a.alpha, "alpha");
  cli_detail::Report r;
  if (a.snapshots) {
    const TwoStageSnapshots s{a.s1_t12, a.d1_t12, a.d12, a.s1_star, a.d1_star, a.s12_star, a.d12s};
    r = analyze_snapshots(s, a.alpha, a.d1_tmax, a.knots);
  } else {
    if (a.data.empty()) throw ValidationError("analyze needs --data or --snapshots");
    const auto data = parse_dataset(a.data);
    r = analyze_dataset(data, a);
  }
  manifest.parameters = {{"alpha", detail::format_real(a.alpha)}, {"d12", std::to_string(a.d12)}};
  out << r.text();
  dir.write("analysis.csv", r.csv());
}

// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"adsurv: adaptive survival trial designs with data-dependent follow-up"};
  app.require_subcommand(1);
  std::string out_dir;
  app.add_option("--out", out_dir, "output directory (default: working directory)");

  DesignArgs design;
  auto* c_design = app.add_subcommand("design", "required and expected event counts");
  c_design->add_option("--scenario", design.scenario, "scenario file")->check(CLI::ExistingFile);
  c_design->add_option("--alpha", design.alpha, "one-sided level");
  c_design->add_option("--beta", design.beta, "type II error");
  c_design->add_option("--theta", design.theta, "target log hazard ratio");

  BoundArgs bound;
  auto* c_bound = app.add_subcommand("bound", "worst-case type I error of the naive statistic");
  c_bound->add_option("--w1", bound.w1, "first-stage weight")->required();
  c_bound->add_option("--u1", bound.u1, "information time of T1")->required();
  c_bound->add_option("--alpha", bound.alpha, "one-sided level")->required();
  c_bound->add_option("--knots", bound.knots, "boundary segments");

  TableArgs table;
  auto* c_table = app.add_subcommand("cutoff-table", "corrected cutoffs k* on a decile grid");
  c_table->add_option("--alpha", table.alpha, "one-sided level")->required();
  c_table->add_option("--knots", table.knots, "boundary segments");
  c_table->add_option("--rows", table.rows, "row labels: w1sq (default) or w1")
      ->check(CLI::IsMember({"w1sq", "w1"}));

  PowerArgs power;
  auto* c_power = app.add_subcommand("power-curves", "power A-D against p2");
  c_power->add_option("--d1-t1", power.d1_t1, "first-stage events at T1")->required();
  c_power->add_option("--d1-tmax", power.d1_tmax, "first-stage events at Tmax")->required();
  c_power->add_option("--w1", power.w1, "first-stage weight")->required();
  c_power->add_option("--theta", power.theta, "log hazard ratio")->required();
  c_power->add_option("--alpha", power.alpha, "one-sided level")->required();
  c_power->add_option("--k-star", power.k_star, "corrected cutoff (default: computed)");
  c_power->add_option("--knots", power.knots, "boundary segments");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "operating characteristics by simulation");
  c_sim->add_option("--scenario", sim.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--seed", sim.seed, "base seed")->required();
  c_sim->add_option("--reps", sim.reps, "replications");
  c_sim->add_option("--threads", sim.threads, "worker threads (0: all cores)");
  c_sim->add_option("--knots", sim.knots, "boundary segments for k*");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "decisions for one trial");
  c_an->add_option("--alpha", an.alpha, "one-sided level")->required();
  c_an->add_option("--knots", an.knots, "boundary segments");
  c_an->add_option("--d12", an.d12, "planned number of events")->required();
  c_an->add_option("--data", an.data, "dataset CSV (entry,surv,arm,stage)")->check(CLI::ExistingFile);
  c_an->add_option("--d12-star", an.d12_star, "extended number of events");
  c_an->add_option("--weight-rule", an.weight_rule, "irle or jenkins")->check(CLI::IsMember({"irle", "jenkins"}));
  c_an->add_option("--d1", an.d1, "jenkins: envisioned first-stage events");
  c_an->add_option("--d2", an.d2, "jenkins: envisioned second-stage events");
  c_an->add_option("--t-max", an.t_max, "end of first-stage monitoring window");
  c_an->add_flag("--snapshots", an.snapshots, "use the snapshot values below instead of a dataset");
  c_an->add_option("--s1-t12", an.s1_t12, "first-stage score at T12");
  c_an->add_option("--d1-t12", an.d1_t12, "first-stage events at T12");
  c_an->add_option("--s1-star", an.s1_star, "first-stage score at T12*");
  c_an->add_option("--d1-star", an.d1_star, "first-stage events at T12*");
  c_an->add_option("--s12-star", an.s12_star, "pooled score at T12*");
  c_an->add_option("--d12s", an.d12s, "pooled events at T12*");
  c_an->add_option("--d1-tmax", an.d1_tmax, "first-stage events at Tmax (enables k*)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error category=parse message=\"" << cli_detail::one_line(e.what()) << "\"\n";
    return kExitInvalid;
  }

  RunManifest manifest;
  manifest.started = cli_detail::utc_now();
  try {
    const cli_detail::OutputDir dir(out_dir);
    bool wants_manifest = true;
    if (c_design->parsed()) {
      manifest.command = "design";
      cmd_design(design, dir, out);
      wants_manifest = false;
    } else if (c_bound->parsed()) {
      manifest.command = "bound";
      cmd_bound(bound, out);
      wants_manifest = false;
    } else if (c_table->parsed()) {
      manifest.command = "cutoff-table";
      cmd_cutoff_table(table, dir, manifest, out);
    } else if (c_power->parsed()) {
      manifest.command = "power-curves";
      cmd_power(power, dir, manifest, out);
    } else if (c_sim->parsed()) {
      manifest.command = "simulate";
      cmd_simulate(sim, dir, manifest, out);
    } else {
      manifest.command = "analyze";
      cmd_analyze(an, dir, manifest, out);
    }
    if (wants_manifest) {
      manifest.finished = cli_detail::utc_now();
      dir.write("manifest.txt", emit_manifest(manifest));
    }
  } catch (const Error& e) {
    err << "error category=" << category_name(e.category()) << " message=\""
        << cli_detail::one_line(e.what()) << "\"\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "error category=numerical message=\"" << cli_detail::one_line(e.what()) << "\"\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace adsurv
