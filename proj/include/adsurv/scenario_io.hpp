#pragma once

// Text formats: INI-style scenario files, dataset CSVs and run manifests.
//
// Scenario schema (all statistical parameters are required):
//
//   [accrual]       rate, months
//   [followup]      months
//   [control]       model = exponential (lambda) | diverging (base, slope, limit)
//   [experimental]  same keys as [control]
//   [design]        alpha, beta, theta_R, d12 (integer or "auto"),
//                   weight_rule = irle | jenkins (jenkins also needs d1, d2)
//   [interim]       at_events | at_month (exactly one)
//   [rule]          kind = none | increase | adversarial, d12_star (increase only)

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adsurv/errors.hpp"
#include "adsurv/sim_engine.hpp"
#include "adsurv/surv_core.hpp"

namespace adsurv {

inline constexpr const char* kToolVersion = "0.3.0";

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

inline double parse_real(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(where + ": expected a number, got '" + text + "'");
  }
  return v;
}

inline std::int64_t parse_int(const std::string& text, const std::string& where) {
  std::int64_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(where + ": expected an integer, got '" + text + "'");
  }
  return v;
}

// Shortest round-tripping decimal form.
inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

class SectionReader {
 public:
  SectionReader(std::string name, const Section* sec) : name_(std::move(name)), sec_(sec) {}

  bool has(const std::string& key) const { return sec_ && sec_->count(key); }

  const Entry& entry(const std::string& key) const {
    if (!has(key)) throw ParseError("[" + name_ + "] missing required key '" + key + "'");
    used_.insert(key);
    return sec_->at(key);
  }

  std::string where(const std::string& key) const {
    return "line " + std::to_string(sec_->at(key).line) + " [" + name_ + "] " + key;
  }

  double real(const std::string& key) const {
    const auto& e = entry(key);
    return parse_real(e.value, where(key));
  }

  std::int64_t integer(const std::string& key) const {
    const auto& e = entry(key);
    return parse_int(e.value, where(key));
  }

  std::string word(const std::string& key) const { return lower(entry(key).value); }

  void reject_unused() const {
    if (!sec_) return;
    for (const auto& [key, e] : *sec_) {
      if (!used_.count(key)) {
        throw ParseError("line " + std::to_string(e.line) + " [" + name_ + "] unknown key '" +
                         key + "'");
      }
    }
  }

 private:
  std::string name_;
  const Section* sec_;
  mutable std::set<std::string> used_;
};

inline HazardModel read_hazard(const SectionReader& r, const std::string& section) {
  const std::string model = r.word("model");
  if (model == "exponential") return Exponential{r.real("lambda")};
  if (model == "diverging") return DivergingControl{r.real("base"), r.real("slope"), r.real("limit")};
  throw ParseError(r.where("model") + ": unknown model '" + model + "' in [" + section + "]");
}

}  // namespace detail

/// Parses scenario text. Unknown sections or keys are ParseErrors; values
/// violating model invariants are ValidationErrors.
inline ScenarioConfig parse_scenario_text(const std::string& text) {
  std::map<std::string, detail::Section> sections;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("line " + std::to_string(line_no) + ": malformed section header");
      current = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known{"accrual", "followup", "control", "experimental",
                                               "design", "interim", "rule"};
      if (!known.count(current)) {
        throw ParseError("line " + std::to_string(line_no) + ": unknown section [" + current + "]");
      }
      if (sections.count(current)) {
        throw ParseError("line " + std::to_string(line_no) + ": duplicate section [" + current + "]");
      }
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (current.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": key outside of any section");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty key");
    auto& sec = sections[current];
    if (sec.count(key)) {
      throw ParseError("line " + std::to_string(line_no) + " [" + current + "] duplicate key '" + key + "'");
    }
    sec[key] = {value, line_no};
  }

  auto reader = [&](const std::string& name, bool required = true) {
    auto it = sections.find(name);
    if (it == sections.end()) {
      if (required) throw ParseError("missing section [" + name + "]");
      return detail::SectionReader(name, nullptr);
    }
    return detail::SectionReader(name, &it->second);
  };

  ScenarioConfig sc;
  const auto accrual = reader("accrual");
  sc.accrual_rate = accrual.real("rate");
  sc.accrual_months = accrual.real("months");
  const auto followup = reader("followup");
  sc.followup_months = followup.real("months");
  const auto control = reader("control");
  sc.control = detail::read_hazard(control, "control");
  const auto experimental = reader("experimental");
  sc.experimental = detail::read_hazard(experimental, "experimental");

  const auto design = reader("design");
  const double alpha = design.real("alpha");
  const double beta = design.real("beta");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError(design.where("alpha") + ": alpha must lie in (0,1), got " + design.entry("alpha").value);
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ValidationError(design.where("beta") + ": beta must lie in (0,1), got " + design.entry("beta").value);
  }
  sc.design.alpha = alpha;
  sc.design.beta = beta;
  sc.design.theta_R = design.real("theta_R");
  if (!(sc.design.theta_R > 0.0)) throw ValidationError(design.where("theta_R") + ": theta_R must be > 0");
  const std::string d12 = design.word("d12");
  if (d12 == "auto") {
    sc.design.d12 = required_events(sc.design.alpha, sc.design.beta, sc.design.theta_R).rounded;
  } else {
    sc.design.d12 = detail::parse_int(d12, design.where("d12"));
  }
  const std::string weight = design.word("weight_rule");
  if (weight == "irle") {
    sc.design.weight_rule = IrleRule{};
  } else if (weight == "jenkins") {
    sc.design.weight_rule = JenkinsRule{design.integer("d1"), design.integer("d2")};
  } else {
    throw ParseError(design.where("weight_rule") + ": expected irle or jenkins, got '" + weight + "'");
  }

  const auto interim = reader("interim");
  const bool by_events = interim.has("at_events");
  const bool by_month = interim.has("at_month");
  if (by_events == by_month) throw ParseError("[interim] needs exactly one of at_events, at_month");
  if (by_events) {
    sc.interim = {Interim::Kind::AtEvents, static_cast<double>(interim.integer("at_events"))};
  } else {
    sc.interim = {Interim::Kind::AtMonth, interim.real("at_month")};
  }

  const auto rule = reader("rule", false);
  if (rule.has("kind")) {
    const std::string kind = rule.word("kind");
    if (kind == "none") {
      sc.rule = NoChange{};
    } else if (kind == "increase") {
      sc.rule = IncreaseEvents{rule.integer("d12_star")};
    } else if (kind == "adversarial") {
      sc.rule = AdversarialMaxStop{};
    } else {
      throw ParseError(rule.where("kind") + ": expected none, increase or adversarial, got '" + kind + "'");
    }
  }

  for (const auto* r : {&accrual, &followup, &control, &experimental, &design, &interim, &rule}) {
    r->reject_unused();
  }
  sc.validate();
  return sc;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline ScenarioConfig parse_scenario(const std::string& path) {
  return parse_scenario_text(read_text_file(path));
}

/// Scenario text that parse_scenario_text maps back to `sc`.
inline std::string emit_scenario(const ScenarioConfig& sc) {
  using detail::format_real;
  std::ostringstream out;
  auto hazard = [&](const char* name, const HazardModel& m) {
    out << '[' << name << "]\n";
    if (const auto* e = std::get_if<Exponential>(&m)) {
      out << "model = exponential\nlambda = " << format_real(e->lambda) << '\n';
    } else {
      const auto& d = std::get<DivergingControl>(m);
      out << "model = diverging\nbase = " << format_real(d.base) << "\nslope = "
          << format_real(d.slope) << "\nlimit = " << format_real(d.limit) << '\n';
    }
    out << '\n';
  };
  out << "[accrual]\nrate = " << format_real(sc.accrual_rate)
      << "\nmonths = " << format_real(sc.accrual_months) << "\n\n";
  out << "[followup]\nmonths = " << format_real(sc.followup_months) << "\n\n";
  hazard("control", sc.control);
  hazard("experimental", sc.experimental);
  out << "[design]\nalpha = " << format_real(sc.design.alpha)
      << "\nbeta = " << format_real(sc.design.beta)
      << "\ntheta_R = " << format_real(sc.design.theta_R) << "\nd12 = " << sc.design.d12 << '\n';
  if (const auto* j = std::get_if<JenkinsRule>(&sc.design.weight_rule)) {
    out << "weight_rule = jenkins\nd1 = " << j->d1 << "\nd2 = " << j->d2 << '\n';
  } else {
    out << "weight_rule = irle\n";
  }
  out << "\n[interim]\n";
  if (sc.interim.kind == Interim::Kind::AtEvents) {
    out << "at_events = " << std::llround(sc.interim.value) << '\n';
  } else {
    out << "at_month = " << format_real(sc.interim.value) << '\n';
  }
  out << "\n[rule]\n";
  if (std::holds_alternative<NoChange>(sc.rule)) {
    out << "kind = none\n";
  } else if (const auto* inc = std::get_if<IncreaseEvents>(&sc.rule)) {
    out << "kind = increase\nd12_star = " << inc->d12_star << '\n';
  } else {
    out << "kind = adversarial\n";
  }
  return out.str();
}

inline bool operator==(const DesignSpec& a, const DesignSpec& b) {
  return static_cast<double>(a.alpha) == static_cast<double>(b.alpha) &&
         static_cast<double>(a.beta) == static_cast<double>(b.beta) && a.theta_R == b.theta_R &&
         a.d12 == b.d12 && a.weight_rule == b.weight_rule;
}

inline bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return a.control == b.control && a.experimental == b.experimental &&
         a.accrual_rate == b.accrual_rate && a.accrual_months == b.accrual_months &&
         a.followup_months == b.followup_months && a.interim == b.interim && a.design == b.design &&
         a.rule == b.rule;
}

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::string version = kToolVersion;
  std::string command;
  std::optional<std::uint64_t> seed;
  std::string started;  // ISO-8601 UTC
  std::string finished;
  std::map<std::string, std::string> parameters;
  std::optional<ScenarioConfig> scenario;
};

/// Metadata as '#' comment lines followed by the scenario body, so the file
/// is itself a valid scenario when one is present.
inline std::string emit_manifest(const RunManifest& m) {
  std::ostringstream out;
  out << "# tool_version: " << m.version << '\n';
  out << "# command: " << m.command << '\n';
  if (m.seed) out << "# seed: " << *m.seed << '\n';
  out << "# started: " << m.started << '\n';
  out << "# finished: " << m.finished << '\n';
  for (const auto& [k, v] : m.parameters) out << "# param " << k << ": " << v << '\n';
  if (m.scenario) out << '\n' << emit_scenario(*m.scenario);
  return out.str();
}

inline RunManifest parse_manifest(const std::string& text) {
  RunManifest m;
  std::istringstream in(text);
  std::string line;
  bool body = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) {
      if (!detail::trim(line).empty()) body = true;
      continue;
    }
    const std::string rest = line.substr(2);
    const auto colon = rest.find(": ");
    if (colon == std::string::npos) continue;
    const std::string key = rest.substr(0, colon);
    const std::string value = rest.substr(colon + 2);
    if (key == "tool_version") m.version = value;
    else if (key == "command") m.command = value;
    else if (key == "seed") m.seed = static_cast<std::uint64_t>(detail::parse_int(value, "manifest seed"));
    else if (key == "started") m.started = value;
    else if (key == "finished") m.finished = value;
    else if (key.rfind("param ", 0) == 0) m.parameters[key.substr(6)] = value;
  }
  if (body) m.scenario = parse_scenario_text(text);
  return m;
}

// ---------------------------------------------------------------------------
// Dataset CSV: entry,surv,arm,stage with arm in {C,E} and stage in {1,2}

inline std::vector<SubjectRecord> parse_dataset_text(const std::string& text) {
  std::vector<SubjectRecord> data;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
    const std::string where = "dataset line " + std::to_string(line_no);
    if (!header_seen) {
      header_seen = true;
      std::string joined;
      for (const auto& x : fields) joined += detail::lower(x) + ",";
      if (joined != "entry,surv,arm,stage,") {
        throw ParseError(where + ": expected header entry,surv,arm,stage");
      }
      continue;
    }
    if (fields.size() != 4) throw ParseError(where + ": expected 4 fields");
    SubjectRecord r;
    r.entry = detail::parse_real(fields[0], where + " entry");
    r.surv = detail::parse_real(fields[1], where + " surv");
    const std::string arm = detail::lower(fields[2]);
    if (arm == "c") r.arm = Arm::Control;
    else if (arm == "e") r.arm = Arm::Experimental;
    else throw ParseError(where + ": arm must be C or E");
    if (fields[3] == "1") r.stage = Stage::First;
    else if (fields[3] == "2") r.stage = Stage::Second;
    else throw ParseError(where + ": stage must be 1 or 2");
    if (!(r.entry >= 0.0)) throw ValidationError(where + ": entry must be >= 0");
    if (!(r.surv > 0.0)) throw ValidationError(where + ": surv must be > 0");
    data.push_back(r);
  }
  if (!header_seen) throw ParseError("dataset is empty");
  return data;
}

inline std::vector<SubjectRecord> parse_dataset(const std::string& path) {
  return parse_dataset_text(read_text_file(path));
}

inline std::string emit_dataset(std::span<const SubjectRecord> data) {
  std::ostringstream out;
  out << "entry,surv,arm,stage\n";
  for (const auto& r : data) {
    out << detail::format_real(r.entry) << ',' << detail::format_real(r.surv) << ','
        << (r.arm == Arm::Control ? 'C' : 'E') << ',' << (r.stage == Stage::First ? '1' : '2')
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV number formatting

inline std::string fmt_sig(double v, int digits) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

inline std::string fmt_prob(double v) { return fmt_sig(v, 6); }
inline std::string fmt_cutoff(double v) { return fmt_sig(v, 4); }

}  // namespace adsurv
