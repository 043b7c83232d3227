#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"

namespace xferlab::cli {

/// A numeric claim with the rule and tolerance that decide it.
struct Claim {
  std::string name;
  double value = 0.0;
  std::string rule;
  double tolerance = 0.0;
  bool enforced = true;
  bool pass = false;
};

class Report {
 public:
  Report(std::string task, json inputs) : task_(std::move(task)), inputs_(std::move(inputs)) {}

  json& results() { return results_; }

  /// value <= tolerance.
  void at_most(const std::string& name, double value, double tolerance) {
    add(name, value, "value <= tolerance", tolerance, value <= tolerance);
  }

  /// |value - expected| <= tolerance.
  void near(const std::string& name, double value, double expected, double tolerance) {
    std::ostringstream rule;
    rule << "|value - " << std::setprecision(17) << expected << "| <= tolerance";
    add(name, value, rule.str(), tolerance, std::abs(value - expected) <= tolerance);
  }

  /// |mean - exact| <= k stderr.
  void within_stderr(const std::string& name, const McEstimate& e, double exact, double k = 3.0) {
    std::ostringstream rule;
    rule << "|mc - " << std::setprecision(17) << exact << "| <= " << k << " * stderr";
    add(name, e.mean, rule.str(), k * e.stderr_, e.within(exact, k));
  }

  void holds(const std::string& name, bool ok, const std::string& rule) { add(name, ok ? 1.0 : 0.0, rule, 0.0, ok); }

  void disable(const std::vector<std::string>& names) { disabled_ = names; }

  bool pass() const {
    for (const auto& c : claims_) {
      if (c.enforced && !c.pass) return false;
    }
    return true;
  }

  json to_json() const {
    json claims = json::array();
    for (const auto& c : claims_) {
      claims.push_back({{"name", c.name},
                        {"value", c.value},
                        {"rule", c.rule},
                        {"tolerance", c.tolerance},
                        {"enforced", c.enforced},
                        {"pass", c.pass}});
    }
    return {{"task", task_}, {"inputs", inputs_}, {"results", results_}, {"claims", claims}, {"pass", pass()}};
  }

  std::string claims_csv() const {
    std::ostringstream out;
    out << std::setprecision(17) << "name,value,rule,tolerance,enforced,pass\n";
    for (const auto& c : claims_) {
      out << c.name << ',' << c.value << ",\"" << c.rule << "\"," << c.tolerance << ',' << (c.enforced ? 1 : 0) << ','
          << (c.pass ? 1 : 0) << '\n';
    }
    return out.str();
  }

 private:
  void add(const std::string& name, double value, const std::string& rule, double tolerance, bool ok) {
    bool enforced = true;
    for (const auto& d : disabled_) enforced = enforced && d != name;
    claims_.push_back({name, value, rule, tolerance, enforced, ok});
  }

  std::string task_;
  json inputs_;
  json results_ = json::object();
  std::vector<Claim> claims_;
  std::vector<std::string> disabled_;
};

/// Plot data: a header row plus numeric or text cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
  }

  std::string csv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
    return out.str();
  }

  bool empty() const { return header.empty(); }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << content;
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace xferlab::cli
