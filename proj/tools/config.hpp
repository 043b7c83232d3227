#pragma once

// JSON descriptors for spaces, observables, operators, measures and filters.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xferlab/xferlab.hpp"

namespace xferlab::cli {

using nlohmann::json;

/// Config does not match the schema (exit 2).
struct schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output (exit 3).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw schema_error(path + ": " + e.what());
  }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw schema_error(where + ": missing \"" + key + "\"");
  return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw schema_error(std::string("\"") + key + "\": " + e.what());
  }
}

/// A number or a [re, im] pair.
inline cplx parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw schema_error("expected a number or [re, im], got " + j.dump());
}

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

// ---------------------------------------------------------------------------

using Space = std::variant<FiniteSpace, CircleSpace>;

inline bool is_circle(const Space& s) { return std::holds_alternative<CircleSpace>(s); }

inline std::size_t parse_state(const FiniteSpace& space, const json& j) {
  if (j.is_number_unsigned()) {
    const auto i = j.get<std::size_t>();
    if (i >= space.size()) throw schema_error("state index " + std::to_string(i) + " out of range");
    return i;
  }
  if (j.is_string()) {
    const auto& labels = space.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == j.get<std::string>()) return i;
    }
    throw schema_error("unknown state \"" + j.get<std::string>() + "\"");
  }
  throw schema_error("state must be a label or an index, got " + j.dump());
}

inline Space parse_space(const json& j) {
  const auto type = require(j, "type", "space").get<std::string>();
  if (type == "circle") {
    CircleSpace c;
    c.degree = get_or(j, "degree", kDefaultDegree);
    if (c.degree < 1) throw schema_error("space: degree must be positive");
    return c;
  }
  if (type != "finite") throw schema_error("space: type must be \"finite\" or \"circle\"");
  const json& states = require(j, "states", "space");
  std::vector<std::string> labels;
  if (states.is_number_unsigned()) {
    for (std::size_t i = 0; i < states.get<std::size_t>(); ++i) labels.push_back(std::to_string(i));
  } else if (states.is_array()) {
    for (const auto& s : states) labels.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  } else {
    throw schema_error("space: states must be a list of labels or a count");
  }
  if (labels.empty()) throw schema_error("space: no states");
  if (!j.contains("endo")) return FiniteSpace(labels);
  const FiniteSpace plain(labels);
  std::vector<std::size_t> endo;
  for (const auto& e : j.at("endo")) endo.push_back(parse_state(plain, e));
  try {
    return FiniteSpace(labels, endo);
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("space: ") + e.what());
  }
}

inline std::size_t finite_size(const Space& s) { return std::get<FiniteSpace>(s).size(); }
inline int circle_degree(const Space& s) { return std::get<CircleSpace>(s).degree; }

/// {"values": [...]} on finite carriers, {"fourier": {"n": c}} on the circle.
inline Vec parse_finite_observable(const json& j, std::size_t n) {
  const json& v = require(j, "values", "observable");
  if (!v.is_array() || v.size() != n) {
    throw schema_error("observable: expected " + std::to_string(n) + " values, got " + v.dump());
  }
  Vec out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const cplx c = parse_complex(v[i]);
    if (c.imag() != 0.0) throw schema_error("observable: finite-state observables are real");
    out(static_cast<Eigen::Index>(i)) = c.real();
  }
  return out;
}

inline TrigPoly parse_circle_observable(const json& j, int bound) {
  const json& f = require(j, "fourier", "observable");
  if (!f.is_object()) throw schema_error("observable: fourier must map frequencies to coefficients");
  TrigPoly::Coeffs c;
  for (const auto& [key, value] : f.items()) {
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw schema_error("observable: bad frequency \"" + key + "\"");
    }
    c[n] += parse_complex(value);
  }
  try {
    return TrigPoly(bound, c);
  } catch (const degree_overflow& e) {
    throw schema_error(std::string("observable: ") + e.what());
  }
}

inline json observable_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return {{"values", a}};
}

inline json observable_json(const TrigPoly& p) {
  json f = json::object();
  for (const auto& [n, c] : p.coeffs()) f[std::to_string(n)] = complex_json(c);
  return {{"fourier", f}};
}

// ---------------------------------------------------------------------------

/// {"coeffs": [[re, im], ...], "offset": n0}; a "name" of haar, daubechies4 or
/// stretched_haar is accepted as shorthand.
inline QmfFilter parse_filter(const json& j) {
  if (j.contains("name")) {
    const auto name = j.at("name").get<std::string>();
    if (name == "haar") return QmfFilter::haar();
    if (name == "daubechies4") return QmfFilter::daubechies4();
    if (name == "stretched_haar") return QmfFilter::stretched_haar(get_or(j, "gap", 1));
    throw schema_error("filter: unknown name \"" + name + "\"");
  }
  const json& c = require(j, "coeffs", "filter");
  if (!c.is_array() || c.empty()) throw schema_error("filter: coeffs must be a non-empty list");
  std::vector<cplx> h;
  for (const auto& v : c) h.push_back(parse_complex(v));
  return QmfFilter(std::move(h), get_or(j, "offset", 0));
}

inline json filter_json(const QmfFilter& h) {
  json c = json::array();
  for (auto v : h.coeffs()) c.push_back(complex_json(v));
  return {{"coeffs", c}, {"offset", h.offset()}};
}

// ---------------------------------------------------------------------------

using Operator = std::variant<MatrixOperator, CircleRuelle>;

inline Mat parse_matrix(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) throw schema_error(where + ": rows must be a non-empty list");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw schema_error(where + ": matrix is not square");
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) throw schema_error(where + ": non-numeric entry");
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

inline Operator parse_operator(const json& j, const Space& space) {
  const auto kind = require(j, "kind", "operator").get<std::string>();
  try {
    if (kind == "matrix") {
      if (is_circle(space)) throw schema_error("operator: matrix operators need a finite space");
      MatrixOperator r(parse_matrix(require(j, "rows", "operator"), "operator"));
      if (r.size() != finite_size(space)) throw schema_error("operator: size differs from the state count");
      return r;
    }
    if (kind == "kernel") {
      if (is_circle(space)) throw schema_error("operator: kernel operators need a finite grid space");
      const Mat values = parse_matrix(require(j, "values", "operator"), "operator");
      if (j.contains("grid") && j.at("grid").get<Eigen::Index>() != values.rows()) {
        throw schema_error("operator: grid differs from the kernel size");
      }
      MatrixOperator r = kernel_operator(IntegralKernel::on_uniform_grid(values));
      if (r.size() != finite_size(space)) throw schema_error("operator: kernel grid differs from the state count");
      return r;
    }
    if (kind == "ruelle") {
      if (!is_circle(space)) {
        const auto& fs = std::get<FiniteSpace>(space);
        if (j.contains("weight")) return MatrixOperator::ruelle(fs, parse_finite_observable(j.at("weight"), fs.size()));
        return MatrixOperator::ruelle(fs);
      }
      const int bound = circle_degree(space);
      if (j.contains("filter")) {
        const json& f = j.at("filter");
        const TrigPoly m0 = f.contains("fourier") ? parse_circle_observable(f, bound) : parse_filter(f).m0(bound);
        return CircleRuelle::from_filter(m0);
      }
      if (j.contains("weight")) return CircleRuelle(parse_circle_observable(j.at("weight"), bound));
      return CircleRuelle::uniform(bound);
    }
  } catch (const schema_error&) {
    throw;
  } catch (const missing_endomorphism& e) {
    throw schema_error(std::string("operator: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("operator: ") + e.what());
  } catch (const std::domain_error& e) {
    throw schema_error(std::string("operator: ") + e.what());
  }
  throw schema_error("operator: kind must be matrix, ruelle or kernel");
}

/// "uniform", "stationary", {"values": [...]} or {"point": state}.
inline FiniteMeasure parse_measure(const json& j, const FiniteSpace& space, const MatrixOperator& r) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "uniform") return FiniteMeasure::uniform(space.size());
    if (s == "stationary") return invariant_measure(r).measure;
    throw schema_error("measure: unknown name \"" + s + "\"");
  }
  if (j.contains("point")) return FiniteMeasure::point_mass(space.size(), parse_state(space, j.at("point")));
  try {
    return FiniteMeasure(parse_finite_observable(j, space.size()));
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("measure: ") + e.what());
  }
}

inline Angle parse_angle(const json& j) {
  try {
    if (j.is_string()) return Angle::parse(j.get<std::string>());
    if (j.is_number_integer()) return Angle(j.get<std::int64_t>(), 1);
  } catch (const std::exception& e) {
    throw schema_error(std::string("angle: ") + e.what());
  }
  throw schema_error("angle must be \"p/q\" turns, got " + j.dump());
}

/// {"entries": [...], "depth": n}.
inline CircleSolenoidWord parse_solenoid_word(const json& j) {
  const json& e = require(j, "entries", "solenoid word");
  std::vector<Angle> x;
  for (const auto& a : e) x.push_back(parse_angle(a));
  if (j.contains("depth") && j.at("depth").get<std::size_t>() != x.size()) {
    throw schema_error("solenoid word: depth differs from the entry count");
  }
  try {
    return CircleSolenoidWord(std::move(x), CircleDoubling{});
  } catch (const std::exception& ex) {
    throw schema_error(std::string("solenoid word: ") + ex.what());
  }
}

inline json solenoid_word_json(const std::vector<Angle>& x) {
  json e = json::array();
  for (const auto& a : x) e.push_back(a.str());
  return {{"entries", e}, {"depth", x.size()}};
}

// ---------------------------------------------------------------------------

/// Inline edges [[u, v, c], ...] or an edge-list CSV file, plus {"vertex": value} boundary data.
inline graph::Network parse_network(const json& params) {
  graph::Network net = [&] {
    if (params.contains("edge_file")) {
      const auto path = params.at("edge_file").get<std::string>();
      std::ifstream in(path);
      if (!in) throw io_error("cannot read " + path);
      return graph::parse_edge_list(in);
    }
    const json& edges = require(params, "edges", "params");
    std::stringstream csv;
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 3) throw schema_error("edges: each edge is [u, v, c]");
      auto label = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      csv << label(e[0]) << ',' << label(e[1]) << ',' << e[2].dump() << '\n';
    }
    return graph::parse_edge_list(csv);
  }();
  std::map<std::size_t, double> boundary;
  if (params.contains("boundary")) {
    for (const auto& [vertex, value] : params.at("boundary").items()) {
      if (!value.is_number()) throw schema_error("boundary: value for " + vertex + " is not a number");
      boundary[net.index_of(vertex)] = value.get<double>();
    }
  }
  return net.with_boundary(boundary);
}

}  // namespace xferlab::cli
