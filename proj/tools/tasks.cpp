#include "tasks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace xferlab::cli {

namespace {

constexpr double kExactTolerance = 1e-12;

struct Experiment {
  std::string task;
  json config;
  json params;
  std::optional<std::uint64_t> seed;

  const json* find(const char* key) const {
    if (params.contains(key)) return &params.at(key);
    if (config.contains(key)) return &config.at(key);
    return nullptr;
  }

  std::uint64_t require_seed(const std::string& why) const {
    if (!seed) throw schema_error(task + ": a seed is required for " + why + " (config \"seed\" or --seed)");
    return *seed;
  }

  Space space() const { return parse_space(require(config, "space", task)); }

  std::string operator_kind() const {
    return config.contains("operator") ? get_or<std::string>(config.at("operator"), "kind", "") : "";
  }

  Operator op(const Space& s) const { return parse_operator(require(config, "operator", task), s); }

  QmfFilter filter() const {
    if (params.contains("filter")) return parse_filter(params.at("filter"));
    if (config.contains("filter")) return parse_filter(config.at("filter"));
    if (config.contains("operator") && config.at("operator").contains("filter")) {
      return parse_filter(config.at("operator").at("filter"));
    }
    throw schema_error(task + ": missing \"filter\"");
  }
};

template <class T>
T param(const Experiment& e, const char* key, T fallback) {
  return get_or(e.params, key, fallback);
}

std::vector<Vec> finite_word(const json& j, std::size_t n) {
  if (!j.is_array() || j.empty()) throw schema_error("word must be a non-empty list of observables");
  std::vector<Vec> w;
  for (const auto& o : j) w.push_back(parse_finite_observable(o, n));
  return w;
}

std::vector<TrigPoly> circle_word(const json& j, int bound) {
  if (!j.is_array() || j.empty()) throw schema_error("word must be a non-empty list of observables");
  std::vector<TrigPoly> w;
  for (const auto& o : j) w.push_back(parse_circle_observable(o, bound));
  return w;
}

template <class Obs>
json word_json(const CylinderFunctional<Obs>& f) {
  json a = json::array();
  for (const auto& phi : f.word()) a.push_back(observable_json(phi));
  return a;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

FiniteMeasure measure_for(const Experiment& e, const FiniteSpace& space, const MatrixOperator& r) {
  const json* m = e.find("measure");
  return m ? parse_measure(*m, space, r) : invariant_measure(r).measure;
}

// ---------------------------------------------------------------------------

void expectation(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const Space space = e.space();
  const Operator op = e.op(space);
  const json& word_spec = require(e.params, "word", "params");
  const auto samples = param<std::size_t>(e, "samples", 0);
  const auto threads = param<unsigned>(e, "threads", 0);
  json& res = rep.results();
  res["n_samples"] = samples;

  if (!is_circle(space)) {
    const auto& fs = std::get<FiniteSpace>(space);
    const auto& r = std::get<MatrixOperator>(op);
    const auto word = make_word(finite_word(word_spec, fs.size()));
    res["word"] = word_json(word);
    PathEnsemble<std::size_t> ens;
    double exact = 0.0;
    if (e.params.contains("x")) {
      const std::size_t x = parse_state(fs, e.params.at("x"));
      exact = cylinder_expectation(r, x, word);
      res["x"] = fs.labels()[x];
      if (samples > 0) ens = sample_paths(r, x, word.size(), samples, e.require_seed("Monte Carlo"), threads);
    } else {
      const FiniteMeasure mu = measure_for(e, fs, r);
      exact = sigma_expectation(mu, r, word);
      res["measure"] = vec_json(mu.weights());
      if (samples > 0) ens = sample_paths(r, mu, word.size(), samples, e.require_seed("Monte Carlo"), threads);
    }
    res["exact"] = exact;
    if (word.size() < kMaxExactDepth) rep.at_most("kolmogorov_consistency", kolmogorov_residual(r, word), kExactTolerance);
    if (samples > 0) {
      const auto est = mc_estimate(ens, word);
      res["mc"] = est.mean;
      res["stderr"] = est.stderr_;
      rep.within_stderr("mc_agreement", est, exact);
    }
    return;
  }

  const int bound = circle_degree(space);
  const auto& r = std::get<CircleRuelle>(op);
  const auto word = make_word(circle_word(word_spec, bound));
  res["word"] = word_json(word);
  PathEnsemble<Angle> ens;
  cplx exact{};
  if (e.params.contains("x")) {
    const Angle x = parse_angle(e.params.at("x"));
    exact = cylinder_expectation(r, x, word);
    res["x"] = x.str();
    if (samples > 0) ens = sample_paths(r, x, word.size(), samples, e.require_seed("Monte Carlo"), threads);
  } else {
    exact = sigma_expectation(HaarMeasure{}, r, word);
    res["measure"] = "haar";
    // Roots on the grid j / N integrate |n| <= bound < N exactly.
    const auto root_den = param<std::int64_t>(e, "root_den", 2 * bound + 1);
    if (root_den <= bound) throw schema_error("expectation: root_den must exceed the degree bound");
    res["root_den"] = root_den;
    if (samples > 0) {
      ens = sample_paths(r, HaarMeasure{}, root_den, word.size(), samples, e.require_seed("Monte Carlo"), threads);
    }
  }
  res["exact"] = complex_json(exact);
  rep.at_most("kolmogorov_consistency", kolmogorov_residual(r, word), kExactTolerance);
  if (samples > 0) {
    const auto re = mc_estimate(ens, [&](const std::vector<Angle>& p) { return path_value(word, p).real(); });
    const auto im = mc_estimate(ens, [&](const std::vector<Angle>& p) { return path_value(word, p).imag(); });
    res["mc"] = json::array({re.mean, im.mean});
    res["stderr"] = json::array({re.stderr_, im.stderr_});
    rep.within_stderr("mc_agreement_re", re, exact.real());
    rep.within_stderr("mc_agreement_im", im, exact.imag());
  }
}

// ---------------------------------------------------------------------------

void sample(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const std::uint64_t seed = e.require_seed("sampling");
  const Space space = e.space();
  const Operator op = e.op(space);
  const auto depth = require(e.params, "depth", "params").get<std::size_t>();
  const auto count = require(e.params, "count", "params").get<std::size_t>();
  const auto threads = param<unsigned>(e, "threads", 0);
  if (depth == 0) throw schema_error("sample: depth must be at least 1");
  json& res = rep.results();
  res["depth"] = depth;
  res["count"] = count;
  res["seed"] = seed;
  out.table.header.push_back("sample");
  for (std::size_t i = 1; i <= depth; ++i) out.table.header.push_back("x" + std::to_string(i));

  if (!is_circle(space)) {
    const auto& fs = std::get<FiniteSpace>(space);
    const auto& r = std::get<MatrixOperator>(op);
    PathEnsemble<std::size_t> ens;
    if (e.params.contains("x")) {
      ens = sample_paths(r, parse_state(fs, e.params.at("x")), depth, count, seed, threads);
    } else {
      ens = sample_paths(r, measure_for(e, fs, r), depth, count, seed, threads);
    }
    res["fingerprint"] = ens.fingerprint;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (auto s : ens.samples[i]) row.push_back(fs.labels()[s]);
      out.table.rows.push_back(std::move(row));
    }
    if (fs.has_endo()) {
      const auto c = compatibility_violations(ens, endo_of(fs));
      res["transitions"] = c.transitions;
      res["compatibility_violations"] = c.violations;
      if (e.operator_kind() == "ruelle") {
        rep.near("compatibility_violations", static_cast<double>(c.violations), 0.0, 0.0);
      }
    }
    return;
  }

  const auto& r = std::get<CircleRuelle>(op);
  const Angle x = e.params.contains("x") ? parse_angle(e.params.at("x")) : Angle(0, 1);
  const auto ens = sample_paths(r, x, depth, count, seed, threads);
  res["x"] = x.str();
  res["fingerprint"] = ens.fingerprint;
  json words = json::array();
  for (std::size_t i = 0; i < ens.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (const auto& a : ens.samples[i]) row.push_back(a.str());
    out.table.rows.push_back(std::move(row));
    if (i < 10) words.push_back(solenoid_word_json(ens.samples[i]));
  }
  res["words"] = words;
  const auto c = compatibility_violations(ens, CircleDoubling{});
  res["transitions"] = c.transitions;
  res["compatibility_violations"] = c.violations;
  rep.near("compatibility_violations", static_cast<double>(c.violations), 0.0, 0.0);
}

// ---------------------------------------------------------------------------

void invariance(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const Space space = e.space();
  const Operator op = e.op(space);
  json& res = rep.results();
  if (!is_circle(space)) {
    const auto& fs = std::get<FiniteSpace>(space);
    const auto& r = std::get<MatrixOperator>(op);
    rep.at_most("unital", r.unital_residual(), kExactTolerance);
    const auto inv = invariant_measure(r);
    res["invariant_measure"] = vec_json(inv.measure.weights());
    res["closed_classes"] = inv.closed_classes;
    res["unique"] = inv.unique();
    if (!inv.warning.empty()) res["warning"] = inv.warning;
    rep.at_most("invariant_measure_stationarity", stationarity_residual(r, inv.measure), kExactTolerance);
    const auto battery = designated_battery(fs.size());
    rep.at_most("shift_invariance_at_invariant_measure", shift_invariance_residual(inv.measure, r, battery),
                kExactTolerance);
    if (const json* m = e.find("measure")) {
      const FiniteMeasure mu = parse_measure(*m, fs, r);
      const double stat = stationarity_residual(r, mu);
      const double shift = shift_invariance_residual(mu, r, battery);
      res["measure"] = vec_json(mu.weights());
      res["measure_stationarity_residual"] = stat;
      res["measure_shift_invariance_residual"] = shift;
      rep.holds("shift_invariance_iff_stationary", (stat <= kExactTolerance) == (shift <= kExactTolerance),
                "shift residual <= 1e-12 iff stationarity residual <= 1e-12");
    }
    if (fs.has_endo()) {
      const double pull = pullout_check(r, fs);
      res["pullout_residual"] = pull;
      if (e.operator_kind() == "ruelle") rep.at_most("pullout", pull, kExactTolerance);
    }
    return;
  }
  const auto& r = std::get<CircleRuelle>(op);
  rep.at_most("unital", r.unital_residual(), kExactTolerance);
  rep.at_most("pullout", pullout_check(r), kExactTolerance);
  res["uniform_weight"] = r.is_uniform();
  res["min_weight_on_grid"] = r.min_weight_on_grid();
  res["haar_stationarity_residual"] = haar_stationarity_residual(r);
  res["haar_transfer_duality_residual"] = transfer_duality_residual(r, HaarMeasure{});
  res["haar_strong_invariance_residual"] = strong_invariance_check(HaarMeasure{}, CircleSpace{circle_degree(space)});
}

// ---------------------------------------------------------------------------

void qmf(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const QmfFilter h = e.filter();
  const double tol = param(e, "tolerance", kExactTolerance);
  const auto q = qmf_check(h, param(e, "grid", kDefaultGrid));
  json& res = rep.results();
  res["filter"] = filter_json(h);
  res["coefficient_residual"] = q.coefficient_residual;
  res["grid_residual"] = q.grid_residual;
  res["normalization_residual"] = q.normalization_residual;
  rep.at_most("qmf_coefficient_form", q.coefficient_residual, tol);
  rep.at_most("qmf_grid_form", q.grid_residual, tol);
  rep.at_most("normalization", q.normalization_residual, tol);
  rep.at_most("coefficient_grid_agreement", std::abs(q.coefficient_residual - q.grid_residual), 1e-10);
  try {
    const auto r = CircleRuelle::from_filter(h.m0());
    rep.at_most("ruelle_unital", r.unital_residual(), kExactTolerance);
  } catch (const not_markov& ex) {
    res["ruelle_error"] = ex.what();
    rep.holds("ruelle_unital", false, "weight |m0|^2 / 2 gives a unital operator");
  }
}

// ---------------------------------------------------------------------------

void cascade_task(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const QmfFilter h = e.filter();
  const int iterations = param(e, "iterations", 12);
  const int J = param(e, "J", 10);
  const bool require_qmf = param(e, "require_qmf", true);
  const auto phi = cascade(h, iterations, J, require_qmf);
  const auto a = translate_orthogonality(phi);
  const auto lawton = autocorrelation_fixed_space(h);
  json& res = rep.results();
  res["filter"] = filter_json(h);
  res["iterations"] = iterations;
  res["J"] = J;
  res["support"] = json::array({phi.left, phi.right()});
  res["residuals"] = phi.residuals;
  res["integral"] = complex_json(phi.integral());
  json corr = json::object();
  for (const auto& [k, v] : a.a) corr[std::to_string(k)] = complex_json(v);
  res["autocorrelation"] = corr;
  res["autocorrelation_fixed_dimension"] = lawton.fixed_dimension;
  rep.near("integral", std::abs(phi.integral()), 1.0, 1e-10);
  rep.at_most("refinement_residual", phi.final_residual(), param(e, "residual_tolerance", 1e-3));
  const double orth = param(e, "orthogonality_tolerance", 1e-4);
  rep.at_most("translate_orthogonality", a.max_offdiagonal, orth);
  rep.at_most("translate_normalization", a.diagonal_deviation, orth);

  out.table.header = {"x", "phi_re", "phi_im"};
  const double s = static_cast<double>(phi.cells_per_unit());
  for (std::size_t j = 0; j < phi.values.size(); ++j) {
    const double x = phi.left + static_cast<double>(j) / s;
    out.table.rows.push_back({Table::num(x), Table::num(phi.values[j].real()), Table::num(phi.values[j].imag())});
  }
}

// ---------------------------------------------------------------------------

void representation(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const QmfFilter h = e.filter();
  const auto depth = param<std::size_t>(e, "depth", 3);
  const int levels = param(e, "levels", 4);
  const auto r = representation_check(h, depth, levels);
  json& res = rep.results();
  res["filter"] = filter_json(h);
  res["depth"] = depth;
  res["w4_dimensions"] = r.w4_dimensions;
  res["grid_zeros"] = r.grid_zeros;
  rep.at_most("w1_covariance", r.w1, kExactTolerance);
  rep.at_most("w2_scaling", r.w2, kExactTolerance);
  rep.at_most("w3_orthogonality", r.w3, kExactTolerance);
  rep.holds("w4_span_growth", r.w4_strictly_increasing(), "span dimensions strictly increase level by level");
  rep.at_most("s0_isometry", s0_isometry_residual(h), kExactTolerance);
}

// ---------------------------------------------------------------------------

void harmonic(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const graph::Network net = parse_network(e.params);
  const Vec phi = graph::harmonic_solve(net);
  json& res = rep.results();
  json values = json::object();
  out.table.header = {"vertex", "phi", "boundary"};
  for (std::size_t v = 0; v < net.size(); ++v) {
    values[net.labels()[v]] = phi(static_cast<Eigen::Index>(v));
    out.table.rows.push_back({net.labels()[v], Table::num(phi(static_cast<Eigen::Index>(v))),
                              net.on_boundary(v) ? "1" : "0"});
  }
  res["phi"] = values;
  rep.at_most("harmonic_residual", graph::harmonic_residual(net, phi), kExactTolerance);
  rep.at_most("laplacian_mean_value_equivalence", graph::laplacian_mean_value_residual(net, phi), kExactTolerance);
  rep.at_most("detailed_balance", graph::detailed_balance_residual(net), kExactTolerance);
  rep.holds("maximum_principle", graph::maximum_principle_holds(net, phi), "interior values lie within boundary extremes");

  const auto walks = param<std::size_t>(e, "walks", 0);
  if (walks > 0) {
    const json& start = require(e.params, "start", "params");
    const std::size_t x = net.index_of(start.is_string() ? start.get<std::string>() : start.dump());
    const auto cap = param<std::size_t>(e, "step_cap", kDefaultStepCap);
    const auto hit = graph::hitting_verification(net, phi, x, walks, e.require_seed("hitting walks"), cap,
                                                 param<unsigned>(e, "threads", 0));
    res["start"] = net.labels()[x];
    res["walks"] = walks;
    res["mc"] = hit.estimate.mean;
    res["stderr"] = hit.estimate.stderr_;
    res["capped_walks"] = hit.capped;
    rep.near("capped_walks", static_cast<double>(hit.capped), 0.0, 0.0);
    rep.within_stderr("hitting_mc", hit.estimate, hit.exact);
  }
}

// ---------------------------------------------------------------------------

void correlate(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const Space space = e.space();
  if (is_circle(space)) throw schema_error("correlate: finite spaces only");
  const auto& fs = std::get<FiniteSpace>(space);
  const Operator op = e.op(space);
  const auto& r = std::get<MatrixOperator>(op);
  const Vec phi = parse_finite_observable(require(e.params, "phi", "params"), fs.size());
  const Vec psi = parse_finite_observable(require(e.params, "psi", "params"), fs.size());
  const auto kmax = param<unsigned>(e, "kmax", 12);
  const FiniteMeasure mu = measure_for(e, fs, r);
  const auto fit = correlation_decay(mu, r, phi, psi, kmax);
  json& res = rep.results();
  res["measure"] = vec_json(mu.weights());
  res["correlations"] = fit.values;
  res["limit"] = fit.limit;
  res["fitted_rate"] = fit.rate;
  out.table.header = {"k", "c_k"};
  for (std::size_t k = 0; k < fit.values.size(); ++k) out.table.rows.push_back({std::to_string(k), Table::num(fit.values[k])});
  rep.near("lag_zero", fit.values.front(), integrate(mu, phi.cwiseProduct(psi)), kExactTolerance);

  const auto samples = param<std::size_t>(e, "samples", 0);
  if (samples > 0) {
    const auto lag = param<unsigned>(e, "lag", 1);
    if (lag > kmax) throw schema_error("correlate: lag exceeds kmax");
    const auto ens = sample_paths(r, mu, lag + 1, samples, e.require_seed("Monte Carlo"), param<unsigned>(e, "threads", 0));
    const auto est = correlation_mc(ens, phi, psi, 1, lag);
    res["lag"] = lag;
    res["mc"] = est.mean;
    res["stderr"] = est.stderr_;
    rep.within_stderr("mc_agreement", est, fit.values[lag]);
  }
}

// ---------------------------------------------------------------------------

template <class Mass>
void support_masses(Report& rep, std::size_t depth, bool ruelle, Mass mass) {
  json masses = json::array();
  double prev = 1.0;
  bool monotone = true;
  for (std::size_t n = 1; n <= depth; ++n) {
    const double m = mass(n);
    masses.push_back(m);
    monotone = monotone && m <= prev + kExactTolerance;
    prev = m;
    if (ruelle) rep.near("support_mass_n" + std::to_string(n), m, 1.0, 0.0);
  }
  rep.results()["support_mass"] = masses;
  rep.holds("support_mass_nonincreasing", monotone, "support_mass(n + 1) <= support_mass(n) + 1e-12");
}

void solenoid(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const Space space = e.space();
  const Operator op = e.op(space);
  const auto depth = param<std::size_t>(e, "depth", 6);
  const auto samples = param<std::size_t>(e, "samples", 0);
  const auto threads = param<unsigned>(e, "threads", 0);
  if (depth == 0) throw schema_error("solenoid: depth must be at least 1");
  json& res = rep.results();
  res["depth"] = depth;

  if (!is_circle(space)) {
    const auto& fs = std::get<FiniteSpace>(space);
    if (!fs.has_endo()) throw schema_error("solenoid: the finite space needs an \"endo\"");
    const auto& r = std::get<MatrixOperator>(op);
    const bool ruelle = e.operator_kind() == "ruelle";
    const std::size_t x = e.params.contains("x") ? parse_state(fs, e.params.at("x")) : 0;
    res["x"] = fs.labels()[x];
    support_masses(rep, depth, ruelle, [&](std::size_t n) { return support_mass(r, fs, x, n); });
    if (samples > 0) {
      const auto ens = sample_paths(r, x, depth, samples, e.require_seed("sampling"), threads);
      const auto c = compatibility_violations(ens, endo_of(fs));
      res["transitions"] = c.transitions;
      res["compatibility_violations"] = c.violations;
      if (ruelle) rep.near("compatibility_violations", static_cast<double>(c.violations), 0.0, 0.0);
      out.table.header = {"sample", "coordinate", "state"};
      for (std::size_t i = 0; i < ens.size(); ++i) {
        for (std::size_t k = 0; k < ens.samples[i].size(); ++k) {
          out.table.rows.push_back({std::to_string(i), std::to_string(k + 1), fs.labels()[ens.samples[i][k]]});
        }
      }
    }
    return;
  }

  const auto& r = std::get<CircleRuelle>(op);
  const Angle x = e.params.contains("x") ? parse_angle(e.params.at("x")) : Angle(0, 1);
  res["x"] = x.str();
  support_masses(rep, depth, true, [&](std::size_t n) { return support_mass(r, x, n); });
  if (samples > 0) {
    const auto ens = sample_paths(r, x, depth, samples, e.require_seed("sampling"), threads);
    const auto c = compatibility_violations(ens, CircleDoubling{});
    res["transitions"] = c.transitions;
    res["compatibility_violations"] = c.violations;
    rep.near("compatibility_violations", static_cast<double>(c.violations), 0.0, 0.0);
    json words = json::array();
    out.table.header = {"sample", "coordinate", "angle", "turns", "re", "im"};
    for (std::size_t i = 0; i < ens.size(); ++i) {
      if (i < 10) words.push_back(solenoid_word_json(ens.samples[i]));
      for (std::size_t k = 0; k < ens.samples[i].size(); ++k) {
        const Angle& a = ens.samples[i][k];
        const cplx z = a.character(1);
        out.table.rows.push_back({std::to_string(i), std::to_string(k + 1), a.str(), Table::num(a.turns()),
                                  Table::num(z.real()), Table::num(z.imag())});
      }
    }
    res["words"] = words;
  }

  // Haar invariance under solenoid translates needs W = 1/2.
  std::vector<CircleSolenoidWord> translates;
  if (e.params.contains("translate")) translates.push_back(parse_solenoid_word(e.params.at("translate")));
  const auto random_translates = param<std::size_t>(e, "translates", 0);
  if (random_translates > 0) {
    const std::uint64_t seed = e.require_seed("random translates");
    for (std::size_t i = 0; i < random_translates; ++i) {
      auto g = make_stream(seed ^ 0x7472616e736c6174ULL, i);
      translates.push_back(random_solenoid_word(g, 3, param<std::int64_t>(e, "translate_den", 45)));
    }
  }
  if (!translates.empty()) {
    if (!r.is_uniform()) throw schema_error("solenoid: translation invariance needs the uniform weight W = 1/2");
    const auto battery = character_words(2, 3, r.bound());
    double worst = 0.0;
    for (const auto& y : translates) {
      for (const auto& f : battery) {
        if (f.size() <= y.depth()) worst = std::max(worst, group_translation_invariance(r, f, y));
      }
    }
    res["translates"] = translates.size();
    rep.at_most("haar_translation_invariance", worst, kExactTolerance);
  }
}

// ---------------------------------------------------------------------------

void smale_williams(const Experiment& e, Output& out) {
  auto& rep = out.report;
  const double t0 = param(e, "t0", 0.0);
  const cplx z0 = e.params.contains("z0") ? parse_complex(e.params.at("z0")) : cplx{};
  const auto steps = param<std::size_t>(e, "steps", 10000);
  const cplx delta = e.params.contains("delta") ? parse_complex(e.params.at("delta")) : cplx(1e-3, 0.0);
  if (std::abs(z0) > 1.0) throw schema_error("smale-williams: |z0| > 1 lies outside the solid torus");
  const auto orbit = smale_williams_orbit({t0, z0}, steps);
  double rmax = 0.0;
  for (std::size_t k = 1; k < orbit.size(); ++k) rmax = std::max(rmax, std::abs(orbit[k].z));
  double dev = 0.0;
  for (double ratio : meridional_contraction(orbit, delta)) dev = std::max(dev, std::abs(ratio - 0.25));
  json& res = rep.results();
  res["steps"] = steps;
  if (orbit.size() > 1) res["first_image"] = json::array({orbit[1].t, complex_json(orbit[1].z)});
  res["max_radius_after_step_1"] = rmax;
  rep.at_most("solid_torus_radius", rmax, 0.75);
  rep.at_most("meridional_contraction", dev, kExactTolerance);
  out.table.header = {"step", "t", "re", "im"};
  for (std::size_t k = 0; k < orbit.size(); ++k) {
    out.table.rows.push_back(
        {std::to_string(k), Table::num(orbit[k].t), Table::num(orbit[k].z.real()), Table::num(orbit[k].z.imag())});
  }
}

using TaskFn = std::function<void(const Experiment&, Output&)>;

const std::map<std::string, TaskFn>& registry() {
  static const std::map<std::string, TaskFn> tasks{
      {"expectation", expectation}, {"sample", sample},
      {"invariance", invariance},   {"qmf", qmf},
      {"cascade", cascade_task},    {"representation", representation},
      {"harmonic", harmonic},       {"correlate", correlate},
      {"solenoid", solenoid},       {"smale-williams", smale_williams},
  };
  return tasks;
}

}  // namespace

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : registry()) n.push_back(k);
    return n;
  }();
  return names;
}

bool always_stochastic(const std::string& task) { return task == "sample"; }

Output run_task(const std::string& task, const json& config, std::optional<std::uint64_t> seed) {
  if (!config.is_object()) throw schema_error("config must be a JSON object");
  if (config.contains("task") && config.at("task").get<std::string>() != task) {
    throw schema_error("config task \"" + config.at("task").get<std::string>() + "\" differs from subcommand \"" + task + "\"");
  }
  const auto it = registry().find(task);
  if (it == registry().end()) throw schema_error("unknown task " + task);
  Experiment e;
  e.task = task;
  e.config = config;
  e.params = config.contains("params") ? config.at("params") : json::object();
  if (!e.params.is_object()) throw schema_error("params must be an object");
  if (seed) {
    e.seed = seed;
  } else if (config.contains("seed")) {
    if (!config.at("seed").is_number_unsigned()) throw schema_error("seed must be a non-negative integer");
    e.seed = config.at("seed").get<std::uint64_t>();
  }
  if (always_stochastic(task)) e.require_seed(task);

  json inputs = config;
  inputs["seed"] = e.seed ? json(*e.seed) : json(nullptr);
  Output out{Report(task, inputs), Table{}};
  out.report.disable(get_or<std::vector<std::string>>(e.params, "disable", {}));
  it->second(e, out);
  return out;
}

}  // namespace xferlab::cli
