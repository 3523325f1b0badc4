// spingeom: batch front end. Every subcommand writes one JSON (or CSV) report
// that embeds the effective configuration, the toolkit version and the
// provenance of the numbers it contains.

#include "spingeom/spingeom.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

using nlohmann::json;
using namespace spingeom;

namespace {

constexpr const char* kSchemaVersion = "1";

enum class Kind { integer, real, text, reals, integers, boolean };

struct Param {
  std::string name;  // config key; the flag is --name with '_' replaced by '-'
  Kind kind;
  json fallback;     // null when optional
  std::string help;
};

struct Outcome {
  json result;
  std::optional<std::string> csv;
  std::vector<std::string> provenance;
  bool ok = true;  // false marks the report FAILED (verify with a failing criterion)
};

struct Settings {
  json params;
  std::uint64_t seed = 1;
};

using Runner = Outcome (*)(const Settings&);

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  Runner run;
};

class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// ---------- value parsing ----------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) throw UsageError(key + ": '" + s + "' is not a finite number");
  return v;
}

long long parse_integer(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError(key + ": '" + s + "' is not an integer");
  return v;
}

json parse_flag(const Param& p, const std::string& raw) {
  switch (p.kind) {
    case Kind::integer: return parse_integer(raw, p.name);
    case Kind::real: return parse_real(raw, p.name);
    case Kind::text: return raw;
    case Kind::boolean:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw UsageError(p.name + ": expected true or false");
    case Kind::reals: {
      json a = json::array();
      for (const auto& t : split(raw, ',')) a.push_back(parse_real(t, p.name));
      return a;
    }
    case Kind::integers: {
      json a = json::array();
      for (const auto& t : split(raw, ',')) a.push_back(parse_integer(t, p.name));
      return a;
    }
  }
  return nullptr;
}

void check_config_value(const Param& p, const json& v) {
  if (v.is_null() && p.fallback.is_null()) return;
  bool ok = false;
  switch (p.kind) {
    case Kind::integer: ok = v.is_number_integer(); break;
    case Kind::real: ok = v.is_number(); break;
    case Kind::text: ok = v.is_string(); break;
    case Kind::boolean: ok = v.is_boolean(); break;
    case Kind::reals:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
      break;
    case Kind::integers:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_integer(); });
      break;
  }
  if (!ok) throw UsageError("config key '" + p.name + "' has the wrong type");
}

// ---------- typed access ----------

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T>
T get(const Settings& s, const std::string& key) {
  return s.params.at(key).get<T>();
}

bool has(const Settings& s, const std::string& key) { return !s.params.at(key).is_null(); }

std::vector<double> twist_or_zero(const Settings& s, std::size_t n) {
  if (!has(s, "twist")) return std::vector<double>(n, 0.0);
  const auto t = get<std::vector<double>>(s, "twist");
  for (double d : t)
    if (d != 0.0 && d != 0.5) throw UsageError("twist: entries must be 0 or 0.5, got " + num(d));
  if (t.size() != n) throw UsageError("twist: expected " + std::to_string(n) + " entries");
  return t;
}

Eigen::MatrixXd parse_basis(const std::string& text, int n) {
  if (text == "I") return Eigen::MatrixXd::Identity(n, n);
  const auto rows = split(text, ';');
  if (static_cast<int>(rows.size()) != n) throw UsageError("basis: expected " + std::to_string(n) + " rows separated by ';'");
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i) {
    const auto cols = split(rows[static_cast<std::size_t>(i)], ',');
    if (static_cast<int>(cols.size()) != n) throw UsageError("basis: each row needs " + std::to_string(n) + " entries");
    for (int j = 0; j < n; ++j) b(i, j) = parse_real(cols[static_cast<std::size_t>(j)], "basis");
  }
  return b;
}

OperatorTag parse_operator(const std::string& s) {
  if (s == "dirac_squared") return OperatorTag::dirac_squared;
  if (s == "connection_laplacian") return OperatorTag::connection_laplacian;
  throw UsageError("operator must be dirac_squared or connection_laplacian");
}

Discretization parse_method(const std::string& s) {
  if (s == "automatic") return Discretization::automatic;
  if (s == "spectral") return Discretization::spectral;
  if (s == "finite_difference") return Discretization::finite_difference;
  throw UsageError("method must be automatic, spectral or finite_difference");
}

std::string csv_line(std::initializer_list<std::string> cells) {
  std::string out;
  for (const auto& c : cells) out += (out.empty() ? "" : ",") + c;
  return out + "\n";
}


// ---------- subcommands ----------

Outcome run_spectrum(const Settings& s) {
  const auto space = get<std::string>(s, "space");
  const double cutoff = get<double>(s, "cutoff");
  const auto op = parse_operator(get<std::string>(s, "operator"));
  SpectrumReport rep;
  if (space == "sphere") {
    const int n = has(s, "n") ? get<int>(s, "n") : 2;
    rep = op == OperatorTag::dirac_squared ? sphere_dirac_spectrum(n, cutoff) : sphere_connection_laplacian_spectrum(n, cutoff);
  } else if (space == "torus" || space == "circle") {
    const int n = space == "circle" ? 1 : has(s, "n") ? get<int>(s, "n") : 2;
    if (space == "circle" && has(s, "n") && get<int>(s, "n") != 1) throw UsageError("circle: n must be 1");
    if (n < 1) throw UsageError("n must be >= 1");
    const auto twist = twist_or_zero(s, static_cast<std::size_t>(n));
    std::optional<FlatTorusSpec> spec;
    if (has(s, "lengths")) {
      if (get<std::string>(s, "basis") != "I") throw UsageError("give either basis or lengths, not both");
      const auto l = get<std::vector<double>>(s, "lengths");
      if (static_cast<int>(l.size()) != n) throw UsageError("lengths: expected " + std::to_string(n) + " entries");
      spec.emplace(FlatTorusSpec::rectangular(l, twist));
    } else {
      spec.emplace(parse_basis(get<std::string>(s, "basis"), n), twist);
    }
    rep = op == OperatorTag::dirac_squared ? torus_dirac_squared_spectrum(*spec, cutoff)
                                           : torus_connection_laplacian_spectrum(*spec, cutoff);
    if (space == "circle") rep.space = "circle";
  } else {
    throw UsageError("space must be torus, circle or sphere");
  }
  Outcome o;
  o.result = {{"report", to_json(rep)}};
  o.result["lambda_1"] = rep.pairs.empty() ? json(nullptr) : json(rep.at(1).value);
  o.result["eigenvalue_count"] = rep.total_multiplicity();
  o.csv = to_csv(rep);
  o.provenance = {to_string(rep.provenance)};
  return o;
}

Outcome run_discrete(const Settings& s) {
  const auto lengths = get<std::vector<double>>(s, "lengths");
  const std::size_t n = lengths.size();
  const auto spec = FlatTorusSpec::rectangular(lengths, twist_or_zero(s, n));
  std::vector<int> grid = has(s, "grid") ? get<std::vector<int>>(s, "grid") : std::vector<int>(n, n == 1 ? 256 : 32);
  const long long count = get<long long>(s, "count");
  const auto opname = get<std::string>(s, "operator");
  const auto dop = opname == "dirac" ? DiscreteOperator::dirac : DiscreteOperator::connection_laplacian;
  if (opname != "dirac" && opname != "connection_laplacian") throw UsageError("operator must be dirac or connection_laplacian");
  const auto method = parse_method(get<std::string>(s, "method"));
  EigensolverOptions eo;
  eo.seed = s.seed;

  const auto op = assemble(spec, {}, dop, grid, method);
  const auto dec = eigenvalues_lowest(op, count, eo);
  Outcome o;
  o.provenance = {to_string(Provenance::discretized)};
  o.result = {{"method", to_string(op.method)},
              {"operator", to_string(op.operator_tag)},
              {"grid", op.grid},
              {"matrix_size", op.dimension()},
              {"eigenvalues", dec.values},
              {"max_residual", dec.max_residual()},
              {"solver", dec.method},
              {"iterations", dec.iterations},
              {"reliability_cutoff", op.reliability_cutoff},
              {"report", to_json(discrete_report(op, spec, dec.values))}};
  std::string csv = csv_line({"k", "eigenvalue"});
  for (std::size_t i = 0; i < dec.values.size(); ++i) csv += csv_line({std::to_string(i + 1), num(dec.values[i])});

  if (has(s, "refine")) {
    const auto study = convergence_study(spec, get<std::vector<int>>(s, "refine"), count,
                                         method == Discretization::automatic ? Discretization::finite_difference : method, eo);
    json rows = json::array();
    for (const auto& r : study.rows)
      rows.push_back({{"points", r.points}, {"h", r.h}, {"k", r.k}, {"value", r.value}, {"reference", r.reference}, {"error", r.error}});
    o.result["convergence"] = {{"rows", rows}, {"slopes", study.slopes}, {"min_slope", study.min_slope()},
                               {"max_slope", study.max_slope()}};
    o.provenance.push_back(to_string(Provenance::closed_form));
    csv = study.to_csv();
  }
  const double amp = get<double>(s, "perturb");
  if (amp != 0.0) {
    if (method == Discretization::spectral) throw UsageError("perturb requires the finite-difference method");
    const double l1 = lengths[0];
    const auto u = sample_on_grid(spec, grid, [&](std::span<const double> x) { return amp * std::cos(2.0 * kPi * x[0] / l1); });
    const auto r = perturbation_check(spec, u, count, grid, eo);
    o.result["perturbation"] = {{"amplitude", amp},           {"norm_2u", r.norm_2u},
                                {"gradient_norm", r.gradient_norm}, {"connection_bound", r.connection_bound},
                                {"delta", r.delta},           {"lambda_flat", r.lambda_flat},
                                {"lambda_perturbed", r.lambda_perturbed}, {"ratios", r.ratios},
                                {"tau_hat", r.tau_hat},       {"tau_budget", r.tau_budget},
                                {"pass", r.pass},             {"connection_formula", r.connection_formula},
                                {"budget_formula", r.budget_formula}};
  }
  o.csv = csv;
  return o;
}

Outcome run_fixdim(const Settings& s) {
  const auto rep_name = get<std::string>(s, "rep");
  const int n = get<int>(s, "n");
  RepresentationSpec rep = rep_name == "spin" ? spin_representation(n)
                           : rep_name == "u"  ? u_standard(n)
                           : rep_name == "su" ? su_standard(n)
                                              : throw UsageError("rep must be spin, u or su");
  const auto cert = fixing_dimension(rep, get<int>(s, "trials"), s.seed);
  Outcome o;
  o.result = {{"certificate", to_json(cert)}};
  if (rep_name == "spin") o.result["closed_form_r"] = spin_fixing_dimension(n);
  o.provenance = {"closed-form", cert.probabilistic ? "sampled" : "exact"};
  o.csv = csv_line({"rep", "n", "r", "consistent"}) +
          csv_line({rep_name, std::to_string(n), std::to_string(cert.r), cert.consistent() ? "true" : "false"});
  return o;
}

Outcome run_spinmult(const Settings& s) {
  const int n = get<int>(s, "n");
  const long long samples = get<long long>(s, "samples");
  const double frac = get<double>(s, "quarter_turn_fraction");
  if (samples < 1) throw UsageError("samples must be >= 1");
  if (!(frac >= 0.0 && frac <= 1.0)) throw UsageError("quarter_turn_fraction must lie in [0, 1]");
  const auto rep = build_gamma_rep(n);
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi), unit(0.0, 1.0);
  std::uniform_int_distribution<int> quarter(0, 3);
  std::map<int, long long> hist;
  long long accepted = 0, disagreements = 0, identities = 0;
  int bound = 0, worst = 0;
  while (accepted < samples) {
    std::vector<double> t(static_cast<std::size_t>(rep.torus_rank()));
    for (auto& x : t) x = unit(rng) < frac ? quarter(rng) * kPi / 2 : angle(rng);
    const auto g = torus_element(rep, t);
    const auto c = eigenvalue_one_multiplicity(g);
    if (c.identity) {
      ++identities;
      continue;
    }
    bound = c.bound;
    disagreements += eigenvalue_one_multiplicity(SpinElement::from_matrix(rep, g.matrix)).multiplicity != c.multiplicity;
    ++hist[c.multiplicity];
    worst = std::max(worst, c.multiplicity);
    ++accepted;
  }
  Outcome o;
  json h = json::array();
  std::string csv = csv_line({"multiplicity", "count"});
  for (const auto& [m, cnt] : hist) {
    h.push_back({{"multiplicity", m}, {"count", cnt}});
    csv += csv_line({std::to_string(m), std::to_string(cnt)});
  }
  o.result = {{"n", n},
              {"spinor_dim", rep.spinor_dim()},
              {"bound", bound},
              {"samples", accepted},
              {"identity_draws_skipped", identities},
              {"histogram", h},
              {"max_multiplicity", worst},
              {"within_bound", worst <= bound},
              {"matrix_disagreements", disagreements}};
  if (n >= 4) {
    std::vector<double> t(static_cast<std::size_t>(rep.torus_rank()), 0.0);
    t[0] = t[1] = kPi / 2;
    o.result["saturating"] = {{"t", t}, {"multiplicity", eigenvalue_one_multiplicity(torus_element(rep, t)).multiplicity}};
  }
  o.provenance = {"closed-form", "sampled"};
  o.csv = csv;
  o.ok = worst <= bound && disagreements == 0;
  return o;
}

Outcome run_collapse(const Settings& s) {
  const double l1 = get<double>(s, "l1");
  const auto params = get<std::vector<double>>(s, "l2");
  const auto twist = twist_or_zero(s, 2);
  const long long k = get<long long>(s, "k");
  const auto traj = collapse_trajectory(
      params, [&](double l2) { return FlatTorusSpec::rectangular(std::vector<double>{l1, l2}, twist); }, k,
      get<long long>(s, "count"));
  Outcome o;
  json rows = json::array();
  std::string csv = csv_line({"parameter", "lambda_k"});
  for (const auto& p : traj) {
    json r{{"parameter", p.parameter}, {"lambda_k", p.lambda_k}, {"lowest", p.lowest}};
    r["exact_k_over_pi2"] = p.exact_k ? json(to_string(*p.exact_k)) : json(nullptr);
    rows.push_back(r);
    csv += csv_line({num(p.parameter), num(p.lambda_k)});
  }
  o.result = {{"l1", l1}, {"twist", twist}, {"k", k}, {"trajectory", rows}};
  o.provenance = {"closed-form"};
  o.csv = csv;
  return o;
}

Outcome run_bounds(const Settings& s) {
  const auto table = get<std::string>(s, "table");
  const auto want = [&](const char* t) { return table == "all" || table == t; };
  if (!(table == "all" || table == "baer" || table == "torus" || table == "lichnerowicz" || table == "index" ||
        table == "friedrich"))
    throw UsageError("table must be all, baer, torus, lichnerowicz, index or friedrich");
  Outcome o;
  o.result = json::object();
  if (want("baer")) {
    const double area = get<double>(s, "area"), delta = get<double>(s, "delta"), diam = get<double>(s, "diam");
    o.result["baer"] = {{"area", area},
                        {"bound", baer_bound(area)},
                        {"unit_sphere_lambda_1", sphere_dirac_spectrum(2, 2.0).at(1).value},
                        {"curvature_form", {{"delta", delta}, {"diam", diam}, {"value", baer_curvature_form(delta, diam)},
                                            {"delta_to_zero_limit", 4.0 / (diam * diam)}}}};
  }
  if (want("torus")) {
    json rows = json::array();
    for (double l : get<std::vector<double>>(s, "torus_side")) {
      const auto spec = FlatTorusSpec::rectangular(std::vector<double>{l, l}, {0.5, 0.5});
      const auto lam = torus_lowest(spec, 1).at(1);
      json r{{"side", l}, {"diam", spec.diameter()}, {"bound", torus_conformal_bound(spec.diameter(), 0.0)},
             {"lambda_1", lam.value}};
      const auto lr = rationalize(l);
      r["exact_slack"] = lr && lam.exact ? json(to_string(*lam.exact / torus_conformal_bound_exact(*lr * *lr / 2)))
                                         : json(nullptr);
      rows.push_back(r);
    }
    o.result["torus_conformal"] = rows;
  }
  if (want("lichnerowicz")) {
    json rows = json::array();
    for (int n = 2; n <= get<int>(s, "sphere_max_n"); ++n) {
      const long long scal = static_cast<long long>(n) * (n - 1);
      const auto c = lichnerowicz_exact(sphere_dirac_spectrum(n, 100.0),
                                        sphere_connection_laplacian_spectrum(n, 100.0 - scal / 4.0), Rational(scal));
      json r = to_json(c);
      r["space"] = "sphere";
      r["n"] = n;
      rows.push_back(r);
    }
    o.result["lichnerowicz"] = rows;
  }
  if (want("index")) o.result["index"] = to_json(index_obstruction(get<long long>(s, "a_hat"), get<int>(s, "index_n")));
  if (want("friedrich")) o.result["friedrich"] = to_json(friedrich_sphere_check(get<int>(s, "friedrich_n"), get<double>(s, "eps")));
  o.provenance = {"closed-form"};
  return o;
}

Outcome run_neck(const Settings& s) {
  NeckOptions opts;
  opts.samples = static_cast<std::size_t>(get<long long>(s, "samples"));
  if (has(s, "length_budget")) opts.length_budget = get<double>(s, "length_budget");
  const double eps = get<double>(s, "eps"), r = get<double>(s, "R"), rho = get<double>(s, "rho");
  const auto res = construct_neck(eps, r, rho, opts);
  Outcome o;
  o.result = to_json(res, get<bool>(s, "include_samples"));
  if (has(s, "frontier")) {
    const auto rows = feasibility_frontier(get<std::vector<double>>(s, "frontier"), r, rho, opts);
    json f = json::array();
    for (const auto& row : rows)
      f.push_back({{"eps", row.eps}, {"feasible", row.feasible}, {"b", row.b}, {"ell", row.ell}, {"scal_min", row.scal_min}});
    o.result["frontier"] = {{"rows", f}, {"monotone", frontier_monotone(rows)}};
  }
  o.provenance = {"closed-form", "discretized"};
  o.csv = to_csv(res);
  return o;
}

Outcome run_frames(const Settings& s) {
  const auto mname = get<std::string>(s, "method");
  if (mname != "symmetric" && mname != "gram_schmidt") throw UsageError("method must be symmetric or gram_schmidt");
  const auto method = mname == "symmetric" ? OrthoMethod::symmetric : OrthoMethod::gram_schmidt;
  Outcome o;
  o.provenance = {"sampled"};
  if (has(s, "input")) {
    std::ifstream in(get<std::string>(s, "input"));
    if (!in) throw InvalidArgument("frames: cannot read " + get<std::string>(s, "input"));
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("frames: input is not JSON: ") + e.what());
    }
    const auto fam = section_family_from_json(j);
    const auto out = orthonormalize(fam, method);
    o.result = {{"defect_in", overlap_defect(fam)},
                {"defect_out", overlap_defect(out)},
                {"displacement", displacement(fam, out)},
                {"smoothness", smoothness_of_output(fam, out)},
                {"family", to_json(out)}};
    o.provenance = {"input"};
    return o;
  }
  const int k = get<int>(s, "k"), r = get<int>(s, "r"), pts = get<int>(s, "points"), trials = get<int>(s, "trials");
  const double eta = get<double>(s, "eta");
  if (k < 1 || r < 1 || r > k || pts < 2 || trials < 1) throw UsageError("frames: need 1 <= r <= k, points >= 2, trials >= 1");
  std::mt19937_64 rng(s.seed);
  json rows = json::array();
  std::string csv = csv_line({"trial", "defect_in", "defect_out", "displacement", "smoothness"});
  double worst_out = 0.0, worst_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto fam = acceptance::perturbed_family(k, r, static_cast<std::size_t>(pts), eta, rng);
    const auto out = orthonormalize(fam, method);
    const double din = overlap_defect(fam), dout = overlap_defect(out), disp = displacement(fam, out);
    const double sm = smoothness_of_output(fam, out);
    worst_out = std::max(worst_out, dout);
    worst_ratio = std::max(worst_ratio, disp / (3.0 * r * eta));
    rows.push_back({{"defect_in", din}, {"defect_out", dout}, {"displacement", disp}, {"smoothness", sm}});
    csv += csv_line({std::to_string(t), num(din), num(dout), num(disp), num(sm)});
  }
  o.result = {{"method", to_string(method)}, {"trials", rows}, {"max_defect_out", worst_out},
              {"max_displacement_over_3r_eta", worst_ratio}};
  if (get<bool>(s, "emit_family")) o.result["example_family"] = to_json(acceptance::perturbed_family(k, r, static_cast<std::size_t>(pts), eta, rng));
  o.csv = csv;
  return o;
}

Outcome run_verify(const Settings& s) {
  AcceptanceOptions ao;
  ao.seed = s.seed;
  std::vector<int> ids;
  if (has(s, "criteria"))
    ids = get<std::vector<int>>(s, "criteria");
  else
    for (const auto& c : acceptance::criteria()) ids.push_back(c.id);
  Outcome o;
  json rows = json::array();
  std::string csv = csv_line({"id", "name", "pass"});
  for (int id : ids) {
    const auto r = run_criterion(id, ao);
    std::cerr << format_line(r) << '\n';
    rows.push_back(to_json(r));
    csv += csv_line({std::to_string(r.id), r.name, r.pass ? "PASS" : "FAIL"});
    o.ok = o.ok && r.pass;
  }
  o.result = {{"criteria", rows}, {"all_pass", o.ok}};
  o.provenance = {"closed-form", "discretized", "sampled"};
  o.csv = csv;
  return o;
}

std::vector<Command> commands() {
  using K = Kind;
  return {
      {"spectrum", "closed-form D^2 / connection-Laplacian spectra of flat tori, circles and round spheres",
       {{"space", K::text, "torus", "torus | circle | sphere"},
        {"n", K::integer, nullptr, "dimension (default 2; 1 for circle)"},
        {"basis", K::text, "I", "lattice basis rows 'a,b;c,d' or I"},
        {"lengths", K::reals, nullptr, "side lengths of a rectangular torus (instead of basis)"},
        {"twist", K::reals, nullptr, "spin structure, entries 0 or 0.5 (default all 0)"},
        {"cutoff", K::real, 100.0, "list eigenvalues <= cutoff"},
        {"operator", K::text, "dirac_squared", "dirac_squared | connection_laplacian"}},
       run_spectrum},
      {"discrete", "discretized spectra on flat tori, convergence and conformal perturbation",
       {{"lengths", K::reals, json::array({1.0, 1.0}), "side lengths"},
        {"twist", K::reals, nullptr, "entries 0 or 0.5"},
        {"grid", K::integers, nullptr, "points per axis (default 256 for n = 1, 32 otherwise)"},
        {"count", K::integer, 10, "number of eigenvalues"},
        {"operator", K::text, "connection_laplacian", "dirac | connection_laplacian (dirac reports D^2)"},
        {"method", K::text, "automatic", "automatic | spectral | finite_difference"},
        {"refine", K::integers, nullptr, "grid sizes for a convergence study"},
        {"perturb", K::real, 0.0, "amplitude a of the conformal factor u = a cos(2 pi x / L1)"}},
       run_discrete},
      {"fixdim", "fixing-dimension certificate",
       {{"rep", K::text, "spin", "spin | u | su"}, {"n", K::integer, 4, "n"}, {"trials", K::integer, 100, "random samples"}},
       run_fixdim},
      {"spinmult", "eigenvalue-1 multiplicity of random maximal-torus elements of Spin(n)",
       {{"n", K::integer, 4, "n"},
        {"samples", K::integer, 1000, "non-identity elements"},
        {"quarter_turn_fraction", K::real, 0.5, "probability that an angle is a multiple of pi/2"}},
       run_spinmult},
      {"collapse", "lambda_k(D^2) along the torus family L1 x L2",
       {{"l1", K::real, 1.0, "first side"},
        {"l2", K::reals, json::array({1.0, 0.5, 0.1, 0.01}), "second sides"},
        {"twist", K::reals, json::array({0.0, 0.5}), "spin structure"},
        {"k", K::integer, 1, "eigenvalue index"},
        {"count", K::integer, 4, "lowest eigenvalues to list"}},
       run_collapse},
      {"bounds", "eigenvalue inequality tables",
       {{"table", K::text, "all", "all | baer | torus | lichnerowicz | index | friedrich"},
        {"area", K::real, 4.0 * kPi, "area of the 2-sphere"},
        {"delta", K::real, 1.0, "curvature parameter of the Baer form"},
        {"diam", K::real, 1.0, "diameter for the Baer form"},
        {"torus_side", K::reals, json::array({1.0, 0.5, 2.0}), "square torus sides"},
        {"sphere_max_n", K::integer, 7, "largest sphere dimension"},
        {"a_hat", K::integer, 2, "A-hat genus"},
        {"index_n", K::integer, 4, "dimension for the index obstruction"},
        {"friedrich_n", K::integer, 3, "sphere dimension for the Friedrich threshold"},
        {"eps", K::real, 0.0, "slack in the Friedrich threshold"}},
       run_bounds},
      {"neck", "warped neck profile with scal >= -eps",
       {{"eps", K::real, 0.5, "curvature slack"},
        {"R", K::real, 1.0, "inner annulus radius"},
        {"rho", K::real, 1.0, "annulus width"},
        {"samples", K::integer, 10000, "profile samples"},
        {"length_budget", K::real, nullptr, "cap on a + rho (default (6 - pi)(R + rho)/2)"},
        {"frontier", K::reals, nullptr, "eps values for a feasibility sweep"},
        {"include_samples", K::boolean, true, "embed t and phi arrays"}},
       run_neck},
      {"frames", "pointwise orthonormalization of almost-orthonormal section families",
       {{"k", K::integer, 4, "fiber dimension"},
        {"r", K::integer, 3, "number of sections"},
        {"points", K::integer, 16, "mesh points"},
        {"eta", K::real, 0.03, "per-entry perturbation"},
        {"method", K::text, "symmetric", "symmetric | gram_schmidt"},
        {"trials", K::integer, 10, "random families"},
        {"input", K::text, nullptr, "SectionFamily JSON file to orthonormalize instead"},
        {"emit_family", K::boolean, false, "embed one random input family"}},
       run_frames},
      {"verify", "run the acceptance criteria; exit 0 iff all pass",
       {{"criteria", K::integers, nullptr, "criterion ids (default all)"}},
       run_verify},
  };
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

json envelope(const std::string& sub, const json& config) {
  return {{"schema_version", kSchemaVersion}, {"tool", "spingeom"}, {"version", kVersion}, {"subcommand", sub},
          {"config", config}};
}

int error_code(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return 2;
  if (dynamic_cast<const NumericalFailure*>(&e)) return 3;
  return 4;
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return "usage";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const NumericalFailure*>(&e)) return "numerical_failure";
  return "error";
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(output, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + output);
  f << text;
  if (!f) throw Error("write to " + output + " failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spingeom " + std::string(kVersion) + ": computational spin geometry"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));
  std::string output, format = "json", config_path;
  std::uint64_t seed_flag = 1;
  app.add_option("-o,--output", output, "write the report here instead of stdout");
  app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", seed_flag, "seed for every randomized step (default 1)");
  app.add_option("--config", config_path, "JSON file with parameter values; unknown keys are rejected");

  const auto cmds = commands();
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    for (const auto& p : c.params) opts[c.name][p.name] = sub->add_option(flag_name(p.name), raw[c.name][p.name], p.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json err{{"schema_version", kSchemaVersion}, {"tool", "spingeom"}, {"version", kVersion}, {"status", "FAILED"},
             {"error", {{"type", "usage"}, {"message", e.what()}}}};
    std::cout << err.dump(2) << '\n';
    std::cerr << "spingeom: " << e.what() << '\n';
    return 2;
  }

  const Command* cmd = nullptr;
  for (const auto& c : cmds)
    if (app.got_subcommand(c.name)) cmd = &c;

  std::optional<std::uint64_t> seed;
  if (app.count("--seed") > 0) seed = seed_flag;
  json config{{"subcommand", cmd->name}, {"format", format}, {"seed", seed.value_or(1)}};
  try {
    Settings s;
    s.params = json::object();
    for (const auto& p : cmd->params) s.params[p.name] = p.fallback;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw UsageError("cannot read config " + config_path);
      json file;
      try {
        in >> file;
      } catch (const json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
      }
      if (!file.is_object()) throw UsageError("config must be a JSON object");
      for (const auto& [key, value] : file.items()) {
        if (key == "subcommand") {
          if (value != cmd->name) throw UsageError("config is for subcommand " + value.dump());
          continue;
        }
        if (key == "seed") {
          if (!value.is_number_unsigned()) throw UsageError("config key 'seed' must be a non-negative integer");
          if (!seed) seed = value.get<std::uint64_t>();
          continue;
        }
        if (key == "format") {
          if (value != "json" && value != "csv") throw UsageError("config key 'format' must be json or csv");
          if (app.count("--format") == 0) format = value.get<std::string>();
          continue;
        }
        const auto it = std::find_if(cmd->params.begin(), cmd->params.end(), [&](const Param& p) { return p.name == key; });
        if (it == cmd->params.end()) throw UsageError("unknown config key '" + key + "' for " + cmd->name);
        check_config_value(*it, value);
        s.params[key] = value;
      }
    }
    for (const auto& p : cmd->params)
      if (opts[cmd->name][p.name]->count() > 0) s.params[p.name] = parse_flag(p, raw[cmd->name][p.name]);
    s.seed = seed.value_or(1);
    config["seed"] = s.seed;
    config["format"] = format;
    config["params"] = s.params;

    const Outcome out = cmd->run(s);
    if (format == "csv") {
      if (!out.csv) throw UsageError("csv export is not available for " + cmd->name);
      emit(out.ok ? *out.csv : "# FAILED\n" + *out.csv, output);
    } else {
      json rep = envelope(cmd->name, config);
      rep["status"] = out.ok ? "OK" : "FAILED";
      rep["provenance"] = out.provenance;
      rep["result"] = out.result;
      emit(rep.dump(2) + "\n", output);
    }
    return out.ok ? 0 : 1;
  } catch (const std::exception& e) {
    json rep = envelope(cmd->name, config);
    rep["status"] = "FAILED";
    rep["error"] = {{"type", error_type(e)}, {"message", e.what()}};
    std::cerr << "spingeom " << cmd->name << ": " << e.what() << '\n';
    try {
      emit(rep.dump(2) + "\n", output);
    } catch (const std::exception&) {
      std::cout << rep.dump(2) << '\n';
    }
    return error_code(e);
  }
}
