#pragma once

// Ordered eigenvalue/multiplicity lists shared by the closed-form and
// discretized spectra, with JSON and CSV export.

#include "spingeom/rational.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace spingeom {

enum class OperatorTag { dirac_squared, connection_laplacian };
enum class Provenance { closed_form, literature_closed_form, discretized };

inline const char* to_string(OperatorTag t) {
  return t == OperatorTag::dirac_squared ? "D^2" : "connection_laplacian";
}

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::closed_form: return "closed-form";
    case Provenance::literature_closed_form: return "literature-closed-form";
    case Provenance::discretized: return "discretized";
  }
  return "?";
}

struct EigenPair {
  double value = 0.0;
  long long multiplicity = 0;
  std::optional<Rational> exact;  // value = exact * unit, when known exactly
};

struct SpectrumReport {
  std::vector<EigenPair> pairs;  // ascending, multiplicity >= 1
  OperatorTag op = OperatorTag::dirac_squared;
  std::string space;             // "torus", "circle", "sphere"
  int dimension = 0;
  std::vector<double> twist;
  std::vector<std::vector<double>> basis;
  double cutoff = 0.0;           // every eigenvalue <= cutoff is listed
  Provenance provenance = Provenance::closed_form;
  std::string exact_unit;        // "pi^2" or "1" when pairs carry exact values

  long long total_multiplicity() const {
    long long s = 0;
    for (const auto& p : pairs) s += p.multiplicity;
    return s;
  }

  /// Number of eigenvalues <= x, counted with multiplicity.
  long long count_upto(double x) const {
    long long s = 0;
    for (const auto& p : pairs)
      if (p.value <= x) s += p.multiplicity;
    return s;
  }

  /// lambda_k (k >= 1) counted with multiplicity.
  const EigenPair& at(long long k) const {
    if (k < 1) throw InvalidArgument("SpectrumReport::at: index must be >= 1");
    long long seen = 0;
    for (const auto& p : pairs) {
      seen += p.multiplicity;
      if (seen >= k) return p;
    }
    throw InvalidArgument("SpectrumReport::at: index " + std::to_string(k) + " beyond the listed cutoff");
  }

  /// Eigenvalues repeated by multiplicity.
  std::vector<double> flattened() const {
    std::vector<double> out;
    for (const auto& p : pairs) out.insert(out.end(), static_cast<std::size_t>(p.multiplicity), p.value);
    return out;
  }
};

inline nlohmann::json to_json(const SpectrumReport& r) {
  nlohmann::json j;
  j["space"] = r.space;
  j["operator"] = to_string(r.op);
  j["dimension"] = r.dimension;
  j["twist"] = r.twist;
  j["basis"] = r.basis;
  j["cutoff"] = r.cutoff;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) pairs.push_back({p.value, p.multiplicity});
  j["pairs"] = std::move(pairs);
  j["provenance"] = to_string(r.provenance);
  if (!r.exact_unit.empty() && std::all_of(r.pairs.begin(), r.pairs.end(), [](const EigenPair& p) { return p.exact.has_value(); })) {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& p : r.pairs) ex.push_back(to_string(*p.exact));
    j["exact"] = {{"unit", r.exact_unit}, {"values", std::move(ex)}};
  }
  return j;
}

inline std::string to_csv(const SpectrumReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "value,multiplicity\n";
  for (const auto& p : r.pairs) os << p.value << ',' << p.multiplicity << '\n';
  return os.str();
}

}  // namespace spingeom
