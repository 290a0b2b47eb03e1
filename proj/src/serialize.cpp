#include "quadrep/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "quadrep/errors.hpp"

namespace quadrep {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw SchemaError("not a number: '" + std::string(s) + "'");
  return v;
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

double get_number(const Json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw SchemaError(std::string("expected a number for '") + what + "'");
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  return j.at(key);
}

Json array(std::span<const double> v) {
  Json a = Json::array();
  for (double e : v) a.push_back(number(e));
  return a;
}

std::vector<double> get_array(const Json& j, const char* what) {
  if (!j.is_array()) throw SchemaError(std::string("expected an array for '") + what + "'");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(get_number(e, what));
  return v;
}

const char* basis_name(Basis b) { return b == Basis::legendre ? "legendre" : "monomial"; }

Basis basis_from(const Json& j) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "legendre") return Basis::legendre;
  if (s == "monomial") return Basis::monomial;
  throw SchemaError("unknown basis '" + s + "'");
}

void put_domain(Json& j, const PolyCoeffs& p) {
  j["domain"] = Json::array({number(p.x_min), number(p.x_max)});
  j["basis"] = basis_name(p.basis);
}

PolyCoeffs get_poly(const Json& j, const char* key) {
  const auto dom = get_array(field(j, "domain"), "domain");
  if (dom.size() != 2) throw SchemaError("domain must have two entries");
  return PolyCoeffs{basis_from(field(j, "basis")), get_array(field(j, key), key), dom[0], dom[1]};
}

Json index_json(const IndexFunction& idx) {
  Json j;
  j["breakpoints"] = array(idx.breakpoints);
  j["first_sign"] = idx.first_sign;
  return j;
}

Json tag_list(std::span<const ColumnTag> tags) {
  Json a = Json::array();
  for (const auto& t : tags) a.push_back(t.label());
  return a;
}

}  // namespace

Json to_json(const Representation& rep) {
  Json j;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Degree0Rep>) {
          j["type"] = "degree0";
          put_domain(j, r.coeffs);
          j["c"] = array(r.coeffs.coeffs);
        } else if constexpr (std::is_same_v<T, Degree1Rep>) {
          j["type"] = "degree1";
          put_domain(j, r.numerator);
          j["b_tail"] = array(r.denominator_tail);  // b = 1 - sum_{n>=1} b_n L_n
          j["c"] = array(r.numerator.coeffs);
        } else {
          if (r.a.basis != r.b.basis || r.a.basis != r.c.basis)
            throw std::invalid_argument("to_json: a, b and c must share one basis");
          j["type"] = "degree2";
          put_domain(j, r.a);
          j["a"] = array(r.a.coeffs);
          j["b"] = array(r.b.coeffs);
          j["c"] = array(r.c.coeffs);
          j["index"] = index_json(r.index);
          j["fit_residual"] = number(r.fit_residual);
          j["a_scale"] = number(r.a_scale);
          Json prov;
          prov["method"] = r.provenance.method;
          prov["N0"] = r.provenance.n0;
          prov["N1"] = r.provenance.n1;
          prov["N2"] = r.provenance.n2;
          prov["trace_id"] = r.provenance.trace_id;
          j["provenance"] = prov;
          j["degeneracy"] = r.degeneracy;
        }
      },
      rep);
  return j;
}

Representation rep_from_json(const Json& j) {
  try {
    const std::string type = field(j, "type").get<std::string>();
    if (type == "degree0") return Degree0Rep{get_poly(j, "c")};
    if (type == "degree1") {
      Degree1Rep r;
      r.numerator = get_poly(j, "c");
      r.denominator_tail = get_array(field(j, "b_tail"), "b_tail");
      return r;
    }
    if (type != "degree2") throw SchemaError("unknown representation type '" + type + "'");
    Degree2Rep r;
    r.a = get_poly(j, "a");
    r.b = get_poly(j, "b");
    r.c = get_poly(j, "c");
    const Json& idx = field(j, "index");
    r.index.breakpoints = get_array(field(idx, "breakpoints"), "breakpoints");
    r.index.first_sign = field(idx, "first_sign").get<int>();
    if (r.index.first_sign != 1 && r.index.first_sign != -1) throw SchemaError("first_sign must be +1 or -1");
    r.fit_residual = get_number(field(j, "fit_residual"), "fit_residual");
    r.a_scale = j.contains("a_scale") ? get_number(j.at("a_scale"), "a_scale") : 0.0;
    if (j.contains("provenance")) {
      const Json& p = j.at("provenance");
      r.provenance.method = p.value("method", "");
      r.provenance.n0 = p.value("N0", std::size_t{0});
      r.provenance.n1 = p.value("N1", std::size_t{0});
      r.provenance.n2 = p.value("N2", std::size_t{0});
      r.provenance.trace_id = p.value("trace_id", "");
    }
    if (j.contains("degeneracy")) r.degeneracy = j.at("degeneracy").get<std::vector<std::string>>();
    if (r.a_scale == 0.0) {
      std::vector<double> probe(257);
      for (std::size_t i = 0; i < probe.size(); ++i)
        probe[i] = r.a.x_min + (r.a.x_max - r.a.x_min) * static_cast<double>(i) / 256.0;
      refresh_a_scale(r, probe);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("representation JSON: ") + e.what());
  }
}

Json to_json(const SelectionTrace& trace) {
  Json j;
  j["id"] = trace.id;
  j["rng_seed"] = trace.rng_seed;
  j["initial_residual"] = number(trace.initial_residual);
  j["final_residual"] = number(trace.final_residual);
  j["reached_target"] = trace.reached_target;
  j["exhausted"] = trace.exhausted;
  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    Json st;
    st["step"] = s.step;
    Json cands = Json::array();
    for (const auto& c : s.candidates) {
      Json cj;
      cj["stream"] = static_cast<int>(c.stream);
      cj["columns"] = tag_list(c.columns);
      cj["residual"] = c.residual ? number(*c.residual) : Json();
      cands.push_back(cj);
    }
    st["candidates"] = cands;
    st["chosen"] = tag_list(s.chosen);
    st["residual_after"] = number(s.residual_after);
    st["tie_broken"] = s.tie_broken;
    st["notes"] = s.notes;
    steps.push_back(st);
  }
  j["steps"] = steps;
  return j;
}

Json to_json(const ManifoldFit4& fit) {
  Json j;
  j["method"] = fit.method;
  j["domain"] = Json::array({number(fit.x_min), number(fit.x_max)});
  j["b0"] = number(fit.b0);
  j["b1"] = number(fit.b1);
  j["c0"] = number(fit.c0);
  j["c1"] = number(fit.c1);
  j["reference"] = {{"b0", number(fit.ref_b0)}, {"b1", number(fit.ref_b1)},
                    {"c0", number(fit.ref_c0)}, {"c1", number(fit.ref_c1)}};
  j["residual"] = number(fit.residual);
  j["condition"] = number(fit.condition);
  return j;
}

Json to_json(const IterativeResult& result) {
  Json j;
  j["converged"] = result.converged;
  j["stop_reason"] = result.stop_reason;
  j["initial_fit"] = to_json(result.initial.fit);
  j["final_fit"] = to_json(result.final.fit);
  Json trace = Json::array();
  for (const auto& r : result.trace) {
    trace.push_back({{"iteration", r.iteration},
                     {"b0", number(r.ref_b0)},
                     {"b1", number(r.ref_b1)},
                     {"c0", number(r.ref_c0)},
                     {"c1", number(r.ref_c1)},
                     {"max_rel_change", number(r.max_rel_change)},
                     {"index_flips", r.index_flips},
                     {"constraints_used", r.constraints_used},
                     {"max_constraint_residual", number(r.max_constraint_residual)}});
  }
  j["trace"] = trace;
  return j;
}

void write_dataset_csv(std::ostream& out, std::span<const double> x, std::span<const double> f) {
  if (x.size() != f.size()) throw std::invalid_argument("write_dataset_csv: length mismatch");
  out << "x,f\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << format_double(x[i]) << ',' << format_double(f[i]) << '\n';
}

NoisyDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("dataset CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,f") throw SchemaError("dataset CSV: expected header 'x,f', got '" + line + "'");
  NoisyDataset d;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw SchemaError("dataset CSV: row " + std::to_string(row) + " must have two fields");
    try {
      d.positions.push_back(parse_double(std::string_view(line).substr(0, comma)));
      d.observed.push_back(parse_double(std::string_view(line).substr(comma + 1)));
    } catch (const SchemaError& e) {
      throw SchemaError("dataset CSV: row " + std::to_string(row) + ": " + e.what());
    }
  }
  validate(d);
  return d;
}

Json dataset_metadata(const NoisyDataset& data) {
  Json j;
  j["noise_model"] = data.noise_model;
  j["sigma"] = data.sigma ? number(*data.sigma) : Json();
  j["seed"] = data.seed ? Json(*data.seed) : Json();
  return j;
}

void apply_metadata(NoisyDataset& data, const Json& meta) {
  data.noise_model = meta.value("noise_model", "");
  if (meta.contains("sigma") && !meta.at("sigma").is_null()) data.sigma = get_number(meta.at("sigma"), "sigma");
  if (meta.contains("seed") && !meta.at("seed").is_null()) data.seed = meta.at("seed").get<std::uint64_t>();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace quadrep
