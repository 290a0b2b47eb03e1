#include "quadrep/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "quadrep/builtin.hpp"
#include "quadrep/denoise.hpp"
#include "quadrep/errors.hpp"
#include "quadrep/methods.hpp"
#include "quadrep/parallel.hpp"
#include "quadrep/serialize.hpp"

namespace fs = std::filesystem;

namespace quadrep {

namespace {

// Raised for inconsistent flag combinations that CLI11 cannot express.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OutputSet {
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::string primary;                                      // printed when there is no --out-dir
  std::vector<std::string> summary;                         // printed when there is one
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) parts.push_back(item);
  return parts;
}

NoisyDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_dataset_csv(in);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json option_config(const CLI::App& sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (name == "help" || name == "out-dir") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[name] = res.size() == 1 ? Json(res.front()) : Json(res);
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

std::vector<std::string> strip_out_dir(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out-dir=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  return kept;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string fn, input, method;
  std::size_t n0 = 0, n1 = 0, n2 = 0, k = 0, max_terms = 0, m = 1000, batch = 1, cap = 0;
  double target = 0.0, tol = 1e-12;
  std::uint64_t seed = 0;
  CLI::Option *n0_opt = nullptr, *n1_opt = nullptr, *n2_opt = nullptr, *k_opt = nullptr,
              *max_terms_opt = nullptr, *target_opt = nullptr, *cap_opt = nullptr;
};

std::size_t coefficient_count(const Representation& rep) {
  return std::visit(
      [](const auto& r) -> std::size_t {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Degree0Rep>) return r.coeffs.coeffs.size();
        else if constexpr (std::is_same_v<T, Degree1Rep>) return r.numerator.coeffs.size() + r.denominator_tail.size();
        else return r.a.coeffs.size() + r.b.coeffs.size() + r.c.coeffs.size() - 1;
      },
      rep);
}

OutputSet cmd_fit(const FitArgs& a) {
  if (a.fn.empty() == a.input.empty()) throw UsageError("fit: give exactly one of --fn or --input");
  SampleGrid grid;
  if (!a.fn.empty()) {
    const BuiltinFunction bf = builtin_function(a.fn);
    grid = build_grid(bf.f, bf.x_min, bf.x_max, a.m);
  } else {
    const NoisyDataset d = load_dataset(a.input);
    grid = build_grid_tabulated(d.positions, d.observed);
  }
  const Method method = method_from_string(a.method);
  const bool have_k = a.k_opt->count() > 0;
  const auto need = [&](std::initializer_list<CLI::Option*> opts) {
    if (have_k) return;
    for (CLI::Option* o : opts)
      if (o->count() == 0) throw UsageError("fit: " + a.method + " needs --k or " + o->get_name());
  };

  OutputSet out;
  Representation rep;
  Json side;
  std::string side_name;
  switch (method) {
    case Method::deg0:
      need({a.n0_opt});
      rep = have_k ? fit_method(grid, method, a.k).rep : Representation(fit_degree0(grid, a.n0));
      break;
    case Method::deg1:
      need({a.n0_opt, a.n1_opt});
      rep = have_k ? fit_method(grid, method, a.k).rep : Representation(fit_degree1(grid, a.n0, a.n1));
      break;
    case Method::deg2_uniform:
    case Method::deg2_uniform_n2zero:
      need({a.n0_opt, a.n1_opt});
      if (method == Method::deg2_uniform) need({a.n2_opt});
      rep = have_k ? fit_method(grid, method, a.k).rep
                   : Representation(fit_degree2_uniform(grid, a.n0, a.n1, method == Method::deg2_uniform ? a.n2 : 0));
      break;
    case Method::deg2_greedy: {
      SelectionConfig cfg;
      if (have_k) cfg.max_terms = a.k;
      if (a.max_terms_opt->count()) cfg.max_terms = a.max_terms;
      if (a.target_opt->count()) cfg.target_residual = a.target;
      cfg.batch_size = a.batch;
      cfg.stream_cap = a.cap_opt->count() ? a.cap : 60;
      cfg.rng_seed = a.seed;
      GreedyResult r = greedy_select(grid, cfg);
      side = to_json(r.trace);
      side_name = "trace.json";
      rep = std::move(r.rep);
      break;
    }
    case Method::deg2_rrqr: {
      std::optional<std::size_t> terms;
      if (have_k) terms = a.k;
      if (a.max_terms_opt->count()) terms = a.max_terms;
      RrqrResult r = rrqr_select(grid, a.cap_opt->count() ? a.cap : 40, a.tol, terms);
      side = {{"rank", r.report.rank},
              {"numerical_rank", r.report.numerical_rank},
              {"column_count", r.report.column_count},
              {"truncate_tol", r.report.truncate_tol}};
      Json sel = Json::array();
      for (const auto& t : r.report.selected) sel.push_back(t.label());
      side["selected"] = sel;
      side_name = "rank.json";
      rep = std::move(r.rep);
      break;
    }
  }

  const std::size_t k = coefficient_count(rep);
  std::string diag;
  const double residual = residual_l2(rep, grid, &diag);
  const double rel = relative_error(rep, grid);
  out.files.emplace_back("rep.json", dump(to_json(rep)));
  if (!side_name.empty()) out.files.emplace_back(side_name, dump(side));
  out.primary = dump(to_json(rep));
  out.summary.push_back("method=" + a.method + " K=" + std::to_string(k) + " residual=" + format_double(residual) +
                        " relative_error=" + format_double(rel));
  if (!diag.empty()) out.summary.push_back("warning: " + diag);
  if (method == Method::deg2_rrqr) {
    const Degree0Rep d0 = fit_degree0(grid, k - 1);
    out.summary.push_back("deg0 at K=" + std::to_string(k) + ": residual=" + format_double(residual_l2(d0, grid)));
  }
  return out;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string rep, points;
  std::size_t grid = 0;
  bool branches = false;
};

std::vector<double> read_points(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::vector<double> xs;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string cell = line.substr(0, line.find(','));
    if (cell.empty() || cell == "\r") continue;
    if (first && cell.front() == 'x') {
      first = false;
      continue;
    }
    first = false;
    xs.push_back(parse_double(cell));
  }
  return xs;
}

OutputSet cmd_eval(const EvalArgs& a, std::ostream& err) {
  const Representation rep = rep_from_json(read_json_file(a.rep));
  const PolyCoeffs& dom = std::visit(
      [](const auto& r) -> const PolyCoeffs& {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Degree0Rep>) return r.coeffs;
        else if constexpr (std::is_same_v<T, Degree1Rep>) return r.numerator;
        else return r.a;
      },
      rep);
  if (a.points.empty() == (a.grid == 0)) throw UsageError("eval: give exactly one of --points or --grid");
  if (a.branches && !std::holds_alternative<Degree2Rep>(rep))
    throw UsageError("eval: --branches needs a degree-2 representation");
  std::vector<double> xs;
  if (!a.points.empty()) {
    xs = read_points(a.points);
  } else if (a.grid == 1) {
    xs = {0.5 * (dom.x_min + dom.x_max)};
  } else {
    for (std::size_t i = 0; i < a.grid; ++i)
      xs.push_back(i + 1 == a.grid ? dom.x_max
                                   : dom.x_min + (dom.x_max - dom.x_min) * static_cast<double>(i) /
                                                     static_cast<double>(a.grid - 1));
  }
  std::ostringstream csv;
  csv << (a.branches ? "x,value,root_lo,root_hi\n" : "x,value\n");
  std::size_t missing = 0;
  for (double x : xs) {
    csv << format_double(x) << ',';
    try {
      csv << format_double(eval_rep(rep, x));
    } catch (const std::exception&) {
      ++missing;
    }
    if (a.branches) {
      csv << ',';
      try {
        const RootPair r = roots_at(std::get<Degree2Rep>(rep), x);
        csv << format_double(r.lo) << ',' << format_double(r.hi);
      } catch (const std::exception&) {
        csv << ',';
      }
    }
    csv << '\n';
  }
  if (missing > 0) err << "warning: " << missing << " point(s) without a real value\n";
  OutputSet out;
  out.files.emplace_back("eval.csv", csv.str());
  out.primary = csv.str();
  out.summary.push_back("points=" + std::to_string(xs.size()) + " missing=" + std::to_string(missing));
  return out;
}

// ---------------------------------------------------------------- convergence

struct ConvergenceArgs {
  std::string fn, methods = "deg0,deg1,deg2-uniform,deg2-greedy,deg2-rrqr";
  std::size_t k_min = 2, k_max = 30, k_step = 1, m = 1000, cap = 40, batch = 1;
  std::uint64_t seed = 0;
};

OutputSet cmd_convergence(const ConvergenceArgs& a, std::ostream& err) {
  if (a.k_step == 0 || a.k_min > a.k_max) throw UsageError("convergence: bad K range");
  const BuiltinFunction bf = builtin_function(a.fn);
  const SampleGrid grid = build_grid(bf.f, bf.x_min, bf.x_max, a.m);
  std::vector<Method> methods;
  for (const auto& name : split_list(a.methods)) methods.push_back(method_from_string(name));
  std::vector<std::size_t> ks;
  for (std::size_t k = a.k_min; k <= a.k_max; k += a.k_step) ks.push_back(k);

  MethodOptions opts;
  opts.rrqr_cap = a.cap;
  opts.batch_size = a.batch;
  opts.seed = a.seed;
  const std::size_t cells = methods.size() * ks.size();
  std::vector<double> error(cells);
  std::vector<std::string> diag(cells);
  parallel_for(cells, [&](std::size_t i) {
    const Method m = methods[i / ks.size()];
    const std::size_t k = ks[i % ks.size()];
    try {
      error[i] = relative_error(fit_method(grid, m, k, opts).rep, grid, &diag[i]);
    } catch (const std::exception& e) {
      error[i] = std::numeric_limits<double>::quiet_NaN();
      diag[i] = e.what();
    }
  });

  std::ostringstream csv;
  csv << "# function=" << bf.name << " M=" << a.m << "\n"
      << "# error = ||f_hat - f||_W / ||f||_W over the Gauss-Legendre nodes\n"
      << "# K = number of fitted coefficients (the fixed constant of the degree-1 denominator "
         "and of a(x) is not counted)\n"
      << "method,K,error\n";
  for (std::size_t i = 0; i < cells; ++i) {
    csv << to_string(methods[i / ks.size()]) << ',' << ks[i % ks.size()] << ',' << format_double(error[i]) << '\n';
    if (!diag[i].empty())
      err << "warning: " << to_string(methods[i / ks.size()]) << " K=" << ks[i % ks.size()] << ": " << diag[i] << '\n';
  }
  OutputSet out;
  out.files.emplace_back("convergence.csv", csv.str());
  out.primary = csv.str();
  out.summary.push_back("cells=" + std::to_string(cells));
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string preset, target;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  CLI::Option *seed_opt = nullptr, *sigma_opt = nullptr;
};

OutputSet cmd_generate(const GenerateArgs& a, std::ostream& err) {
  if (a.seed_opt->count() == 0) throw UsageError("generate: --seed is required");
  NoiseSpec spec;
  bool have_sigma = false;
  if (!a.preset.empty()) {
    static const std::map<std::string, NoiseSpec> presets{{"case1", {NoiseTarget::function, 30.0}},
                                                          {"case2", {NoiseTarget::manifold, 5000.0}},
                                                          {"case3", {NoiseTarget::function, 150.0}},
                                                          {"case4", {NoiseTarget::function, 200.0}}};
    const auto it = presets.find(a.preset);
    if (it == presets.end()) throw UsageError("generate: unknown preset '" + a.preset + "'");
    spec = it->second;
    have_sigma = true;
  }
  if (!a.target.empty()) spec.target = a.target == "manifold" ? NoiseTarget::manifold : NoiseTarget::function;
  if (a.sigma_opt->count()) {
    spec.sigma = a.sigma;
    have_sigma = true;
  }
  if (!have_sigma) throw UsageError("generate: give --preset or --sigma");

  const GroundTruth truth = step_ground_truth();
  const GeneratedData gen = generate_noisy(truth, spec, a.seed);
  if (gen.clamped > 0) err << "warning: " << gen.clamped << " sample(s) clamped to the vertex\n";
  std::ostringstream data, truth_csv;
  write_dataset_csv(data, gen.data.positions, gen.data.observed);
  write_dataset_csv(truth_csv, truth.positions, gen.truth);
  Json meta = dataset_metadata(gen.data);
  meta["clamped"] = gen.clamped;
  OutputSet out;
  out.files.emplace_back("data.csv", data.str());
  out.files.emplace_back("data.meta.json", dump(meta));
  out.files.emplace_back("truth.csv", truth_csv.str());
  out.primary = data.str();
  out.summary.push_back("rows=" + std::to_string(gen.data.positions.size()) + " sigma=" +
                        format_double(spec.sigma) + " noise=" + gen.data.noise_model);
  return out;
}

// ---------------------------------------------------------------- denoise

struct DenoiseArgs {
  std::string input, mode, constraints = "all8", init = "case1", truth;
  double sigma2 = 0.0, init_sigma2 = 0.0, tol = 1e-6;
  std::size_t k = 10, max_iter = 50;
};

double correlation(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

OutputSet cmd_denoise(const DenoiseArgs& a) {
  const NoisyDataset data = load_dataset(a.input);
  Reconstruction rec;
  std::optional<IterativeResult> iter;
  if (a.mode == "ls") {
    rec = denoise_ls(data, 0);
  } else if (a.mode == "ls+vote") {
    rec = denoise_ls(data, a.k);
  } else if (a.mode == "debias+vote") {
    if (!(a.sigma2 > 0.0)) throw UsageError("denoise: debias+vote needs --sigma2 > 0");
    rec = denoise_case3(data, a.sigma2, a.k);
  } else if (a.mode == "iterative") {
    IterativeConfig cfg;
    if (a.constraints != "all8") {
      cfg.constraints.clear();
      for (const auto& name : split_list(a.constraints)) cfg.constraints.push_back(constraint_from_string(name));
    }
    if (a.init == "case1") cfg.init = InitMode::case1;
    else if (a.init == "case2") cfg.init = InitMode::case2;
    else if (a.init == "case3") cfg.init = InitMode::case3;
    else throw UsageError("denoise: unknown --init '" + a.init + "'");
    cfg.init_sigma2 = a.init_sigma2;
    cfg.k = a.k;
    cfg.max_iter = a.max_iter;
    cfg.tol = a.tol;
    iter = denoise_iterative(data, cfg);
    rec = iter->final;
  } else {
    throw UsageError("denoise: unknown --mode '" + a.mode + "'");
  }

  std::ostringstream csv;
  csv << "x,f_obs,f_hat,eps_hat\n";
  for (std::size_t i = 0; i < data.positions.size(); ++i)
    csv << format_double(data.positions[i]) << ',' << format_double(data.observed[i]) << ','
        << format_double(rec.values[i]) << ',' << format_double(rec.noise_estimate[i]) << '\n';

  double mean = 0.0;
  for (double e : rec.noise_estimate) mean += e;
  mean /= static_cast<double>(rec.noise_estimate.size());
  Json report;
  report["mode"] = a.mode;
  report["samples"] = data.positions.size();
  report["k"] = a.mode == "ls" ? 0 : a.k;
  report["noise_mean"] = mean;
  report["noise_x_correlation"] = correlation(rec.noise_estimate, data.positions);
  report["vote_rounds"] = rec.vote.rounds;
  report["vote_converged"] = rec.vote.converged;
  report["breakpoints"] = rec.vote.index.breakpoints;
  if (iter) {
    report["converged"] = iter->converged;
    report["iterations"] = iter->trace.size();
    report["stop_reason"] = iter->stop_reason;
  }
  if (!a.truth.empty()) {
    const NoisyDataset truth = load_dataset(a.truth);
    if (truth.positions != data.positions) throw UsageError("denoise: --truth positions differ from --input");
    const IndexAssignment ideal = assign_index(rec.fit.manifold(), truth.positions, truth.observed);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < ideal.dense.size(); ++i) wrong += ideal.dense[i] != rec.vote.dense[i];
    report["rmse_vs_truth"] = rmse(rec.values, truth.observed);
    report["mislabels_vs_truth"] = wrong;
    if (iter) report["initial_rmse_vs_truth"] = rmse(iter->initial.values, truth.observed);
  }
  Json fit = iter ? to_json(*iter) : to_json(rec.fit);

  OutputSet out;
  out.files.emplace_back("reconstruction.csv", csv.str());
  out.files.emplace_back("fit.json", dump(fit));
  out.files.emplace_back("report.json", dump(report));
  out.primary = csv.str();
  std::string line = "mode=" + a.mode + " b0=" + format_double(rec.fit.b0) + " b1=" + format_double(rec.fit.b1) +
                     " c0=" + format_double(rec.fit.c0) + " c1=" + format_double(rec.fit.c1);
  if (iter) line += std::string(" converged=") + (iter->converged ? "true" : "false");
  out.summary.push_back(line);
  return out;
}

// ---------------------------------------------------------------- replay

int cmd_replay(const std::string& manifest_path, std::string out_dir, std::ostream& out, std::ostream& err) {
  const Json manifest = read_json_file(manifest_path);
  std::vector<std::string> args;
  std::vector<std::string> outputs;
  try {
    args = manifest.at("argv").get<std::vector<std::string>>();
    outputs = manifest.at("outputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
  if (args.empty() || args.front() == "replay") throw SchemaError("manifest: nothing to replay");
  const fs::path original = fs::path(manifest_path).parent_path();
  if (out_dir.empty()) out_dir = (original / "replay").string();
  args.push_back("--out-dir");
  args.push_back(out_dir);
  std::ostringstream sink_out, sink_err;
  const int code = run_cli(args, sink_out, sink_err);
  if (code != kExitOk) {
    err << sink_err.str();
    return code;
  }
  bool same = true;
  for (const auto& name : outputs) {
    const bool eq = read_text_file(original / name) == read_text_file(fs::path(out_dir) / name);
    out << (eq ? "identical " : "DIFFERENT ") << name << '\n';
    same = same && eq;
  }
  return same ? kExitOk : kExitNumerical;
}

int finish(const OutputSet& result, const std::string& out_dir, const std::string& command,
           const std::vector<std::string>& args, const CLI::App& sub, std::optional<std::uint64_t> seed,
           std::ostream& out) {
  if (out_dir.empty()) {
    out << result.primary;
    return kExitOk;
  }
  fs::create_directories(out_dir);
  Json manifest;
  manifest["command"] = command;
  manifest["argv"] = strip_out_dir(args);
  manifest["config"] = option_config(sub);
  manifest["seed"] = seed ? Json(*seed) : Json();
  manifest["version"] = kVersion;
  manifest["timestamp"] = utc_timestamp();
  Json names = Json::array();
  for (const auto& [name, text] : result.files) {
    write_text_file(fs::path(out_dir) / name, text);
    names.push_back(name);
  }
  manifest["outputs"] = names;
  write_text_file(fs::path(out_dir) / "manifest.json", dump(manifest));
  for (const auto& line : result.summary) out << line << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Degree-0/1/2 function representations and step-signal denoising", "quadrep"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string out_dir;

  FitArgs fa;
  CLI::App* fit = app.add_subcommand("fit", "Fit a representation to a built-in function or a CSV");
  fit->add_option("--fn", fa.fn, "Built-in function name");
  fit->add_option("--input", fa.input, "CSV with header x,f (tabulated grid)");
  fit->add_option("--method", fa.method, "deg0 | deg1 | deg2-uniform | deg2-uniform-N2=0 | deg2-greedy | deg2-rrqr")
      ->required();
  fa.n0_opt = fit->add_option("--n0", fa.n0, "Highest degree of stream 1");
  fa.n1_opt = fit->add_option("--n1", fa.n1, "Highest degree of stream 2");
  fa.n2_opt = fit->add_option("--n2", fa.n2, "Highest degree of stream 3");
  fa.k_opt = fit->add_option("--k", fa.k, "Total coefficient count (replaces --n0/--n1/--n2)");
  fa.max_terms_opt = fit->add_option("--max-terms", fa.max_terms, "Greedy/RRQR column budget");
  fa.target_opt = fit->add_option("--target", fa.target, "Greedy target residual");
  fit->add_option("--batch", fa.batch, "Greedy batch size (1, 3 or 5)")->capture_default_str();
  fa.cap_opt = fit->add_option("--cap", fa.cap, "Per-stream degree cap (greedy 60, rrqr 40)");
  fit->add_option("--tol", fa.tol, "RRQR truncation tolerance")->capture_default_str();
  fit->add_option("--seed", fa.seed, "Tie-breaking seed")->capture_default_str();
  fit->add_option("--m", fa.m, "Gauss-Legendre nodes")->capture_default_str();
  fit->add_option("--out-dir", out_dir, "Directory for rep.json and manifest.json");

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a representation JSON");
  eval->add_option("--rep", ea.rep, "Representation JSON")->required();
  eval->add_option("--points", ea.points, "File with one x per line (first CSV column)");
  eval->add_option("--grid", ea.grid, "Number of uniform points over the domain");
  eval->add_flag("--branches", ea.branches, "Add root_lo/root_hi columns");
  eval->add_option("--out-dir", out_dir, "Directory for eval.csv and manifest.json");

  ConvergenceArgs ca;
  CLI::App* conv = app.add_subcommand("convergence", "Error versus coefficient count K");
  conv->add_option("--fn", ca.fn, "Built-in function name")->required();
  conv->add_option("--methods", ca.methods, "Comma-separated method list")->capture_default_str();
  conv->add_option("--k-min", ca.k_min)->capture_default_str();
  conv->add_option("--k-max", ca.k_max)->capture_default_str();
  conv->add_option("--k-step", ca.k_step)->capture_default_str();
  conv->add_option("--m", ca.m, "Gauss-Legendre nodes")->capture_default_str();
  conv->add_option("--cap", ca.cap, "RRQR per-stream degree cap")->capture_default_str();
  conv->add_option("--batch", ca.batch, "Greedy batch size")->capture_default_str();
  conv->add_option("--seed", ca.seed, "Greedy tie-breaking seed")->capture_default_str();
  conv->add_option("--out-dir", out_dir, "Directory for convergence.csv and manifest.json");

  GenerateArgs ga;
  CLI::App* gen = app.add_subcommand("generate", "Noisy samples of the 25/255 step");
  gen->add_option("--preset", ga.preset, "case1 | case2 | case3 | case4");
  gen->add_option("--target", ga.target, "function | manifold")->check(CLI::IsMember({"function", "manifold"}));
  ga.sigma_opt = gen->add_option("--sigma", ga.sigma, "Noise standard deviation");
  ga.seed_opt = gen->add_option("--seed", ga.seed, "Generator seed (required)");
  gen->add_option("--out-dir", out_dir, "Directory for data.csv, data.meta.json, truth.csv");

  DenoiseArgs da;
  CLI::App* den = app.add_subcommand("denoise", "Recover the step from noisy samples");
  den->add_option("--input", da.input, "CSV with header x,f")->required();
  den->add_option("--mode", da.mode, "ls | ls+vote | debias+vote | iterative")->required();
  den->add_option("--sigma2", da.sigma2, "Known noise variance (debias+vote)");
  den->add_option("--k", da.k, "Voting neighbours")->capture_default_str();
  den->add_option("--constraints", da.constraints, "all8 or a comma list of 1,x,x2,f,xf,x2f,f2,xf2")
      ->capture_default_str();
  den->add_option("--init", da.init, "Iterative start: case1 | case2 | case3")->capture_default_str();
  den->add_option("--init-sigma2", da.init_sigma2, "Variance guess for --init case3");
  den->add_option("--max-iter", da.max_iter)->capture_default_str();
  den->add_option("--tol", da.tol)->capture_default_str();
  den->add_option("--truth", da.truth, "Ground-truth CSV for the report");
  den->add_option("--out-dir", out_dir, "Directory for reconstruction.csv, fit.json, report.json");

  std::string manifest;
  CLI::App* rep = app.add_subcommand("replay", "Re-run a manifest and compare its outputs byte by byte");
  rep->add_option("--manifest", manifest, "manifest.json")->required();
  rep->add_option("--out-dir", out_dir, "Where to regenerate (default: <manifest dir>/replay)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*rep) return cmd_replay(manifest, out_dir, out, err);
    OutputSet result;
    std::optional<std::uint64_t> seed;
    const CLI::App* sub = app.get_subcommands().front();
    if (*fit) {
      result = cmd_fit(fa);
      seed = fa.seed;
    } else if (*eval) {
      result = cmd_eval(ea, err);
    } else if (*conv) {
      result = cmd_convergence(ca, err);
      seed = ca.seed;
    } else if (*gen) {
      result = cmd_generate(ga, err);
      seed = ga.seed;
    } else {
      result = cmd_denoise(da);
    }
    return finish(result, out_dir, command, args, *sub, seed, out);
  } catch (const std::invalid_argument& e) {
    err << "quadrep " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "quadrep " << command << ": " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace quadrep
