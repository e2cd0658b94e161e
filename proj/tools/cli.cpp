#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "lattes_forge/elliptic.hpp"
#include "lattes_forge/lattes.hpp"
#include "lattes_forge/perturbation.hpp"
#include "lattes_forge/serialize.hpp"

namespace lattes_forge::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace perturbation;

namespace {

struct RunConfig {
  int a = 2;
  int case_tag = 1;
  bool case_given = false;
  std::string x0 = "1/3";
  std::string y0 = "1";
  int k_min = 3;
  int k_max = 6;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string format = "json";
};

struct GridAxis {
  double lo = 0.0, hi = 0.0;
  int n = 1;
  double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::CoprimalityViolation: return kUsage;
    case ErrorCode::PrecisionExhausted: return kPrecision;
    default: return kFailed;
  }
}

int threads_cap() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("LATTES_FORGE_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

GridAxis parse_axis(const std::string& text) {
  std::istringstream in(text);
  std::string lo, hi, n;
  if (!std::getline(in, lo, ':') || !std::getline(in, hi, ':') || !std::getline(in, n) )
    fail(ErrorCode::ParseError, "grid axis '" + text + "' must be lo:hi:n");
  GridAxis axis;
  try {
    std::size_t used = 0;
    axis.lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    axis.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    axis.n = std::stoi(n, &used);
    if (used != n.size()) throw std::invalid_argument(n);
  } catch (const std::logic_error&) {
    fail(ErrorCode::ParseError, "grid axis '" + text + "' must be lo:hi:n");
  }
  if (axis.n < 1 || axis.n > 1000) fail(ErrorCode::ParseError, "grid axis '" + text + "' needs 1 <= n <= 1000");
  return axis;
}

std::pair<GridAxis, GridAxis> parse_grid(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos) fail(ErrorCode::ParseError, "grid '" + text + "' must be re_axis,im_axis");
  GridAxis re = parse_axis(text.substr(0, comma)), im = parse_axis(text.substr(comma + 1));
  if (!(im.lo > 0.0 && im.hi > 0.0)) fail(ErrorCode::ParseError, "grid imaginary parts must be positive");
  return {re, im};
}

lattes::LattesSpec spec_from(const RunConfig& c, Complex gamma) {
  return lattes::LattesSpec(elliptic::TorusParameter(gamma), c.a, lattes::case_from_int(c.case_tag));
}

Complex gamma0_from(const Rational& x0, const Rational& y0) { return {x0.to_double(), y0.to_double()}; }

void emit(std::ostream& out, const RunConfig& c, const fs::path& name, const std::string& text) {
  out << text;
  if (!c.out_dir.empty()) io::write_atomic(fs::path(c.out_dir) / name, text);
}

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--tol", c.tol, "Numerical tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "Sampling seed for map recovery");
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
}

void add_map_params(CLI::App* sub, RunConfig& c) {
  sub->add_option("--a", c.a, "Torus multiplier");
  sub->add_option("--case", c.case_tag, "1: a even, 2: a odd, 3: a odd with half-period shift")
      ->check(CLI::Range(1, 3))
      ->each([&](const std::string&) { c.case_given = true; });
  sub->add_option("--x0", c.x0, "Re gamma0 as p/q");
  sub->add_option("--y0", c.y0, "Im gamma0 as p/q");
}

// verify-lemma1 ------------------------------------------------------------

int cmd_verify_lemma1(const RunConfig& c, const std::string& grid_text, bool inject_fault, std::ostream& out) {
  auto [re, im] = parse_grid(grid_text);
  std::vector<Complex> gammas;
  for (int j = 0; j < im.n; ++j)
    for (int i = 0; i < re.n; ++i) gammas.emplace_back(re.at(i), im.at(j));

  // A quadratic distortion of Theta breaks the identity; used to check the detector.
  auto faulty = [](const elliptic::Theta& theta) {
    return [&theta](elliptic::TorusPoint p) {
      Complex z = theta(p).finite();
      return SpherePoint(z + 1e-2 * z * z);
    };
  };

  const double series_tol = std::min(kDefaultTol, c.tol / 100.0);
  std::vector<elliptic::ThetaData> rows(gammas.size());
  std::vector<std::optional<Error>> errors(gammas.size());
  const int workers = std::min<int>(threads_cap(), static_cast<int>(gammas.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < gammas.size(); i += workers) {
        try {
          elliptic::TorusParameter g(gammas[i]);
          if (inject_fault) {
            elliptic::Theta theta(g, series_tol);
            rows[i] = elliptic::theta_data(faulty(theta), g, series_tol);
          } else {
            rows[i] = elliptic::theta_data(g, series_tol);
          }
        } catch (const Error& e) {
          errors[i] = e;
        }
      }
    });
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < gammas.size(); ++i)
    if (errors[i]) {
      out << "verify-lemma1: gamma = " << gammas[i] << ": " << errors[i]->what() << "\n";
      return exit_code_for(errors[i]->code());
    }

  double worst_lemma = 0.0, worst_kappa = 0.0;
  for (const auto& r : rows) {
    worst_lemma = std::max(worst_lemma, r.lemma1_residual);
    worst_kappa = std::max(worst_kappa, r.kappa_residual);
  }
  const bool ok = worst_lemma < c.tol && worst_kappa < c.tol;

  std::ostringstream text;
  if (c.format == "csv") {
    text << "# lattes_forge lemma1 v" << io::kCsvVersion << "\n";
    text << "gamma_re,gamma_im,w_re,w_im,lambda_re,lambda_im,mu_re,mu_im,lemma1_residual,kappa_residual\n";
    text << std::setprecision(17);
    for (const auto& r : rows)
      text << r.gamma.real() << "," << r.gamma.imag() << "," << r.w.real() << "," << r.w.imag() << ","
           << r.lambda.real() << "," << r.lambda.imag() << "," << r.mu.real() << "," << r.mu.imag() << ","
           << r.lemma1_residual << "," << r.kappa_residual << "\n";
  } else {
    json doc = {{"schema_version", io::kSchemaVersion}, {"tol", c.tol}};
    json list = json::array();
    for (const auto& r : rows)
      list.push_back({{"gamma", cjson(r.gamma)},
                      {"w", cjson(r.w)},
                      {"lambda", cjson(r.lambda)},
                      {"mu", cjson(r.mu)},
                      {"kappa", cjson(r.kappa)},
                      {"lemma1_residual", r.lemma1_residual},
                      {"kappa_residual", r.kappa_residual}});
    doc["grid"] = list;
    doc["max_lemma1_residual"] = worst_lemma;
    doc["max_kappa_residual"] = worst_kappa;
    doc["pass"] = ok;
    text << doc.dump(2) << "\n";
  }
  emit(out, c, c.format == "csv" ? "lemma1.csv" : "lemma1.json", text.str());
  return ok ? kOk : kFailed;
}

// verify-lemma3 ------------------------------------------------------------

int cmd_verify_lemma3(const RunConfig& c, double h, std::ostream& out) {
  const Rational x0 = Rational::parse(c.x0), y0 = Rational::parse(c.y0);
  if (!(y0 > Rational(0))) fail(ErrorCode::InvalidArgument, "y0 must be positive");
  const Complex gamma = gamma0_from(x0, y0);
  std::vector<std::pair<int, int>> cases;
  if (c.case_given)
    cases.push_back({c.a, c.case_tag});
  else
    cases = {{2, 1}, {3, 2}, {3, 3}};

  json list = json::array();
  bool ok = true;
  std::ostringstream csv;
  csv << "# lattes_forge lemma3 v" << io::kCsvVersion << "\n"
      << "a,case,c_expected,c_re,c_im,residual,error_estimate,pass\n"
      << std::setprecision(17);
  for (auto [a, tag] : cases) {
    RunConfig one = c;
    one.a = a;
    one.case_tag = tag;
    Lemma3Report r = verify_lemma3(spec_from(one, gamma), h);
    const bool pass = std::abs(r.c_measured - r.c_expected) < 1e-6 && r.residual < 1e-6;
    ok = ok && pass;
    list.push_back({{"a", a},
                    {"case", tag},
                    {"c_expected", r.c_expected},
                    {"c_measured", cjson(r.c_measured)},
                    {"c_from_x", cjson(r.c_from_x)},
                    {"c_from_y", cjson(r.c_from_y)},
                    {"residual", r.residual},
                    {"error_estimate", r.error_estimate},
                    {"pass", pass}});
    csv << a << "," << tag << "," << r.c_expected << "," << r.c_measured.real() << "," << r.c_measured.imag()
        << "," << r.residual << "," << r.error_estimate << "," << pass << "\n";
  }
  if (c.format == "csv") {
    emit(out, c, "lemma3.csv", csv.str());
  } else {
    json doc = {{"schema_version", io::kSchemaVersion}, {"gamma", cjson(gamma)}, {"h", h}, {"cases", list},
                {"pass", ok}};
    emit(out, c, "lemma3.json", doc.dump(2) + "\n");
  }
  return ok ? kOk : kFailed;
}

// construct ----------------------------------------------------------------

struct RenderConfig {
  int size = 0;
  int max_iter = 64;
  double half_width = 2.0;
};

std::string render_ppm(const RationalMapCoeffs& f, const RenderConfig& r, int threads) {
  dynamics::RenderOptions options;
  options.width = options.height = r.size;
  options.max_iter = r.max_iter;
  options.half_width = r.half_width;
  options.threads = threads;
  return dynamics::to_ppm(dynamics::julia_render(f, options));
}

int cmd_construct(const RunConfig& c, const RenderConfig& render, std::ostream& out, std::ostream& err) {
  const Rational x0 = Rational::parse(c.x0), y0 = Rational::parse(c.y0);
  const RationalPair pair = standard_parameters(x0, y0, c.a);
  if (c.k_min < 1 || c.k_max < c.k_min) fail(ErrorCode::InvalidArgument, "need 1 <= k-min <= k-max");
  const Complex gamma0 = gamma0_from(x0, y0);
  const lattes::LattesSpec spec0 = spec_from(c, gamma0);
  const fs::path dir = c.out_dir.empty() ? fs::path("lattes_out") : fs::path(c.out_dir);

  ConstructOptions options;
  options.tol = c.tol;
  options.build.seed = c.seed;
  const int threads = threads_cap();
  ConvergenceTable table = convergence_table(spec0, pair, c.k_min, c.k_max, options, false, threads);

  std::vector<std::optional<ConstructionResult>> results(table.rows.size());
  const int n = static_cast<int>(table.rows.size());
  const int workers = std::clamp(threads, 1, n);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        TableRow& row = table.rows[i];
        try {
          require_feasible(c.a, row.k);
          ConstructionResult result = solve_gamma_k(spec0, pair, row.k, options);
          row.constructed = true;
          row.gamma_k = result.gamma_k;
          row.r_k = result.r_k;
          row.gamma_distance = std::abs(result.gamma_k - gamma0);
          row.certified = result.certificate.non_lattes_witness;
          row.postcritical_count = result.certificate.postcritical_count;
          results[i] = std::move(result);
        } catch (const Error& e) {
          row.constructed = false;
          row.error = e.what();
          row.error_code = e.code();
        }
      }
    });
  for (auto& th : pool) th.join();

  bool precision = false, all_certified = true;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const TableRow& row = table.rows[i];
    if (results[i]) {
      std::ostringstream name;
      name << "construct_k" << std::setw(2) << std::setfill('0') << row.k << ".json";
      io::write_atomic(dir / name.str(), io::construction_to_json(*results[i]));
    }
    if (row.error_code == ErrorCode::PrecisionExhausted) precision = true;
    if (!row.constructed || !row.certified) {
      all_certified = false;
      err << "k = " << row.k << ": " << (row.error.empty() ? "not certified" : row.error) << "\n";
    }
  }
  io::write_atomic(dir / "convergence.csv", io::table_to_csv(table));

  if (render.size > 0) {
    lattes::LattesInstance base = lattes::LattesInstance::build(spec0, kDefaultTol, options.build);
    io::write_atomic(dir / "f_gamma0.ppm", render_ppm(base.map, render, threads));
    for (auto it = results.rbegin(); it != results.rend(); ++it)
      if (*it) {
        io::write_atomic(dir / ("g_k" + std::to_string((*it)->k) + ".ppm"), render_ppm((*it)->g_k, render, threads));
        break;
      }
  }

  if (c.format == "csv") {
    out << io::table_to_csv(table);
  } else {
    json rows = json::array();
    for (const auto& r : table.rows) {
      json row = {{"k", r.k}, {"ok", r.ok}, {"constructed", r.constructed}};
      if (r.ok) {
        row["s_k"] = cjson(r.s_k);
        row["t_k"] = cjson(r.t_k);
        row["deviation"] = r.deviation;
      }
      if (r.constructed) {
        row["gamma_k"] = cjson(r.gamma_k);
        row["gamma_distance"] = r.gamma_distance;
        row["postcritical_count"] = r.postcritical_count;
        row["certified"] = r.certified;
      }
      if (r.error_code) row["error"] = std::string(to_string(*r.error_code));
      rows.push_back(row);
    }
    json doc = {{"schema_version", io::kSchemaVersion}, {"out", dir.string()}, {"rows", rows},
                {"deviation_monotone", table.monotone}, {"all_certified", all_certified}};
    out << doc.dump(2) << "\n";
  }
  if (precision) return kPrecision;
  return all_certified ? kOk : kFailed;
}

// certify ------------------------------------------------------------------

int cmd_certify(const RunConfig& c, const std::string& map_file, int max_iter, std::ostream& out) {
  RationalMapCoeffs g = io::map_from_json(io::read_file(map_file));
  CertifyOptions options;
  options.max_iter = max_iter;
  CertifyReport report = certify_strictly_pcf(g, critical_value_set(g), options);
  emit(out, c, "certificate.json", io::certify_to_json(report));
  return kOk;
}

// render -------------------------------------------------------------------

int cmd_render(const RunConfig& c, const std::string& map_file, const RenderConfig& render, const std::string& file,
               std::ostream& out) {
  RationalMapCoeffs f;
  if (!map_file.empty()) {
    f = io::map_from_json(io::read_file(map_file));
  } else {
    const Rational x0 = Rational::parse(c.x0), y0 = Rational::parse(c.y0);
    if (!(y0 > Rational(0))) fail(ErrorCode::InvalidArgument, "y0 must be positive");
    lattes::BuildOptions build;
    build.seed = c.seed;
    f = lattes::LattesInstance::build(spec_from(c, gamma0_from(x0, y0)), kDefaultTol, build).map;
  }
  fs::path path = c.out_dir.empty() ? fs::path(file) : fs::path(c.out_dir) / file;
  io::write_atomic(path, render_ppm(f, render, threads_cap()));
  out << "wrote " << path.string() << " (" << render.size << "x" << render.size << ")\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strictly postcritically finite perturbations of flexible Lattes maps"};
  app.require_subcommand(1);
  RunConfig config;

  auto* lemma1 = app.add_subcommand("verify-lemma1", "Quadratic coefficients of Theta at 1/2 and gamma/2 over a grid");
  std::string grid = "-0.4:0.4:5,0.8:1.6:5";
  bool inject_fault = false;
  add_common(lemma1, config);
  lemma1->add_option("--grid", grid, "re_lo:re_hi:n,im_lo:im_hi:n");
  lemma1->add_flag("--inject-fault", inject_fault, "Distort Theta to exercise the failure path");

  auto* lemma3 = app.add_subcommand("verify-lemma3", "Case constant c from tracked derivatives");
  double h = 1e-4;
  add_common(lemma3, config);
  add_map_params(lemma3, config);
  lemma3->add_option("--step", h, "Finite-difference step h")->check(CLI::Range(1e-7, 1e-3));

  auto* construct = app.add_subcommand("construct", "Build and certify g_k over a range of k");
  RenderConfig render;
  add_common(construct, config);
  add_map_params(construct, config);
  construct->add_option("--k-min", config.k_min, "Smallest k to build");
  construct->add_option("--k-max", config.k_max, "Largest k to build");
  construct->add_option("--render", render.size, "Also render f and the last g_k at this size")
      ->check(CLI::Range(0, 4096));

  auto* certify = app.add_subcommand("certify", "Certify a map given as coefficient JSON");
  std::string map_file;
  int max_iter = 400;
  add_common(certify, config);
  certify->add_option("map", map_file, "Map JSON file")->required();
  certify->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);

  auto* render_cmd = app.add_subcommand("render", "Julia set image (P6)");
  std::string render_map, render_file = "julia.ppm";
  RenderConfig image{256, 64, 2.0};
  add_common(render_cmd, config);
  add_map_params(render_cmd, config);
  render_cmd->add_option("--map", render_map, "Map JSON file instead of the Lattes map");
  render_cmd->add_option("--size", image.size)->check(CLI::Range(1, 8192));
  render_cmd->add_option("--max-iter", image.max_iter)->check(CLI::PositiveNumber);
  render_cmd->add_option("--half-width", image.half_width)->check(CLI::PositiveNumber);
  render_cmd->add_option("--file", render_file, "Output file name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (*lemma1 && lemma1->count("--tol") == 0) config.tol = 1e-8;
  try {
    if (*lemma1) return cmd_verify_lemma1(config, grid, inject_fault, out);
    if (*lemma3) return cmd_verify_lemma3(config, h, out);
    if (*construct) return cmd_construct(config, render, out, err);
    if (*certify) return cmd_certify(config, map_file, max_iter, out);
    if (*render_cmd) return cmd_render(config, render_map, image, render_file, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}

}  // namespace lattes_forge::cli
