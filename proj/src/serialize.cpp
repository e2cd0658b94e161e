#include "lattes_forge/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lattes_forge::io {

using nlohmann::json;

namespace {

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json point_json(const SpherePoint& p) {
  if (p.is_infinity()) return nullptr;
  return complex_json(p.finite());
}

json coefficients_json(const std::vector<Complex>& c) {
  json out = json::array();
  for (const auto& z : c) out.push_back(complex_json(z));
  return out;
}

json map_json(const RationalMapCoeffs& f) {
  return {{"degree", f.degree()}, {"num", coefficients_json(f.num())}, {"den", coefficients_json(f.den())}};
}

json cycle_json(const dynamics::CycleData& c) {
  json points = json::array();
  for (const auto& p : c.points) points.push_back(point_json(p));
  return {{"period", c.period},
          {"points", points},
          {"multiplier", complex_json(c.multiplier)},
          {"multiplier_abs", std::abs(c.multiplier)},
          {"residual", c.residual},
          {"repelling", c.repelling()}};
}

json certificate_json(const dynamics::OrbitCertificate& c) {
  return {{"preperiod", c.preperiod},
          {"period", c.period},
          {"landing_residual", c.landing_residual},
          {"repelling", c.repelling},
          {"cycle", cycle_json(c.cycle)}};
}

json report_json(const perturbation::CertifyReport& r) {
  json values = json::array(), certs = json::array();
  for (const auto& v : r.critical_values) values.push_back(point_json(v));
  for (const auto& c : r.certificates) certs.push_back(certificate_json(c));
  return {{"critical_values", values},
          {"certificates", certs},
          {"postcritical_count", r.postcritical_count},
          {"lattes_witness", r.lattes_witness},
          {"non_lattes_witness", r.non_lattes_witness}};
}

json collision_json(const perturbation::CollisionResult& c) {
  return {{"k", c.k},
          {"family", std::string(perturbation::to_string(c.family))},
          {"value", complex_json(c.value)},
          {"rescaled", complex_json(c.rescaled)},
          {"residual", c.residual},
          {"newton_iters", c.newton_iters}};
}

std::vector<Complex> parse_coefficients(const json& array, const char* name) {
  if (!array.is_array()) fail(ErrorCode::ParseError, std::string("\"") + name + "\" must be an array");
  std::vector<Complex> out;
  for (const auto& entry : array) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
      fail(ErrorCode::ParseError, std::string("entries of \"") + name + "\" must be [re, im] pairs");
    out.emplace_back(entry[0].get<double>(), entry[1].get<double>());
  }
  return out;
}

std::string format(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string map_to_json(const RationalMapCoeffs& f) { return map_json(f).dump(2) + "\n"; }

RationalMapCoeffs map_from_json(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::ParseError, "map file is not a JSON object");
  if (!doc.contains("degree") || !doc["degree"].is_number_integer())
    fail(ErrorCode::ParseError, "map file needs an integer \"degree\"");
  if (!doc.contains("num") || !doc.contains("den")) fail(ErrorCode::ParseError, "map file needs \"num\" and \"den\"");
  const int degree = doc["degree"].get<int>();
  auto num = parse_coefficients(doc["num"], "num");
  auto den = parse_coefficients(doc["den"], "den");
  if (degree < 1 || static_cast<int>(num.size()) != degree + 1 || static_cast<int>(den.size()) != degree + 1)
    fail(ErrorCode::ParseError, "\"num\" and \"den\" must each hold degree + 1 coefficients");
  RationalMapCoeffs f(std::move(num), std::move(den));
  f.validate();
  return f;
}

std::string certify_to_json(const perturbation::CertifyReport& report) {
  json doc = report_json(report);
  doc["schema_version"] = kSchemaVersion;
  return doc.dump(2) + "\n";
}

std::string construction_to_json(const perturbation::ConstructionResult& r) {
  json doc = {{"schema_version", kSchemaVersion},
              {"k", r.k},
              {"gamma0", complex_json(r.gamma0)},
              {"gamma_k", complex_json(r.gamma_k)},
              {"r_k", complex_json(r.r_k)},
              {"s", collision_json(r.s)},
              {"t", collision_json(r.t)},
              {"g_k", map_json(r.g_k)},
              {"f_base", map_json(r.f_base)},
              {"certificate", report_json(r.certificate)},
              {"postcritical_count", r.certificate.postcritical_count},
              {"distance_to_base", r.distance_to_base},
              {"ratio_residual", r.ratio_residual},
              {"collision_gap", r.collision_gap},
              {"map_distance", r.map_distance},
              {"iterations", r.iterations},
              {"degenerate_marking", r.degenerate_marking}};
  return doc.dump(2) + "\n";
}

std::string theta_data_to_json(const elliptic::ThetaData& d) {
  json doc = {{"gamma", complex_json(d.gamma)},         {"v", complex_json(d.v)},
              {"w", complex_json(d.w)},                 {"lambda", complex_json(d.lambda)},
              {"mu", complex_json(d.mu)},               {"kappa", complex_json(d.kappa)},
              {"lemma1_residual", d.lemma1_residual},   {"kappa_residual", d.kappa_residual}};
  return doc.dump(2) + "\n";
}

std::string table_to_csv(const perturbation::ConvergenceTable& table) {
  std::ostringstream out;
  out << "# lattes_forge convergence v" << kCsvVersion << "\n";
  out << "k,ok,error,s_re,s_im,t_re,t_im,ux_re,ux_im,uy_re,uy_im,ratio_re,ratio_im,target_re,target_im,"
         "deviation,rescaled_deviation,converging,constructed,gamma_re,gamma_im,r_re,r_im,gamma_distance,"
         "certified,postcritical_count\n";
  auto c = [](Complex z) { return format(z.real()) + "," + format(z.imag()); };
  for (const auto& r : table.rows) {
    std::string error = r.error_code ? std::string(to_string(*r.error_code)) : "";
    out << r.k << "," << r.ok << "," << error << "," << c(r.s_k) << "," << c(r.t_k) << "," << c(r.u_x) << ","
        << c(r.u_y) << "," << c(r.ratio) << "," << c(r.target) << "," << format(r.deviation) << ","
        << format(r.rescaled_deviation) << "," << r.converging << "," << r.constructed << "," << c(r.gamma_k)
        << "," << c(r.r_k) << "," << format(r.gamma_distance) << "," << r.certified << ","
        << r.postcritical_count << "\n";
  }
  return out.str();
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) fail(ErrorCode::InvalidArgument, "write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::ParseError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace lattes_forge::io
