#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lattes_forge/dynamics.hpp"
#include "lattes_forge/elliptic.hpp"
#include "lattes_forge/lattes.hpp"
#include "lattes_forge/perturbation.hpp"
#include "lattes_forge/serialize.hpp"

namespace py = pybind11;
using namespace lattes_forge;

namespace {

lattes::LattesSpec make_spec(Complex gamma, int a, int tag) {
  return lattes::LattesSpec(elliptic::TorusParameter(gamma), a, lattes::case_from_int(tag));
}

py::object point(const SpherePoint& p) {
  if (p.is_infinity()) return py::none();
  return py::cast(p.finite());
}

py::dict certificate_dict(const dynamics::OrbitCertificate& c) {
  py::list cycle;
  for (const auto& p : c.cycle.points) cycle.append(point(p));
  py::dict d;
  d["preperiod"] = c.preperiod;
  d["period"] = c.period;
  d["landing_residual"] = c.landing_residual;
  d["repelling"] = c.repelling;
  d["multiplier"] = c.cycle.multiplier;
  d["cycle"] = cycle;
  return d;
}

py::dict report_dict(const perturbation::CertifyReport& r) {
  py::list certs;
  for (const auto& c : r.certificates) certs.append(certificate_dict(c));
  py::dict d;
  d["certificates"] = certs;
  d["postcritical_count"] = r.postcritical_count;
  d["lattes_witness"] = r.lattes_witness;
  d["non_lattes_witness"] = r.non_lattes_witness;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Flexible Lattes maps and their strictly postcritically finite perturbations";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&] { return py::object(py::exception<Error>(m, "LattesForgeError")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<RationalMapCoeffs>(m, "RationalMap")
      .def(py::init<std::vector<Complex>, std::vector<Complex>>(), py::arg("num"), py::arg("den"))
      .def_property_readonly("degree", &RationalMapCoeffs::degree)
      .def_property_readonly("num", &RationalMapCoeffs::num)
      .def_property_readonly("den", &RationalMapCoeffs::den)
      .def("scaled", &RationalMapCoeffs::scaled)
      .def("coprimality_margin", &RationalMapCoeffs::coprimality_margin)
      .def("__call__", [](const RationalMapCoeffs& f, Complex z) { return point(dynamics::eval(f, z)); })
      .def("to_json", [](const RationalMapCoeffs& f) { return io::map_to_json(f); })
      .def_static("from_json", [](const std::string& text) { return io::map_from_json(text); });

  m.def("weierstrass_p",
        [](double s, double t, Complex gamma) {
          return elliptic::weierstrass_p({s, t}, elliptic::TorusParameter(gamma));
        },
        py::arg("s"), py::arg("t"), py::arg("gamma"));

  m.def("theta", [](double s, double t, Complex gamma) {
    return point(elliptic::theta_map({s, t}, elliptic::TorusParameter(gamma)));
  }, py::arg("s"), py::arg("t"), py::arg("gamma"));

  m.def("theta_data", [](Complex gamma) {
    auto d = elliptic::theta_data(elliptic::TorusParameter(gamma));
    py::dict out;
    out["v"] = d.v;
    out["w"] = d.w;
    out["lambda"] = d.lambda;
    out["mu"] = d.mu;
    out["kappa"] = d.kappa;
    out["lemma1_residual"] = d.lemma1_residual;
    out["kappa_residual"] = d.kappa_residual;
    return out;
  }, py::arg("gamma"));

  m.def("build_map", [](Complex gamma, int a, int tag, std::uint64_t seed) {
    lattes::BuildOptions options;
    options.seed = seed;
    return lattes::build_rational_map(make_spec(gamma, a, tag), options);
  }, py::arg("gamma"), py::arg("a"), py::arg("case"), py::arg("seed") = 1);

  m.def("verify_semiconjugacy", [](const RationalMapCoeffs& f, Complex gamma, int a, int tag, int n) {
    return lattes::verify_semiconjugacy(f, make_spec(gamma, a, tag), n);
  }, py::arg("map"), py::arg("gamma"), py::arg("a"), py::arg("case"), py::arg("n") = 200);

  m.def("critical_points", [](const RationalMapCoeffs& f) {
    py::list out;
    for (const auto& c : dynamics::critical_points(f)) out.append(py::make_tuple(point(c.point), c.multiplicity));
    return out;
  });

  m.def("verify_lemma3", [](Complex gamma, int a, int tag, double h) {
    auto r = perturbation::verify_lemma3(make_spec(gamma, a, tag), h);
    py::dict out;
    out["c_measured"] = r.c_measured;
    out["c_expected"] = r.c_expected;
    out["residual"] = r.residual;
    return out;
  }, py::arg("gamma"), py::arg("a"), py::arg("case"), py::arg("h") = 1e-4);

  m.def("certify", [](const RationalMapCoeffs& g, int max_iter) {
    perturbation::CertifyOptions options;
    options.max_iter = max_iter;
    return report_dict(perturbation::certify_strictly_pcf(g, perturbation::critical_value_set(g), options));
  }, py::arg("map"), py::arg("max_iter") = 400);

  m.def("construct", [](const std::string& x0, const std::string& y0, int a, int tag, int k) {
    Rational rx = Rational::parse(x0), ry = Rational::parse(y0);
    auto pair = perturbation::standard_parameters(rx, ry, a);
    auto spec = make_spec({rx.to_double(), ry.to_double()}, a, tag);
    perturbation::ConstructionResult r;
    {
      py::gil_scoped_release release;
      r = perturbation::solve_gamma_k(spec, pair, k);
    }
    py::dict out;
    out["k"] = r.k;
    out["gamma_k"] = r.gamma_k;
    out["r_k"] = r.r_k;
    out["s_k"] = r.s.value;
    out["t_k"] = r.t.value;
    out["g_k"] = r.g_k;
    out["certificate"] = report_dict(r.certificate);
    out["distance_to_base"] = r.distance_to_base;
    return out;
  }, py::arg("x0"), py::arg("y0"), py::arg("a"), py::arg("case"), py::arg("k"));
}
