#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gbdt/errors.hpp"
#include "gbdt/explicit_model.hpp"
#include "gbdt/general_engine.hpp"
#include "gbdt/hamiltonian.hpp"
#include "gbdt/scenario.hpp"
#include "gbdt/serialize.hpp"
#include "gbdt/triple.hpp"
#include "gbdt/verify.hpp"

namespace py = pybind11;
using namespace gbdt;

namespace {

SpectrumConstraint parse_spectrum_name(const std::string& s) {
  if (s == "any") return SpectrumConstraint::kAny;
  if (s == "off_real_axis") return SpectrumConstraint::kOffRealAxis;
  if (s == "upper_half_plane") return SpectrumConstraint::kUpperHalfPlane;
  throw InputError("unknown spectrum constraint '" + s + "'");
}

/// Copies a list of equally shaped matrices into an array of shape
/// (outer..., rows, cols).
py::array_t<Complex> stack(const std::vector<CMatrix>& ms,
                           std::vector<py::ssize_t> outer) {
  const py::ssize_t rows = ms.empty() ? 0 : ms.front().rows();
  const py::ssize_t cols = ms.empty() ? 0 : ms.front().cols();
  outer.push_back(rows);
  outer.push_back(cols);
  py::array_t<Complex> out(outer);
  Complex* p = out.mutable_data();
  for (const CMatrix& M : ms) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) *p++ = M(r, c);
    }
  }
  return out;
}

py::dict field_to_dict(const SolutionField& f) {
  py::dict d;
  d["xs"] = f.xs;
  d["ts"] = f.ts;
  d["Y"] = stack(f.Y, {static_cast<py::ssize_t>(f.xs.size()),
                       static_cast<py::ssize_t>(f.ts.size())});
  d["Hcal"] = stack(f.Hcal, {static_cast<py::ssize_t>(f.xs.size())});
  d["max_condition"] = f.max_condition;
  d["warnings"] = f.warnings;
  return d;
}

py::list report_to_list(const Report& r) {
  py::list out;
  for (const Check& c : r.checks) {
    py::dict d;
    d["name"] = c.name;
    d["residual"] = c.residual;
    d["bound"] = c.bound ? py::cast(*c.bound) : py::none();
    d["pass"] = c.pass;
    d["context"] = c.context;
    out.append(d);
  }
  return out;
}

/// Owns a Hamiltonian, its integrated trajectory and the source that reads
/// from both, so the references inside the source stay valid.
class GeneralModel {
 public:
  GeneralModel(const GBDTTriple& t, HamiltonianField H, double a, double step)
      : H_(std::move(H)), tr_(integrate(t, H_, a, step)) {
    if (!tr_.complete) {
      throw Error("integration stopped early: " + tr_.diagnostic);
    }
    src_ = std::make_unique<TrajectorySource>(tr_, H_);
  }
  GeneralModel(const GeneralModel&) = delete;
  GeneralModel& operator=(const GeneralModel&) = delete;

  const TrajectorySource& source() const { return *src_; }
  const Trajectory& trajectory() const { return tr_; }

 private:
  HamiltonianField H_;
  Trajectory tr_;
  std::unique_ptr<TrajectorySource> src_;
};

template <class Model, class SourceOf>
void bind_source_methods(py::class_<Model>& cls, SourceOf source_of) {
  cls.def("pi", [source_of](const Model& m, double x) {
       return source_of(m).pi(x);
     }, py::arg("x"))
      .def("s", [source_of](const Model& m, double x) {
        return source_of(m).s(x);
      }, py::arg("x"))
      .def("u", [source_of](const Model& m, double x) {
        return source_of(m).u(x);
      }, py::arg("x"))
      .def("y", [source_of](const Model& m, double x, double t) {
        return source_of(m).y(x, t);
      }, py::arg("x"), py::arg("t"))
      .def("hcal", [source_of](const Model& m, double x) {
        return source_of(m).hcal(x);
      }, py::arg("x"))
      .def("field", [source_of](const Model& m, const std::vector<double>& xs,
                                const std::vector<double>& ts) {
        return field_to_dict(sample_field(source_of(m), xs, ts));
      }, py::arg("xs"), py::arg("ts"))
      .def("pde_residual", [source_of](const Model& m,
                                       const std::vector<double>& xs,
                                       const std::vector<double>& ts) {
        const SolutionSource& src = source_of(m);
        return pde_residual(sample_field(src, xs, ts), src.triple().sig);
      }, py::arg("xs"), py::arg("ts"))
      .def("energy", [source_of](const Model& m, const CVector& h, double a,
                                 double t) {
        const EnergySample e = energy(source_of(m), h, a, t);
        return py::make_tuple(e.E, e.E_direct);
      }, py::arg("h"), py::arg("a"), py::arg("t"))
      .def("supply_rate", [source_of](const Model& m, const CVector& h,
                                      double x, double t) {
        const SupplyRate r = supply_rate(source_of(m), h, x, t);
        return py::make_tuple(r.via_y, r.via_s);
      }, py::arg("h"), py::arg("x"), py::arg("t"))
      .def("boundary", [source_of](const Model& m, double a,
                                   const CMatrix& basis) {
        const BoundaryDesign b = boundary_design(source_of(m), a, basis);
        return py::make_tuple(b.W, b.residual);
      }, py::arg("a"), py::arg("basis"));
}

}  // namespace

PYBIND11_MODULE(_gbdt, m) {
  m.doc() = "Dynamical canonical systems built by GBDT";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<NotPositiveDefiniteError>(m, "NotPositiveDefiniteError",
                                                   base.ptr());
  py::register_exception<SpectralSeparationError>(m, "SpectralSeparationError",
                                                  base.ptr());

  py::class_<SignatureJ>(m, "Signature")
      .def(py::init([](int m1, int m2) {
        SignatureJ s{m1, m2};
        s.validate();
        return s;
      }), py::arg("m1"), py::arg("m2"))
      .def_readonly("m1", &SignatureJ::m1)
      .def_readonly("m2", &SignatureJ::m2)
      .def_property_readonly("m", &SignatureJ::m)
      .def("matrix", &SignatureJ::matrix);

  py::class_<GBDTTriple>(m, "Triple")
      .def(py::init([](const CMatrix& A, const CMatrix& S0, const CMatrix& Pi0,
                       const SignatureJ& sig) {
        GBDTTriple t{A, S0, Pi0, sig};
        t.validate_shapes();
        return t;
      }), py::arg("A"), py::arg("S0"), py::arg("Pi0"), py::arg("sig"))
      .def_readonly("A", &GBDTTriple::A)
      .def_readonly("S0", &GBDTTriple::S0)
      .def_readonly("Pi0", &GBDTTriple::Pi0)
      .def_readonly("sig", &GBDTTriple::sig)
      .def_property_readonly("n", &GBDTTriple::n)
      .def("to_json", [](const GBDTTriple& t) {
        return dump_json(triple_to_json(t));
      })
      .def_static("from_json", [](const std::string& text) {
        Json j;
        try {
          j = Json::parse(text);
        } catch (const Json::parse_error& e) {
          throw InputError(std::string("invalid JSON: ") + e.what());
        }
        return triple_from_json(j);
      }, py::arg("text"))
      .def_static("load", &load_triple, py::arg("path"));

  m.def("verify_identity", [](const GBDTTriple& t) {
    const IdentityCheck c = verify_identity(t);
    return py::make_tuple(c.residual, c.bound, c.ok);
  }, py::arg("triple"));
  m.def("complete_s0", &complete_S0, py::arg("A"), py::arg("Pi0"),
        py::arg("sig"));
  m.def("random_triple", [](int n, int m1, int m2, std::uint64_t seed,
                            const std::string& spectrum) {
    GeneratorOptions opts;
    opts.spectrum = parse_spectrum_name(spectrum);
    return random_admissible(n, SignatureJ{m1, m2}, seed, opts);
  }, py::arg("n"), py::arg("m1"), py::arg("m2"), py::arg("seed"),
     py::arg("spectrum") = "off_real_axis");

  py::class_<ExplicitModel> em(m, "ExplicitModel");
  em.def(py::init(&ExplicitModel::build), py::arg("triple"))
      .def_property_readonly("triple", &ExplicitModel::triple)
      .def("wa", &ExplicitModel::wa_at, py::arg("x"), py::arg("lam"))
      .def("kappa_limits", [](const ExplicitModel& mod, double x_max,
                              double tol) {
        const KappaLimits k = mod.kappa_limits(x_max, tol);
        py::dict d;
        d["kQ"] = k.kQ;
        d["kR"] = k.kR;
        d["kS"] = k.kS;
        d["converged"] = k.q_converged && k.r_converged && k.s_converged;
        return d;
      }, py::arg("x_max") = 60.0, py::arg("tol") = 1e-10)
      .def("wa_limit", &ExplicitModel::wa_limit, py::arg("kQ"), py::arg("kR"));
  bind_source_methods(em, [](const ExplicitModel& mod) {
    return ExplicitSource(mod);
  });

  py::class_<GeneralModel> gm(m, "GeneralModel");
  gm.def(py::init([](const GBDTTriple& t, const std::string& hamiltonian,
                     double x_max, double step) {
       return std::make_unique<GeneralModel>(
           t, HamiltonianField::parse(hamiltonian, t.sig.m()), x_max, step);
     }), py::arg("triple"), py::arg("hamiltonian") = "identity",
     py::arg("x_max") = 1.0, py::arg("step") = 1e-3)
      .def_property_readonly("nodes", [](const GeneralModel& g) {
        return g.trajectory().xs;
      });
  bind_source_methods(gm, [](const GeneralModel& g) -> const SolutionSource& {
    return g.source();
  });

  m.def("check", [](const std::string& path,
                    std::optional<std::uint64_t> seed) {
    return report_to_list(run_suite(load_scenario(path, seed)));
  }, py::arg("scenario"), py::arg("seed") = py::none());
  m.def("solve", [](const std::string& path,
                    std::optional<std::uint64_t> seed) {
    const SolveResult r = solve(load_scenario(path, seed));
    py::dict d = field_to_dict(r.field);
    d["metadata"] = dump_json(r.metadata);
    return d;
  }, py::arg("scenario"), py::arg("seed") = py::none());
}
