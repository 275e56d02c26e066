// Python bindings. Matrices cross the boundary as numpy arrays (complex128 on
// the way out; real input is promoted). Hermitian/PSD/PD wrappers are built
// on entry, so their validation errors surface as Python exceptions.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "matineq/reduction.hpp"
#include "matineq/dsl.hpp"
#include "matineq/generators.hpp"
#include "matineq/inequalities.hpp"
#include "matineq/linalg.hpp"
#include "matineq/search.hpp"

namespace py = pybind11;
using namespace matineq;

namespace {

using Opt = std::optional<double>;

Psd as_psd(const Matrix& m) { return Psd(Hermitian(m)); }
Pd as_pd(const Matrix& m) { return Pd(Hermitian(m)); }

py::object parse_json(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

GenSpec spec(Index n, Index rank, double condition, const std::string& field, std::uint64_t seed,
             const std::string& shape) {
  GenSpec g;
  g.n = n;
  g.rank = rank;
  g.condition = condition;
  g.field = parse_field(field);
  g.seed = seed;
  g.shape = parse_shape(shape);
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical checks for eigenvalue and singular value inequalities of positive matrices";

  // Exceptions. Translators are tried newest first, so the base goes first.
  const py::object base = py::register_exception<Error>(m, "Error");
  py::register_exception<NumericalFailure>(m, "NumericalFailure", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base);
  py::register_exception<PreconditionViolation>(m, "PreconditionViolation", base);
  py::register_exception<DegenerateInstance>(m, "DegenerateInstance", base);

  // linalg
  m.def("eigenvalues", [](const Matrix& h) { return eigenvalues(Hermitian(h)); }, "Non-increasing eigenvalues of a Hermitian matrix.");
  m.def("hermitian_eig", [](const Matrix& h) {
    const SpectralDecomposition d = hermitian_eig(Hermitian(h));
    return py::make_tuple(d.eigenvalues, d.unitary);
  });
  m.def("singular_values", [](const Matrix& a) { return singular_value_list(a); });
  m.def("svd", [](const Matrix& a) {
    const Svd s = singular_values(a);
    return py::make_tuple(s.left, s.singulars, s.right);
  });
  m.def("matrix_power", [](const Matrix& p, double t) { return matrix_power(as_psd(p), t).matrix(); }, py::arg("p"), py::arg("t"));
  m.def("psd_sqrt", [](const Matrix& p) { return psd_sqrt(as_psd(p)).matrix(); });
  m.def("geometric_mean", [](const Matrix& a, const Matrix& b) { return geometric_mean(as_pd(a), as_pd(b)).matrix(); });
  m.def("polar_decompose", [](const Matrix& s) {
    const PolarDecomposition d = polar_decompose(s);
    return py::make_tuple(d.unitary, d.modulus.matrix());
  });
  m.def("loewner_margin", [](const Matrix& a, const Matrix& b) { return loewner_margin(Hermitian(a), Hermitian(b)); });
  m.def("spectral_norm", [](const Matrix& a) { return spectral_norm(a); });

  // inequalities
  py::class_<InequalityResult>(m, "InequalityResult")
      .def_readonly("id", &InequalityResult::id)
      .def_readonly("margins", &InequalityResult::margins)
      .def_readonly("min_margin", &InequalityResult::min_margin)
      .def_readonly("tolerance", &InequalityResult::tolerance)
      .def_readonly("passed", &InequalityResult::passed)
      .def_readonly("conjecture", &InequalityResult::conjecture)
      .def_readonly("diagnostics", &InequalityResult::diagnostics)
      .def("__repr__", [](const InequalityResult& r) {
        return "<InequalityResult " + r.id + " min_margin=" + std::to_string(r.min_margin) +
               (r.passed ? " passed>" : " FAILED>");
      });

  const auto pair_check = [&m](const char* name, InequalityResult (*f)(const Psd&, const Psd&, Opt)) {
    m.def(name, [f](const Matrix& a, const Matrix& b, Opt tol) { return f(as_psd(a), as_psd(b), tol); },
          py::arg("a"), py::arg("b"), py::arg("tol") = py::none());
  };
  pair_check("check_bk1", &check_bk1);
  pair_check("check_bk2", &check_bk2);
  pair_check("check_bkd", &check_bkd);
  const auto pd_check = [&m](const char* name, InequalityResult (*f)(const Pd&, const Pd&, Opt)) {
    m.def(name, [f](const Matrix& a, const Matrix& b, Opt tol) { return f(as_pd(a), as_pd(b), tol); },
          py::arg("a"), py::arg("b"), py::arg("tol") = py::none());
  };
  pd_check("check_amgm_loewner", &check_amgm_loewner);
  pd_check("check_amgm_variant", &check_amgm_variant);
  pd_check("check_weyl_gm", &check_weyl_gm);
  const auto weighted = [&m](const char* name, InequalityResult (*f)(const InequalityInstance&, Opt)) {
    m.def(name,
          [f](const Matrix& a, const Matrix& b, double t, Opt tol) { return f({as_psd(a), as_psd(b), t}, tol); },
          py::arg("a"), py::arg("b"), py::arg("t") = 0.5, py::arg("tol") = py::none());
  };
  weighted("check_ando", &check_ando);
  weighted("check_prop4", &check_prop4);
  weighted("check_conjecture", &check_conjecture);
  m.def("default_t_grid", &default_t_grid);

  // reduction pipeline
  m.def("lemma1_margin", [](const Matrix& x, const Matrix& s, Opt tol) { return lemma1_margin(as_pd(x), s, tol); },
        py::arg("x"), py::arg("s"), py::arg("tol") = py::none());
  m.def("check_prop2", [](const Matrix& mm, const Matrix& nn, Opt tol) { return check_prop2({as_pd(mm), as_pd(nn)}, tol); },
        py::arg("m"), py::arg("n"), py::arg("tol") = py::none());
  m.def("check_prop3",
        [](const Matrix& l, const Matrix& z, Opt tol) { return check_prop3(make_prop3_instance(as_pd(l), z), tol); },
        py::arg("l"), py::arg("z"), py::arg("tol") = py::none());
  m.def("check_prop1", [](Index n, Index r, std::uint64_t seed) { return verify_prop1(make_prop1_instance(n, r, seed)); },
        py::arg("n"), py::arg("r"), py::arg("seed") = 0);

  py::class_<ReductionTrace>(m, "ReductionTrace")
      .def_readonly("r", &ReductionTrace::r)
      .def_readonly("scale", &ReductionTrace::scale)
      .def_readonly("epsilon", &ReductionTrace::epsilon)
      .def_property_readonly("b1", [](const ReductionTrace& t) { return t.b1.matrix(); })
      .def_property_readonly("a1", [](const ReductionTrace& t) { return t.a1.matrix(); })
      .def_readonly("basis", &ReductionTrace::basis)
      .def_readonly("stage_eigen", &ReductionTrace::stage_eigen)
      .def_readonly("tol", &ReductionTrace::tol)
      .def_readonly("tol_proj", &ReductionTrace::tol_proj)
      .def_readonly("prop1", &ReductionTrace::prop1)
      .def_readonly("bkd_margin", &ReductionTrace::bkd_margin)
      .def_property_readonly("stages",
                             [](const ReductionTrace& t) {
                               py::dict d;
                               for (const StageRecord& s : t.stages) d[py::str(s.name)] = s.values;
                               return d;
                             })
      .def("ok", &ReductionTrace::ok);
  m.def("run_reduction", [](const Matrix& a, const Matrix& b, Index r, double eps) {
    return run_reduction(as_psd(a), as_psd(b), r, eps);
  }, py::arg("a"), py::arg("b"), py::arg("r"), py::arg("eps") = 1e-8);
  m.def("perturbation_sweep", [](const Matrix& a, const Matrix& b, const std::vector<double>& eps) {
    py::list out;
    for (const PerturbationSample& s : perturbation_sweep(as_psd(a), as_psd(b), eps)) {
      py::dict d;
      d["eps"] = s.eps;
      d["shift"] = s.shift;
      d["margins"] = s.margins;
      d["max_deviation"] = s.max_deviation;
      out.append(d);
    }
    return out;
  }, py::arg("a"), py::arg("b"), py::arg("eps_list") = std::vector<double>{1e-4, 1e-6, 1e-8});

  // generators
  m.def("random_psd",
        [](Index n, Index rank, double condition, const std::string& field, std::uint64_t seed, const std::string& shape) {
          return random_psd_rank(spec(n, rank, condition, field, seed, shape)).matrix();
        },
        py::arg("n"), py::arg("rank") = -1, py::arg("condition") = 10.0, py::arg("field") = "complex",
        py::arg("seed") = 0, py::arg("shape") = "loguniform");
  m.def("haar_unitary", [](Index n, std::uint64_t seed, const std::string& field) {
    return haar_unitary(n, seed, parse_field(field));
  }, py::arg("n"), py::arg("seed") = 0, py::arg("field") = "complex");
  m.def("random_nonsingular", [](Index n, std::uint64_t seed, const std::string& field) {
    return random_nonsingular(n, seed, parse_field(field));
  }, py::arg("n"), py::arg("seed") = 0, py::arg("field") = "complex");
  m.def("derive_seed", &derive_seed);

  // dsl
  m.def("dsl_check",
        [](const std::string& source, const dsl::Bindings& bindings, double t, Opt tol) {
          return dsl::evaluate(dsl::compile(source), bindings, t, tol);
        },
        py::arg("source"), py::arg("bindings"), py::arg("t") = 0.5, py::arg("tol") = py::none());
  m.def("dsl_format", [](const std::string& source) { return dsl::print(dsl::compile(source)); });
  m.def("catalogue", [] {
    py::dict d;
    for (const auto& e : dsl::builtin_catalogue()) d[py::str(e.key)] = e.source;
    return d;
  });

  // search
  m.def("search",
        [](std::vector<Index> dims, std::vector<double> t_grid, std::size_t trials_per_cell, std::size_t refine_steps,
           std::size_t refine_count, std::uint64_t seed, unsigned threads, const std::string& out_path) {
          SearchConfig cfg;
          cfg.dims = std::move(dims);
          cfg.t_grid = std::move(t_grid);
          cfg.trials_per_cell = trials_per_cell;
          cfg.refine_steps = refine_steps;
          cfg.refine_count = refine_count;
          cfg.seed = seed;
          cfg.threads = threads;
          cfg.out_path = out_path;
          SearchReport r;
          {
            py::gil_scoped_release release;
            r = random_sweep(cfg);
          }
          return parse_json(summary_to_json(r));
        },
        py::arg("dims") = std::vector<Index>{2, 3, 4}, py::arg("t_grid") = std::vector<double>{},
        py::arg("trials_per_cell") = 20, py::arg("refine_steps") = 0, py::arg("refine_count") = 0,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("out_path") = "");
}
