#include "flexbc/config.hpp"
#include "flexbc/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace flexbc;

namespace {

// Owns the chain and exposes its iteration operator.
class PyChain {
 public:
  PyChain(int M, int N, double k1, double k2) : ch_(M, N, k1, k2) {
    const Vec zero = Vec::Zero(static_cast<Eigen::Index>(ch_.d.size()));
    T_ = assemble_T(ch_.sys.hessian_blocks(zero), ch_.sys.free_sites(), ch_.ws);
  }
  Mat Tpp(double alpha) const { return T_.Tpp(alpha); }
  double sigma(double alpha) const { return spectral_radius_only(T_.Tpp(alpha)); }
  py::dict alpha_opt() const {
    const auto a = alpha_opt_static(T_);
    py::dict d;
    d["alpha"] = a.alpha;
    d["sigma"] = a.sigma;
    d["sigma_unrelaxed"] = a.sigma_unrelaxed;
    return d;
  }
  int n_atomistic() const { return static_cast<int>(ch_.sys.free_sites().size()); }

 private:
  Chain1d ch_;
  IterationOperatorBlocks T_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "flexbc core bindings";
  m.attr("__version__") = "0.1.0";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("gf_1d", &gf_1d, py::arg("rho"), py::arg("kbar"));
  m.def("open_grid", &open_grid, py::arg("lo"), py::arg("hi"), py::arg("n"));
  m.def("dyn_relax_alpha", &dyn_relax_alpha, py::arg("w13"), py::arg("w2m3"));

  m.def(
      "stab1d_scan",
      [](int M, double k1, const std::vector<double>& ratios, int N) {
        py::list out;
        for (const auto& p : stab1d_scan(M, k1, ratios, N)) {
          py::dict d;
          d["k2_over_k1"] = p.ratio;
          d["sigma"] = p.sigma;
          d["sigma_opt"] = p.sigma_opt;
          d["alpha_opt"] = p.alpha_opt;
          d["stable"] = p.stable;
          out.append(d);
        }
        return out;
      },
      py::arg("M"), py::arg("k1"), py::arg("ratios"), py::arg("N") = 0);

  m.def(
      "verify_1d_theory",
      [](int M, double k1, double k2, int N) {
        const auto rep = verify_1d_theory(M, k1, k2, N);
        py::list items;
        for (const auto& it : rep.items) {
          py::dict d;
          d["name"] = it.name;
          d["value"] = it.value;
          d["limit"] = it.limit;
          d["passed"] = it.passed;
          d["gating"] = it.gating;
          items.append(d);
        }
        py::dict d;
        d["passed"] = rep.passed();
        d["items"] = items;
        return d;
      },
      py::arg("M"), py::arg("k1"), py::arg("k2"), py::arg("N") = 0);

  m.def(
      "error_bound_1d",
      [](int M, int N, double k1, double k2, int iterations) {
        const auto r = error_bound_1d(M, N, k1, k2, iterations);
        py::dict d;
        d["sigma"] = r.sigma;
        d["kappa"] = r.kappa;
        d["te_norm"] = r.te_norm;
        d["measured"] = r.measured;
        d["bound"] = r.bound;
        d["holds"] = r.holds;
        return d;
      },
      py::arg("M"), py::arg("N"), py::arg("k1"), py::arg("k2"), py::arg("iterations") = 30);

  m.def(
      "experiment_names",
      [](const std::string& text) {
        std::vector<std::string> names;
        for (const auto& s : parse_config(text)) names.push_back(s.name);
        return names;
      },
      py::arg("config_text"));

  m.def(
      "run_experiment_json",
      [](const std::string& text, const std::string& name) {
        const auto specs = parse_config(text);
        for (const auto& s : specs)
          if (name.empty() || s.name == name) {
            py::gil_scoped_release release;
            return result_json(run_experiment(s));
          }
        throw ConfigError("no experiment named '" + name + "'");
      },
      py::arg("config_text"), py::arg("name") = "");

  py::class_<PyChain>(m, "Chain1d")
      .def(py::init<int, int, double, double>(), py::arg("M"), py::arg("N"), py::arg("k1"), py::arg("k2"))
      .def("Tpp", &PyChain::Tpp, py::arg("alpha") = 1.0)
      .def("sigma", &PyChain::sigma, py::arg("alpha") = 1.0)
      .def("alpha_opt", &PyChain::alpha_opt)
      .def_property_readonly("n_atomistic", &PyChain::n_atomistic);
}
