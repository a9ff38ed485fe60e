#include "lossscape/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace lossscape;

namespace {

std::vector<Vector> rows_of(const RowMatrix& m) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).transpose());
  return out;
}

RowMatrix stack(const std::vector<Vector>& vs) {
  if (vs.empty()) return {};
  RowMatrix m(static_cast<Eigen::Index>(vs.size()), vs.front().size());
  for (std::size_t i = 0; i < vs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vs[i].transpose();
  return m;
}

Batch make_batch(RowMatrix inputs, std::vector<int> labels) {
  Batch b;
  b.inputs = std::move(inputs);
  b.labels = std::move(labels);
  return b;
}

py::dict report_dict(const PathReport& r) {
  py::dict d;
  d["height"] = r.height;
  d["losses"] = r.losses;
  d["total_loss"] = r.total_loss;
  d["length_penalty"] = r.length_penalty;
  d["coefficient_norms"] = r.coefficient_norms;
  d["lambda"] = r.lambda;
  d["iterations"] = r.iterations;
  d["best_iteration"] = r.best_iteration;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Loss-landscape tools: dense networks, L-BFGS-GSS, Fourier paths and kernel PCA";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def_static("fcp", &NetworkSpec::fcp)
      .def_static("autoencoder", &NetworkSpec::autoencoder)
      .def_static("from_canonical", &spec_from_canonical)
      .def_property_readonly("num_params", &NetworkSpec::num_params)
      .def_readonly("layer_sizes", &NetworkSpec::layer_sizes)
      .def("canonical", &NetworkSpec::canonical)
      .def("__eq__", [](const NetworkSpec& a, const NetworkSpec& b) { return a == b; })
      .def("__repr__", [](const NetworkSpec& s) { return "NetworkSpec('" + s.canonical() + "')"; });

  m.def("init_params", [](const NetworkSpec& spec, std::uint64_t seed) { return init_params(spec, seed).values(); },
        py::arg("spec"), py::arg("seed"));
  m.def(
      "loss",
      [](const NetworkSpec& spec, const Vector& params, RowMatrix inputs, std::vector<int> labels) {
        return loss(spec, ParamVector(params), make_batch(std::move(inputs), std::move(labels)));
      },
      py::arg("spec"), py::arg("params"), py::arg("inputs"), py::arg("labels") = std::vector<int>{});
  m.def(
      "loss_and_grad",
      [](const NetworkSpec& spec, const Vector& params, RowMatrix inputs, std::vector<int> labels) {
        LossAndGrad lg = loss_and_grad(spec, ParamVector(params), make_batch(std::move(inputs), std::move(labels)));
        return py::make_tuple(lg.loss, lg.grad.values());
      },
      py::arg("spec"), py::arg("params"), py::arg("inputs"), py::arg("labels") = std::vector<int>{});

  m.def(
      "load_mnist",
      [](const std::filesystem::path& dir, std::size_t train_cap) {
        auto [train, test] = load_mnist(MnistFiles::in_directory(dir), train_cap);
        return py::make_tuple(train.images(), train.labels(), test.images(), test.labels());
      },
      py::arg("directory"), py::arg("train_cap"));

  m.def("synthetic_value", [](double x, double y) { return GaussianMixture2D::value(x, y); });
  m.def("synthetic_gradient", [](double x, double y) { return GaussianMixture2D::gradient(x, y); });
  m.def("synthetic_minima", [] { return py::make_tuple(GaussianMixture2D::minimum_a(), GaussianMixture2D::minimum_b()); });

  m.def(
      "synthetic_path",
      [](double lambda, std::size_t iterations, std::optional<Vector> a, std::optional<Vector> b) {
        PathLossConfig pc = PathLossConfig::for_synthetic(lambda);
        pc.iterations = iterations;
        const GaussianMixture2D land;
        const Vector wa = a.value_or(GaussianMixture2D::minimum_a());
        const Vector wb = b.value_or(GaussianMixture2D::minimum_b());
        const PathResult r = optimize_path(wa, wb, land, pc);
        py::dict d = report_dict(r.report);
        d["straight"] = report_dict(path_loss(FourierPath(wa, wb, pc.n_fourier, pc.grid_points), land, 0.0));
        d["coefficients"] = r.path.coefficients;
        return d;
      },
      py::arg("lam"), py::arg("iterations") = PathLossConfig::for_synthetic(10.0).iterations,
      py::arg("endpoint_i") = py::none(), py::arg("endpoint_j") = py::none());

  m.def(
      "kpca",
      [](const RowMatrix& points, const std::string& kernel, double bandwidth, int degree, double offset,
         std::size_t components) {
        const KpcaModel model = kpca_fit(rows_of(points), kernel_from_string(kernel, bandwidth, degree, offset), components);
        return py::make_tuple(model.fit_scores(), model.eigenvalues());
      },
      py::arg("points"), py::arg("kernel") = "rbf", py::arg("bandwidth") = 1.0, py::arg("degree") = 2,
      py::arg("offset") = 1.0, py::arg("components") = 2);

  m.def(
      "shell_stats",
      [](const RowMatrix& a, const RowMatrix& b) {
        const ShellStats s = shell_stats(rows_of(a), rows_of(b));
        py::dict d;
        d["centroid_offset"] = s.centroid_offset;
        d["distances_a"] = s.distances_a;
        d["distances_b"] = s.distances_b;
        d["median_a"] = s.median_a;
        d["median_b"] = s.median_b;
        d["origin"] = s.origin;
        return d;
      },
      py::arg("set_a"), py::arg("set_b"));

  m.def(
      "component_stats",
      [](const RowMatrix& set) {
        const ComponentStats c = component_stats(rows_of(set));
        return py::make_tuple(c.mean, c.stddev);
      },
      py::arg("set"));

  m.def(
      "read_solutions",
      [](const std::filesystem::path& path) {
        SolutionFile f = read_solution_file(path);
        return py::make_tuple(spec_from_canonical(f.spec_text), stack(f.vectors));
      },
      py::arg("path"));
  m.def(
      "write_solutions",
      [](const std::filesystem::path& path, const NetworkSpec& spec, const RowMatrix& vectors) {
        write_solution_file(path, spec, rows_of(vectors));
      },
      py::arg("path"), py::arg("spec"), py::arg("vectors"));

  m.def(
      "normalize_config", [](const std::string& text) { return ExperimentConfig::parse(text).to_text(); },
      py::arg("text"), "Parses config text and returns its canonical form.");
  m.def(
      "run_synth",
      [](const std::string& config_text, const std::filesystem::path& out) {
        ExperimentConfig c = ExperimentConfig::parse(config_text);
        c.out_dir = out;
        py::gil_scoped_release release;
        const SynthResult r = cmd_synth(c);
        py::gil_scoped_acquire acquire;
        py::dict heights;
        heights["straight"] = r.straight.height;
        for (std::size_t k = 0; k < r.lambdas.size(); ++k) heights[py::float_(r.lambdas[k])] = r.paths[k].report.height;
        return heights;
      },
      py::arg("config_text"), py::arg("out"));
}
