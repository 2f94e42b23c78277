#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polyflow/jsonio.hpp"
#include "polyflow/pipeline.hpp"
#include "polyflow/schedule.hpp"
#include "polyflow/simplify.hpp"

namespace py = pybind11;
using namespace polyflow;

namespace {

opt::LinearProgram make_lp(const Vec& c, const Mat& a_ub, const Vec& b_ub, const Vec& lo,
                           const Vec& up) {
  opt::LinearProgram lp;
  for (int j = 0; j < c.size(); ++j) lp.add_col("x" + std::to_string(j), lo(j), up(j), c(j));
  for (int i = 0; i < a_ub.rows(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < a_ub.cols(); ++j)
      if (a_ub(i, j) != 0.0) row.push_back({j, a_ub(i, j)});
    lp.add_row(std::move(row), opt::RowSense::LE, b_ub(i));
  }
  return lp;
}

pwl::Polytope make_polytope(const Mat& a, const Vec& beta, int domain_rows_from) {
  pwl::Polytope poly;
  poly.a = a;
  poly.beta = beta;
  for (int r = 0; r < a.rows(); ++r) {
    pwl::RowOrigin o;
    o.kind = (domain_rows_from >= 0 && r >= domain_rows_from) ? pwl::RowKind::Domain
                                                              : pwl::RowKind::Neuron;
    o.neuron = r;
    poly.origins.push_back(o);
  }
  return poly;
}

}  // namespace

PYBIND11_MODULE(_polyflow, m) {
  m.doc() = "Radial-network constraint learning: power flow, rectifier network "
            "geometry, union-of-polytopes scheduling";

  py::class_<grid::RadialNetwork>(m, "RadialNetwork")
      .def_readonly("n_bus", &grid::RadialNetwork::n_bus)
      .def_readonly("root", &grid::RadialNetwork::root)
      .def_readonly("base_mva", &grid::RadialNetwork::base_mva)
      .def_readonly("v_min_pu", &grid::RadialNetwork::v_min_pu)
      .def_readonly("v_max_pu", &grid::RadialNetwork::v_max_pu);

  py::class_<grid::PowerFlowSolution>(m, "PowerFlowSolution")
      .def_readonly("v", &grid::PowerFlowSolution::v)
      .def_readonly("p_flow", &grid::PowerFlowSolution::p_flow)
      .def_readonly("q_flow", &grid::PowerFlowSolution::q_flow)
      .def_readonly("i_sq", &grid::PowerFlowSolution::i_sq)
      .def_readonly("converged", &grid::PowerFlowSolution::converged)
      .def_readonly("residual", &grid::PowerFlowSolution::residual);

  m.def("load_network", &io::load_network, py::arg("path"));
  m.def("validate_network", &grid::validate_network);
  m.def(
      "solve_power_flow",
      [](const grid::RadialNetwork& net, const Vec& p, const Vec& q) {
        return grid::solve_power_flow(net, {p, q});
      },
      py::arg("net"), py::arg("p"), py::arg("q"));
  m.def("violation_measure", &grid::violation_measure);
  m.def("total_loss", &grid::total_loss);
  m.def("root_import", &grid::root_import);

  py::class_<nn::MlpParams>(m, "Mlp")
      .def(py::init([](const std::vector<Mat>& w, const std::vector<Vec>& b, const Vec& w_out,
                       double b_out) {
             nn::MlpParams p;
             p.w = w;
             p.b = b;
             p.w_out = w_out;
             p.b_out = b_out;
             p.scaler = nn::InputScaler::identity(p.input_dim());
             p.check_shapes();
             return p;
           }),
           py::arg("w"), py::arg("b"), py::arg("w_out"), py::arg("b_out"))
      .def("forward", [](const nn::MlpParams& p, const Vec& x) { return nn::forward(p, x); })
      .def("total_neurons", &nn::MlpParams::total_neurons)
      .def("input_dim", &nn::MlpParams::input_dim);

  m.def("load_mlp", &io::load_mlp, py::arg("path"));
  m.def("save_mlp", &io::save_mlp, py::arg("mlp"), py::arg("path"));
  m.def(
      "train_mlp",
      [](const std::vector<Vec>& xs, const std::vector<double>& ys,
         const std::vector<int>& hidden, int epochs, int batch, double learning_rate,
         uint64_t seed) {
        nn::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch = batch;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        auto res = nn::train(xs, ys, hidden, cfg);
        return py::make_tuple(res.params, res.best_val_mse);
      },
      py::arg("xs"), py::arg("ys"), py::arg("hidden"), py::arg("epochs") = 200,
      py::arg("batch") = 128, py::arg("learning_rate") = 3e-3, py::arg("seed") = 1);
  m.def("gradient_check", [](const nn::MlpParams& p, const Vec& x, double eps) {
    bool kink = false;
    const double err = nn::gradient_check(p, x, eps, &kink);
    return py::make_tuple(err, kink);
  });

  m.def("activation_pattern",
        [](const nn::MlpParams& p, const Vec& x) { return pwl::activation_pattern(p, x).key(); });
  m.def(
      "region_system",
      [](const nn::MlpParams& p, const Vec& x, const Vec& box_lo, const Vec& box_hi) {
        data::DomainBox box{box_lo, box_hi};
        const auto pat = pwl::activation_pattern(p, x);
        const auto poly = pwl::feasible_polytope(p, pat, pwl::scale_box(box, p.scaler));
        const auto aff = pwl::region_affine(p, pat);
        return py::make_tuple(poly.a, poly.beta, aff.w_out, aff.b_out);
      },
      "Rows, bound, and affine output map of the activation region at x",
      py::arg("mlp"), py::arg("x"), py::arg("box_lo"), py::arg("box_hi"));

  m.def(
      "remove_redundant_rows",
      [](const Mat& a, const Vec& beta, int domain_rows_from, double tol) {
        simplify::SimplifyStats stats;
        const auto slim =
            simplify::remove_redundant_rows(make_polytope(a, beta, domain_rows_from), tol, &stats);
        return py::make_tuple(slim.a, slim.beta, stats.removed);
      },
      py::arg("a"), py::arg("beta"), py::arg("domain_rows_from") = -1, py::arg("tol") = 1e-7);
  m.def("region_feasible", [](const Mat& a, const Vec& beta) {
    const auto res = simplify::region_feasible(make_polytope(a, beta, -1));
    return py::make_tuple(res.feasible, res.witness);
  });

  m.def(
      "solve_lp",
      [](const Vec& c, const Mat& a_ub, const Vec& b_ub, const Vec& lo, const Vec& up) {
        const auto res = opt::simplex_solve(make_lp(c, a_ub, b_ub, lo, up));
        const char* status = res.status == opt::LpStatus::Optimal     ? "optimal"
                             : res.status == opt::LpStatus::Infeasible ? "infeasible"
                             : res.status == opt::LpStatus::Unbounded  ? "unbounded"
                                                                       : "failed";
        return py::make_tuple(std::string(status), res.objective, res.x);
      },
      "Minimize c.x subject to A x <= b and bounds", py::arg("c"), py::arg("a_ub"),
      py::arg("b_ub"), py::arg("lo"), py::arg("up"));
  m.def(
      "solve_milp",
      [](const Vec& c, const Mat& a_ub, const Vec& b_ub, const Vec& lo, const Vec& up,
         const std::vector<int>& binaries, long node_limit) {
        opt::MilpModel model;
        model.lp = make_lp(c, a_ub, b_ub, lo, up);
        model.binaries = binaries;
        opt::BnbOptions opts;
        opts.node_limit = node_limit;
        const auto res = opt::branch_and_bound(model, opts);
        const char* status = res.status == opt::MilpStatus::Optimal      ? "optimal"
                             : res.status == opt::MilpStatus::Infeasible ? "infeasible"
                             : res.status == opt::MilpStatus::Unbounded  ? "unbounded"
                             : res.status == opt::MilpStatus::NodeLimit  ? "node_limit"
                                                                         : "failed";
        return py::make_tuple(std::string(status), res.objective, res.x, res.nodes);
      },
      py::arg("c"), py::arg("a_ub"), py::arg("b_ub"), py::arg("lo"), py::arg("up"),
      py::arg("binaries"), py::arg("node_limit") = 1000000);

  m.def(
      "run_stage",
      [](const std::string& config_path, const std::string& stage, const std::string& mode,
         const std::string& out_dir) {
        auto cfg = pipeline::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        pipeline::run_stage(cfg, stage, mode);
      },
      py::arg("config_path"), py::arg("stage"), py::arg("mode") = "", py::arg("out_dir") = "");
}
