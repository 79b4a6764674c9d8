#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gptrack/assoc.hpp"
#include "gptrack/baselines.hpp"
#include "gptrack/gpr.hpp"
#include "gptrack/io.hpp"
#include "gptrack/kinematics.hpp"
#include "gptrack/metrics.hpp"
#include "gptrack/mtt.hpp"
#include "gptrack/nsim.hpp"
#include "gptrack/pf.hpp"

namespace py = pybind11;
using namespace gptrack;

namespace {

Eigen::MatrixXd states_matrix(const std::vector<kin::KinematicState>& traj) {
  Eigen::MatrixXd out(traj.size(), 6);
  for (std::size_t t = 0; t < traj.size(); ++t)
    out.row(t) << traj[t].xi, traj[t].eta, traj[t].v, traj[t].phi, traj[t].a_t,
        traj[t].a_n;
  return out;
}

std::vector<Eigen::Vector2d> to_positions(const Eigen::MatrixXd& m) {
  if (m.cols() < 2) throw DataError("positions need at least two columns");
  std::vector<Eigen::Vector2d> out;
  out.reserve(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.emplace_back(m(i, 0), m(i, 1));
  return out;
}

std::vector<kin::Measurement> to_measurements(const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw DataError("measurements need columns (r, bearing)");
  std::vector<kin::Measurement> out;
  out.reserve(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.push_back({m(i, 0), m(i, 1)});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Target tracking with a learned shift-invariant motion model: "
      "simulators, GP motion learning, particle filters, BP association, "
      "and metrics.";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericalError>(m, "NumericalError");

  // --- simulation ---
  py::enum_<kin::Maneuver>(m, "Maneuver")
      .value("ALTERNATING_TURNS", kin::Maneuver::kAlternatingTurns)
      .value("RANDOM_ACCEL", kin::Maneuver::kRandomAccel)
      .value("RANDOM_TURNS", kin::Maneuver::kRandomTurns)
      .value("SCHEDULE", kin::Maneuver::kSchedule);

  py::class_<kin::ScenarioSpec>(m, "ScenarioSpec")
      .def(py::init<>())
      .def_readwrite("maneuver", &kin::ScenarioSpec::maneuver)
      .def_readwrite("num_steps", &kin::ScenarioSpec::num_steps)
      .def_readwrite("dt", &kin::ScenarioSpec::dt)
      .def_readwrite("turn_rate", &kin::ScenarioSpec::turn_rate)
      .def_readwrite("turn_block", &kin::ScenarioSpec::turn_block)
      .def_readwrite("accel_levels", &kin::ScenarioSpec::accel_levels)
      .def_readwrite("sigma_r", &kin::ScenarioSpec::sigma_r)
      .def_readwrite("sigma_b", &kin::ScenarioSpec::sigma_b)
      .def_readwrite("p_d", &kin::ScenarioSpec::p_d)
      .def_readwrite("lambda_fa", &kin::ScenarioSpec::lambda_fa)
      .def_readwrite("seed", &kin::ScenarioSpec::seed);

  m.def("s1_train", &kin::s1_train, py::arg("seed"));
  m.def("s1_test", &kin::s1_test, py::arg("seed"));
  m.def("s2_train", &kin::s2_train, py::arg("seed"));
  m.def("s2_test", &kin::s2_test, py::arg("seed"));
  m.def("s3_test", &kin::s3_test, py::arg("seed"));

  m.def(
      "generate_trajectory",
      [](const kin::ScenarioSpec& spec, int target) {
        return states_matrix(kin::generate_trajectory(spec, target));
      },
      py::arg("spec"), py::arg("target") = 0,
      "Rows (xi, eta, v, phi, a_t, a_n), one per step.");

  m.def(
      "generate_measurements",
      [](const kin::ScenarioSpec& spec, int target) {
        const auto traj = kin::generate_trajectory(spec, target);
        const auto scans = kin::generate_measurements({traj}, spec);
        Eigen::MatrixXd out(scans.size(), 2);
        for (std::size_t t = 0; t < scans.size(); ++t) {
          if (scans[t].meas.size() != 1)
            throw DataError(
                "generate_measurements: single-target export expects one "
                "measurement per scan (set p_d=1, lambda_fa=0)");
          out.row(t) << scans[t].meas[0].r, scans[t].meas[0].bearing;
        }
        return out;
      },
      py::arg("spec"), py::arg("target") = 0,
      "Rows (r, bearing), one per scan; requires p_d=1 and no clutter.");

  // --- GP regression ---
  py::class_<gpr::Hyperparameters>(m, "Hyperparameters")
      .def(py::init([](double l, double sv, double nv) {
             return gpr::Hyperparameters{l, sv, nv};
           }),
           py::arg("length_scale") = 1.0, py::arg("signal_var") = 1.0,
           py::arg("noise_var") = 1.0)
      .def_readwrite("length_scale", &gpr::Hyperparameters::length_scale)
      .def_readwrite("signal_var", &gpr::Hyperparameters::signal_var)
      .def_readwrite("noise_var", &gpr::Hyperparameters::noise_var);

  py::class_<gpr::GpModel>(m, "GpModel")
      .def_readonly("hp", &gpr::GpModel::hp)
      .def("size", &gpr::GpModel::size)
      .def("log_marginal_likelihood", [](const gpr::GpModel& g) {
        return gpr::log_marginal_likelihood(g);
      });

  m.def("gp_fit", &gpr::fit, py::arg("inputs"), py::arg("targets"),
        py::arg("hp"));
  m.def(
      "gp_predict",
      [](const gpr::GpModel& g, const Eigen::MatrixXd& queries) {
        Eigen::VectorXd mean, var;
        gpr::predict_batch(g, queries, mean, var);
        return py::make_tuple(mean, var);
      },
      py::arg("model"), py::arg("queries"),
      "Predictive mean and variance per query row.");

  // --- motion model ---
  py::class_<nsim::NsimModel>(m, "NsimModel")
      .def_readonly("gp_xi", &nsim::NsimModel::gp_xi)
      .def_readonly("gp_eta", &nsim::NsimModel::gp_eta)
      .def_readonly("shared_hyperparameters",
                    &nsim::NsimModel::shared_hyperparameters)
      .def_readonly("dt", &nsim::NsimModel::dt);

  m.def(
      "train",
      [](const std::vector<Eigen::MatrixXd>& trajectories, double noise_var,
         double dt, bool shared) {
        std::vector<std::vector<Eigen::Vector2d>> pos;
        for (const auto& t : trajectories) pos.push_back(to_positions(t));
        nsim::TrainOptions opts =
            nsim::TrainOptions::with_default_grid(noise_var, dt);
        opts.shared_hyperparameters = shared;
        return nsim::train(pos, opts);
      },
      py::arg("trajectories"), py::arg("noise_var") = 1.0,
      py::arg("dt") = 1.0, py::arg("shared_hyperparameters") = true,
      "Learn the per-axis delta GPs from (N x >=2) position arrays.");

  m.def(
      "predict_delta",
      [](const nsim::NsimModel& model, const Eigen::MatrixXd& deltas) {
        if (deltas.cols() != 2)
          throw DataError("predict_delta: queries must be N x 2");
        Eigen::VectorXd mx, vx, me, ve;
        nsim::predict_delta_batch(model, deltas, mx, vx, me, ve);
        Eigen::MatrixXd mean(deltas.rows(), 2), var(deltas.rows(), 2);
        mean.col(0) = mx;
        mean.col(1) = me;
        var.col(0) = vx;
        var.col(1) = ve;
        return py::make_tuple(mean, var);
      },
      py::arg("model"), py::arg("deltas"),
      "Next-delta predictive mean and variance per query row.");

  m.def("save_model", &io::save_model, py::arg("path"), py::arg("model"));
  m.def("load_model", &io::load_model, py::arg("path"));

  // --- single-target tracking ---
  m.def(
      "track_stt",
      [](const nsim::NsimModel& model, const Eigen::MatrixXd& measurements,
         int num_particles, double sigma_r, double sigma_b, double q,
         std::uint64_t seed) {
        pf::FilterConfig cfg;
        cfg.num_particles = num_particles;
        cfg.sigma_r = sigma_r;
        cfg.sigma_b = sigma_b;
        cfg.q_xi = q;
        cfg.q_eta = q;
        cfg.seed = seed;
        const pf::SttResult r =
            pf::track_stt(model, to_measurements(measurements), cfg);
        Eigen::MatrixXd est(r.estimates.size(), 4);
        for (std::size_t t = 0; t < r.estimates.size(); ++t)
          est.row(t) << r.estimates[t].xi, r.estimates[t].eta,
              r.estimates[t].dxi, r.estimates[t].deta;
        return est;
      },
      py::arg("model"), py::arg("measurements"),
      py::arg("num_particles") = 200, py::arg("sigma_r") = 5.0,
      py::arg("sigma_b") = deg2rad(0.5), py::arg("q") = 1.0,
      py::arg("seed") = 1,
      "Bootstrap particle filter; rows (xi, eta, dxi, deta) per scan.");

  // --- association ---
  m.def(
      "run_bp",
      [](const Eigen::MatrixXd& psi, int max_iterations, double tolerance,
         double damping) {
        assoc::AssociationFactors f;
        f.psi = psi;
        assoc::BpConfig cfg;
        cfg.max_iter = max_iterations;
        cfg.tol = tolerance;
        cfg.damping = damping;
        const assoc::Marginals r = assoc::run_bp(f, cfg);
        return py::make_tuple(r.target_to_meas, r.meas_to_target, r.converged,
                              r.iterations);
      },
      py::arg("psi"), py::arg("max_iterations") = 200,
      py::arg("tolerance") = 1e-6, py::arg("damping") = 0.5,
      "Loopy BP association marginals from a K x (Kt+1) factor matrix.");

  m.def(
      "exact_association_marginals",
      [](const Eigen::MatrixXd& psi) {
        assoc::AssociationFactors f;
        f.psi = psi;
        const assoc::Marginals r = assoc::exact_marginals_bruteforce(f);
        return py::make_tuple(r.target_to_meas, r.meas_to_target);
      },
      py::arg("psi"), "Enumeration oracle for small association problems.");

  // --- metrics ---
  m.def(
      "rmse",
      [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& est) {
        return metrics::rmse(to_positions(truth), to_positions(est));
      },
      py::arg("truth"), py::arg("estimates"),
      "Pooled position RMSE of two equal-length (N x 2) arrays.");

  m.def(
      "gospa",
      [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& est, double c,
         double alpha, double p) {
        metrics::GospaParams params;
        params.c = c;
        params.alpha = alpha;
        params.p = p;
        std::vector<Eigen::Vector2d> X, Y;
        if (truth.size() > 0) X = to_positions(truth);
        if (est.size() > 0) Y = to_positions(est);
        return metrics::gospa(X, Y, params);
      },
      py::arg("truth"), py::arg("estimates"), py::arg("c") = 10.0,
      py::arg("alpha") = 2.0, py::arg("p") = 2.0,
      "GOSPA distance between two point sets given as (N x 2) arrays.");

  m.attr("__version__") = io::kToolVersion;
}
