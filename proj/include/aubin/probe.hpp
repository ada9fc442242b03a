// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "aubin/reference.hpp"

namespace aubin {

struct ProbeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProbeOptions {
  double radius = 0.05;       // parameter ball around p_ref
  int samples = 200;          // parameter pairs
  double neighborhood = 0.25; // half-width of the decision-variable window V
  int grid_resolution = 5;    // Newton seeds per axis
  unsigned seed = 42;
  double tol = 1e-9;
};

// All roots of 0 in H(p,x) + N_Gamma(x) inside [lo,hi], found by enumerating
// activity patterns / conic branches and running damped Newton from grid
// seeds. Purely numerical; feeds no verdict.
std::vector<Eigen::VectorXd> solve_ge_grid(const ReferenceData& ref, const Eigen::VectorXd& p,
                                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                           int resolution, double tol = 1e-9);

struct ModulusEstimate {
  double kappa_hat = 0.0;
  struct Pair {
    Eigen::VectorXd p1, p2;
    double excess = 0.0;
    double dist = 0.0;
  };
  std::vector<Pair> pairs;
  std::vector<std::string> anomalies;
};

ModulusEstimate sample_aubin_modulus(const ReferenceData& ref, const ProbeOptions& opts);

std::string probe_report_json(const ModulusEstimate& m);

// Membership oracle for the graph of the constraint normal-cone map, built
// from the multiplier representation (independent of the tangent formulas).
using GraphOracle = std::function<bool(const Eigen::VectorXd& x, const Eigen::VectorXd& xstar)>;

GraphOracle make_graph_oracle(const ReferenceData& ref, double tol = 1e-7);

struct TangentSample {
  Eigen::VectorXd u, ustar;
  double t = 0.0;
};

// Difference quotients of graph points sampled around the reference pair.
std::vector<TangentSample> brute_force_tangent(const ReferenceData& ref, const GraphOracle& oracle,
                                               const std::vector<double>& t_list, int count,
                                               unsigned seed);

}  // namespace aubin
