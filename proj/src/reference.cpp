// SPDX-License-Identifier: Apache-2.0
#include "aubin/reference.hpp"

namespace aubin {

namespace {

std::vector<double> joined_values(const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
  std::vector<double> vals(static_cast<std::size_t>(p.size() + x.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) vals[static_cast<std::size_t>(i)] = p(i);
  for (Eigen::Index i = 0; i < x.size(); ++i) vals[static_cast<std::size_t>(p.size() + i)] = x(i);
  return vals;
}

std::vector<double> x_values(const Eigen::VectorXd& x) {
  return std::vector<double>(x.data(), x.data() + x.size());
}

}  // namespace

Eigen::MatrixXd ReferenceData::hessian_contraction(const Eigen::VectorXd& lam) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n(), n());
  for (int j = 0; j < s(); ++j) out += lam(j) * hess_g[static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd ReferenceData::theta_hessian() const {
  return hessian_contraction(lambda) + reduction.curvature;
}

Eigen::MatrixXd ReferenceData::eval_gradg(const Eigen::VectorXd& x) const {
  const auto vals = x_values(x);
  Eigen::MatrixXd out(s(), n());
  for (int i = 0; i < s(); ++i)
    for (int j = 0; j < n(); ++j)
      out(i, j) = sym->dg_dx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(vals);
  return out;
}

Eigen::MatrixXd ReferenceData::eval_gradH_x(const Eigen::VectorXd& p, const Eigen::VectorXd& x) const {
  const auto vals = joined_values(p, x);
  Eigen::MatrixXd out(n(), n());
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < n(); ++j)
      out(i, j) = sym->dH_dx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(vals);
  return out;
}

Eigen::MatrixXd ReferenceData::eval_hessian_contraction(const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& lam) const {
  const auto vals = x_values(x);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n(), n());
  for (int k = 0; k < s(); ++k) {
    if (lam(k) == 0.0) continue;
    for (int i = 0; i < n(); ++i)
      for (int j = 0; j < n(); ++j)
        out(i, j) += lam(k) * sym->d2g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(j)].eval(vals);
  }
  return out;
}

ReferenceData assemble_reference(const ProblemSpec& spec) {
  spec.validate();
  ReferenceData ref;
  ref.spec = spec;
  const int l = spec.l(), n = spec.n(), s = spec.s();

  auto sym = std::make_shared<SymbolicDerivatives>();
  sym->dH_dp.resize(static_cast<std::size_t>(n));
  sym->dH_dx.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < l; ++a)
      sym->dH_dp[static_cast<std::size_t>(i)].push_back(spec.H[static_cast<std::size_t>(i)].derivative(a));
    for (int j = 0; j < n; ++j)
      sym->dH_dx[static_cast<std::size_t>(i)].push_back(
          spec.H[static_cast<std::size_t>(i)].derivative(l + j));
  }
  sym->dg_dx.resize(static_cast<std::size_t>(s));
  sym->d2g.resize(static_cast<std::size_t>(s));
  for (int k = 0; k < s; ++k) {
    for (int j = 0; j < n; ++j)
      sym->dg_dx[static_cast<std::size_t>(k)].push_back(spec.g[static_cast<std::size_t>(k)].derivative(j));
    sym->d2g[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        sym->d2g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].push_back(
            sym->dg_dx[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].derivative(j));
  }
  ref.sym = sym;

  const auto hp_vals = joined_values(spec.p_ref, spec.x_ref);
  const auto xv = x_values(spec.x_ref);

  ref.gradH_p.resize(n, l);
  ref.gradH_x.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < l; ++a)
      ref.gradH_p(i, a) = sym->dH_dp[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)].eval(hp_vals);
    for (int j = 0; j < n; ++j)
      ref.gradH_x(i, j) = sym->dH_dx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(hp_vals);
  }
  ref.gradg.resize(s, n);
  ref.hess_g.assign(static_cast<std::size_t>(s), Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < s; ++k) {
    for (int j = 0; j < n; ++j)
      ref.gradg(k, j) = sym->dg_dx[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)].eval(xv);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        ref.hess_g[static_cast<std::size_t>(k)](i, j) =
            sym->d2g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                .eval(xv);
  }
  ref.g0 = spec.eval_g(spec.x_ref);
  ref.xstar = -spec.eval_H(spec.p_ref, spec.x_ref);
  return ref;
}

}  // namespace aubin
