// SPDX-License-Identifier: Apache-2.0
#include "aubin/probe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <json.hpp>
#include <limits>
#include <optional>
#include <random>

#include "aubin/linalg.hpp"
#include "aubin/lorentz.hpp"

namespace aubin {

namespace {

// Damped Newton with a finite-difference Jacobian; tiny systems, robustness
// over speed (step halving up to 30 times, at most 100 iterations).
bool damped_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
                   Eigen::VectorXd& y) {
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd r = F(y);
    if (r.norm() <= 1e-12) return true;
    const int m = static_cast<int>(y.size());
    Eigen::MatrixXd J(r.size(), m);
    const double h = 1e-7;
    for (int c = 0; c < m; ++c) {
      Eigen::VectorXd yp = y;
      yp(c) += h;
      J.col(c) = (F(yp) - r) / h;
    }
    const auto step = linalg::solve_least_squares(J, -r);
    double alpha = 1.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      if (F(y + alpha * step.x).norm() < r.norm()) {
        y += alpha * step.x;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) return F(y).norm() <= 1e-12;
  }
  return F(y).norm() <= 1e-12;
}

struct PatternSpec {
  // Polyhedral path: selected rows of the H-rep; Lorentz path: per-block tag.
  std::vector<int> rows;
  std::vector<int> lorentz_tags;  // 0 interior, 1 apex, 2 boundary
};

// The H-rep of D when available (orthant / hrep / small Lorentz blocks).
std::optional<Eigen::MatrixXd> cone_rows(const ConeSpec& cone) {
  auto rows = cone.polyhedral_rows();
  if (!rows) return std::nullopt;
  for (Eigen::Index i = 0; i < rows->rows(); ++i) rows->row(i).normalize();
  return rows;
}

std::vector<Eigen::VectorXd> grid_seeds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                        int resolution) {
  const int n = static_cast<int>(lo.size());
  std::vector<Eigen::VectorXd> seeds;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const int total = static_cast<int>(std::pow(resolution, n));
  for (int k = 0; k < total; ++k) {
    Eigen::VectorXd x(n);
    int c = k;
    for (int i = 0; i < n; ++i) {
      const int step = c % resolution;
      c /= resolution;
      x(i) = resolution == 1 ? 0.5 * (lo(i) + hi(i))
                             : lo(i) + (hi(i) - lo(i)) * step / (resolution - 1);
    }
    seeds.push_back(std::move(x));
  }
  return seeds;
}

}  // namespace

std::vector<Eigen::VectorXd> solve_ge_grid(const ReferenceData& ref, const Eigen::VectorXd& p,
                                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                           int resolution, double tol) {
  const ProblemSpec& spec = ref.spec;
  const int n = ref.n();
  std::vector<Eigen::VectorXd> roots;

  auto accept = [&](const Eigen::VectorXd& x) {
    const double margin = 1e-9;
    for (int i = 0; i < n; ++i)
      if (x(i) < lo(i) - margin || x(i) > hi(i) + margin) return false;
    for (const auto& r : roots)
      if ((r - x).norm() <= 1e-7) return false;
    return true;
  };

  const auto seeds = grid_seeds(lo, hi, resolution);
  const auto hrows = cone_rows(spec.cone);

  if (hrows) {
    const Eigen::MatrixXd& A = *hrows;
    const int m = static_cast<int>(A.rows());
    if (m > 12) throw ProbeError("too many halfspaces for pattern enumeration");
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      std::vector<int> act;
      for (int i = 0; i < m; ++i)
        if (mask & (1u << i)) act.push_back(i);
      const int k = static_cast<int>(act.size());
      auto F = [&](const Eigen::VectorXd& y) {
        const Eigen::VectorXd x = y.head(n);
        const Eigen::VectorXd nu = y.tail(k);
        Eigen::VectorXd lam = Eigen::VectorXd::Zero(spec.s());
        for (int i = 0; i < k; ++i) lam += nu(i) * A.row(act[static_cast<std::size_t>(i)]).transpose();
        Eigen::VectorXd out(n + k);
        out.head(n) = spec.eval_H(p, x) + ref.eval_gradg(x).transpose() * lam;
        const Eigen::VectorXd gz = spec.eval_g(x);
        for (int i = 0; i < k; ++i) out(n + i) = A.row(act[static_cast<std::size_t>(i)]).dot(gz);
        return out;
      };
      for (const auto& seed : seeds) {
        Eigen::VectorXd y(n + k);
        y.head(n) = seed;
        y.tail(k).setZero();
        if (!damped_newton(F, y)) continue;
        const Eigen::VectorXd x = y.head(n);
        const Eigen::VectorXd nu = y.tail(k);
        if (nu.size() > 0 && nu.minCoeff() < -1e-9) continue;
        const Eigen::VectorXd gz = spec.eval_g(x);
        if ((A * gz).maxCoeff() > 1e-9) continue;
        if (F(y).norm() > tol) continue;
        if (accept(x)) roots.push_back(x);
      }
    }
  } else if (spec.cone.type == ConeSpec::Type::LorentzProduct) {
    // Per-block conic branches: interior / apex / boundary ray.
    const auto& blocks = spec.cone.blocks;
    const int nb = static_cast<int>(blocks.size());
    std::vector<int> offsets(static_cast<std::size_t>(nb), 0);
    for (int b = 1; b < nb; ++b) offsets[static_cast<std::size_t>(b)] = offsets[static_cast<std::size_t>(b - 1)] + blocks[static_cast<std::size_t>(b - 1)];
    const int combos = static_cast<int>(std::pow(3, nb));
    for (int combo = 0; combo < combos; ++combo) {
      std::vector<int> tag(static_cast<std::size_t>(nb));
      int c = combo;
      int extra = 0;  // extra unknowns beyond x
      int extra_eqs = 0;
      bool valid = true;
      for (int b = 0; b < nb; ++b) {
        tag[static_cast<std::size_t>(b)] = c % 3;
        c /= 3;
        if (tag[static_cast<std::size_t>(b)] == 1) {
          extra += blocks[static_cast<std::size_t>(b)];
          extra_eqs += blocks[static_cast<std::size_t>(b)];
        }
        if (tag[static_cast<std::size_t>(b)] == 2) {
          if (blocks[static_cast<std::size_t>(b)] < 2) valid = false;
          extra += 1;
          extra_eqs += 1;
        }
      }
      if (!valid) continue;
      auto lam_of = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd lam = Eigen::VectorXd::Zero(spec.s());
        const Eigen::VectorXd x = y.head(n);
        const Eigen::VectorXd gz = spec.eval_g(x);
        int pos = n;
        for (int b = 0; b < nb; ++b) {
          const int off = offsets[static_cast<std::size_t>(b)];
          const int bd = blocks[static_cast<std::size_t>(b)];
          if (tag[static_cast<std::size_t>(b)] == 1) {
            lam.segment(off, bd) = y.segment(pos, bd);
            pos += bd;
          } else if (tag[static_cast<std::size_t>(b)] == 2) {
            lorentz::LorentzSpec ls{bd, spec.cone.axis};
            const Eigen::VectorXd zb = gz.segment(off, bd);
            const double z0 = lorentz::z0_part(ls, zb);
            const Eigen::VectorXd zbar = lorentz::bar_part(ls, zb);
            lam.segment(off, bd) = y(pos) * lorentz::join_parts(ls, -z0, zbar);
            pos += 1;
          }
        }
        return lam;
      };
      auto F = [&](const Eigen::VectorXd& y) {
        const Eigen::VectorXd x = y.head(n);
        const Eigen::VectorXd gz = spec.eval_g(x);
        Eigen::VectorXd out(n + extra_eqs);
        out.head(n) = spec.eval_H(p, x) + ref.eval_gradg(x).transpose() * lam_of(y);
        int pos = n;
        for (int b = 0; b < nb; ++b) {
          const int off = offsets[static_cast<std::size_t>(b)];
          const int bd = blocks[static_cast<std::size_t>(b)];
          if (tag[static_cast<std::size_t>(b)] == 1) {
            out.segment(pos, bd) = gz.segment(off, bd);
            pos += bd;
          } else if (tag[static_cast<std::size_t>(b)] == 2) {
            lorentz::LorentzSpec ls{bd, spec.cone.axis};
            out(pos) = lorentz::eig_low(ls, gz.segment(off, bd));
            pos += 1;
          }
        }
        return out;
      };
      for (const auto& seed : seeds) {
        Eigen::VectorXd y(n + extra);
        y.head(n) = seed;
        y.tail(extra).setZero();
        if (!damped_newton(F, y)) continue;
        const Eigen::VectorXd x = y.head(n);
        const Eigen::VectorXd gz = spec.eval_g(x);
        const Eigen::VectorXd lam = lam_of(y);
        bool ok = true;
        int pos = n;
        for (int b = 0; b < nb && ok; ++b) {
          const int off = offsets[static_cast<std::size_t>(b)];
          const int bd = blocks[static_cast<std::size_t>(b)];
          lorentz::LorentzSpec ls{bd, spec.cone.axis};
          const Eigen::VectorXd zb = gz.segment(off, bd);
          if (bd == 1) {
            if (zb(0) < -1e-9) ok = false;
            if (tag[static_cast<std::size_t>(b)] == 1 && lam(off) > 1e-9) ok = false;  // polar of R_+ is R_-
          } else if (!lorentz::in_cone(ls, zb, 1e-9)) {
            ok = false;
          }
          if (tag[static_cast<std::size_t>(b)] == 1) {
            if (bd >= 2 && !lorentz::in_polar(ls, lam.segment(off, bd), 1e-9)) ok = false;
            pos += bd;
          } else if (tag[static_cast<std::size_t>(b)] == 2) {
            if (y(pos) < -1e-9) ok = false;
            if (zb.norm() <= 1e-9) ok = false;
            pos += 1;
          }
        }
        if (!ok) continue;
        if (F(y).norm() > tol) continue;
        if (accept(x)) roots.push_back(x);
      }
    }
  } else {
    throw ProbeError("unsupported cone for the grid solver");
  }
  std::sort(roots.begin(), roots.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (std::abs(a(i) - b(i)) > 1e-12) return a(i) < b(i);
    return false;
  });
  return roots;
}

ModulusEstimate sample_aubin_modulus(const ReferenceData& ref, const ProbeOptions& opts) {
  ModulusEstimate out;
  const int l = ref.l(), n = ref.n();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const Eigen::VectorXd vlo = ref.spec.x_ref.array() - opts.neighborhood;
  const Eigen::VectorXd vhi = ref.spec.x_ref.array() + opts.neighborhood;
  const Eigen::VectorXd wlo = ref.spec.x_ref.array() - 2.0 * opts.neighborhood;
  const Eigen::VectorXd whi = ref.spec.x_ref.array() + 2.0 * opts.neighborhood;

  auto sample_p = [&]() {
    Eigen::VectorXd d(l);
    for (int i = 0; i < l; ++i) d(i) = gauss(rng);
    const double nrm = d.norm();
    if (nrm == 0.0) return Eigen::VectorXd(ref.spec.p_ref);
    const double r = opts.radius * std::pow(unif(rng), 1.0 / std::max(1, l));
    return Eigen::VectorXd(ref.spec.p_ref + (r / nrm) * d);
  };

  for (int it = 0; it < opts.samples; ++it) {
    ModulusEstimate::Pair pr;
    pr.p1 = sample_p();
    pr.p2 = sample_p();
    pr.dist = (pr.p1 - pr.p2).norm();
    if (pr.dist <= 1e-12) continue;
    const auto s1 = solve_ge_grid(ref, pr.p1, vlo, vhi, opts.grid_resolution, opts.tol);
    const auto s2 = solve_ge_grid(ref, pr.p2, wlo, whi, opts.grid_resolution, opts.tol);
    if (s1.empty()) {
      out.anomalies.push_back("empty S(p) section at sample " + std::to_string(it));
      continue;
    }
    if (s2.empty()) {
      out.anomalies.push_back("empty comparison section at sample " + std::to_string(it));
      continue;
    }
    double excess = 0.0;
    for (const auto& x : s1) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& y : s2) dmin = std::min(dmin, (x - y).norm());
      excess = std::max(excess, dmin);
    }
    pr.excess = excess;
    out.kappa_hat = std::max(out.kappa_hat, excess / pr.dist);
    out.pairs.push_back(std::move(pr));
  }
  (void)n;
  return out;
}

std::string probe_report_json(const ModulusEstimate& m) {
  nlohmann::json j;
  j["kappa_hat"] = m.kappa_hat;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : m.pairs) {
    nlohmann::json jp;
    jp["p1"] = std::vector<double>(p.p1.data(), p.p1.data() + p.p1.size());
    jp["p2"] = std::vector<double>(p.p2.data(), p.p2.data() + p.p2.size());
    jp["excess"] = p.excess;
    jp["dist"] = p.dist;
    j["pairs"].push_back(std::move(jp));
  }
  j["anomalies"] = m.anomalies;
  return j.dump(2);
}

GraphOracle make_graph_oracle(const ReferenceData& ref, double tol) {
  return [ref, tol](const Eigen::VectorXd& x, const Eigen::VectorXd& xstar) {
    const auto hrows = cone_rows(ref.spec.cone);
    const Eigen::VectorXd gz = ref.spec.eval_g(x);
    const Eigen::MatrixXd gradg = ref.eval_gradg(x);
    if (hrows) {
      const Eigen::MatrixXd& A = *hrows;
      const Eigen::VectorXd az = A * gz;
      if (az.maxCoeff() > tol) return false;
      std::vector<int> act;
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        if (az(i) >= -tol) act.push_back(static_cast<int>(i));
      // xstar = gradg^T A_act^T nu with nu >= 0; solved by nonnegative
      // active-subset enumeration (desk scale).
      const std::size_t kk = act.size();
      for (std::uint32_t mask = 0; mask < (1u << kk); ++mask) {
        Eigen::MatrixXd B(static_cast<Eigen::Index>(std::popcount(mask)), x.size());
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < kk; ++i)
          if (mask & (1u << i)) B.row(r++) = A.row(act[i]) * gradg;
        if (B.rows() == 0) {
          if (xstar.norm() <= tol) return true;
          continue;
        }
        const auto ls = linalg::solve_least_squares(B.transpose(), xstar);
        if (ls.residual <= tol && ls.x.minCoeff() >= -tol) return true;
      }
      return false;
    }
    // Lorentz blocks: lambda in N_K(g) blockwise.
    const auto& blocks = ref.spec.cone.blocks;
    int off = 0;
    // Assemble the admissible normal directions blockwise, then match xstar.
    // Only the single-block case is needed in practice.
    if (blocks.size() != 1) return false;
    const int bd = blocks[0];
    lorentz::LorentzSpec ls{bd, ref.spec.cone.axis};
    if (!lorentz::in_cone(ls, gz, tol)) return false;
    if (lorentz::eig_low(ls, gz) > tol) return xstar.norm() <= tol;
    if (gz.norm() <= tol) {
      // Apex: any lambda in the polar cone.
      const auto sol = linalg::solve_least_squares(gradg.transpose(), xstar);
      return sol.residual <= tol && lorentz::in_polar(ls, sol.x, 10 * tol);
    }
    // Boundary ray: lambda = m (zbar, -z0), m >= 0.
    const double z0 = lorentz::z0_part(ls, gz);
    const Eigen::VectorXd dir = lorentz::join_parts(ls, -z0, lorentz::bar_part(ls, gz));
    const Eigen::VectorXd col = gradg.transpose() * dir;
    const double denom = col.squaredNorm();
    const double m = denom > 0 ? col.dot(xstar) / denom : 0.0;
    return m >= -tol && (xstar - m * col).norm() <= tol;
  };
}

std::vector<TangentSample> brute_force_tangent(const ReferenceData& ref, const GraphOracle& oracle,
                                               const std::vector<double>& t_list, int count,
                                               unsigned seed) {
  if (!ref.completed) throw ProbeError("reference data not completed");
  std::vector<TangentSample> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  const int n = ref.n();
  const auto hrows = cone_rows(ref.spec.cone);
  if (!hrows) return out;  // sampling is implemented for polyhedral descriptions
  const Eigen::MatrixXd& A = *hrows;
  const Eigen::VectorXd az0 = A * ref.g0;
  std::vector<int> active;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (az0(i) >= -1e-9) active.push_back(static_cast<int>(i));
  // Base reduced multiplier on the active rows.
  Eigen::VectorXd nu0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size()));
  {
    Eigen::MatrixXd At(static_cast<Eigen::Index>(active.size()), ref.s());
    for (std::size_t i = 0; i < active.size(); ++i) At.row(static_cast<Eigen::Index>(i)) = A.row(active[i]);
    const auto ls = linalg::solve_least_squares(At.transpose(), ref.lambda);
    if (ls.residual < 1e-8) nu0 = ls.x;
  }

  for (int it = 0; it < count; ++it) {
    const double t = t_list[static_cast<std::size_t>(it) % t_list.size()];
    // Random activity pattern within the reference active set. Rows whose
    // base multiplier is positive must stay active to remain on the graph.
    std::vector<int> pattern;
    for (std::size_t i = 0; i < active.size(); ++i)
      if (nu0(static_cast<Eigen::Index>(i)) > 1e-9 || coin(rng)) pattern.push_back(active[i]);
    Eigen::VectorXd dx(n);
    for (int i = 0; i < n; ++i) dx(i) = gauss(rng);
    dx.normalize();
    // Project x_ref + t dx onto the pattern manifold {(A g)_pattern = 0}.
    Eigen::VectorXd x = ref.spec.x_ref + t * dx;
    bool solved = true;
    for (int gn = 0; gn < 50; ++gn) {
      const Eigen::VectorXd gz = ref.spec.eval_g(x);
      Eigen::VectorXd resid(static_cast<Eigen::Index>(pattern.size()));
      Eigen::MatrixXd J(static_cast<Eigen::Index>(pattern.size()), n);
      const Eigen::MatrixXd gradg = ref.eval_gradg(x);
      for (std::size_t i = 0; i < pattern.size(); ++i) {
        resid(static_cast<Eigen::Index>(i)) = A.row(pattern[i]).dot(gz);
        J.row(static_cast<Eigen::Index>(i)) = A.row(pattern[i]) * gradg;
      }
      if (pattern.empty() || resid.norm() <= 1e-13) break;
      const auto step = linalg::solve_least_squares(J, -resid);
      x += step.x;
      if (gn == 49) solved = resid.norm() <= 1e-10;
    }
    if (!solved) continue;
    // Feasibility of the remaining rows.
    const Eigen::VectorXd gz = ref.spec.eval_g(x);
    if ((A * gz).maxCoeff() > 1e-9) continue;
    // Multiplier step within the pattern, kept nonnegative.
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(ref.s());
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      double base = 0.0;
      for (std::size_t k = 0; k < active.size(); ++k)
        if (active[k] == pattern[i]) base = nu0(static_cast<Eigen::Index>(k));
      const double nu = std::max(base + t * gauss(rng), 0.0);
      lam += nu * A.row(pattern[i]).transpose();
    }
    const Eigen::VectorXd xstar = ref.eval_gradg(x).transpose() * lam;
    if (!oracle(x, xstar)) continue;
    TangentSample smp;
    smp.t = t;
    smp.u = (x - ref.spec.x_ref) / t;
    smp.ustar = (xstar - ref.xstar) / t;
    out.push_back(std::move(smp));
  }
  return out;
}

}  // namespace aubin
