// SPDX-License-Identifier: Apache-2.0
#include "aubin/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace aubin::lorentz {

double z0_part(const LorentzSpec& spec, const Eigen::VectorXd& z) { return z(spec.axis_index()); }

Eigen::VectorXd bar_part(const LorentzSpec& spec, const Eigen::VectorXd& z) {
  Eigen::VectorXd out(spec.dim - 1);
  int k = 0;
  for (int i = 0; i < spec.dim; ++i)
    if (i != spec.axis_index()) out(k++) = z(i);
  return out;
}

Eigen::VectorXd join_parts(const LorentzSpec& spec, double z0, const Eigen::VectorXd& zbar) {
  Eigen::VectorXd out(spec.dim);
  int k = 0;
  for (int i = 0; i < spec.dim; ++i)
    out(i) = (i == spec.axis_index()) ? z0 : zbar(k++);
  return out;
}

double eig_low(const LorentzSpec& spec, const Eigen::VectorXd& z) {
  return z0_part(spec, z) - bar_part(spec, z).norm();
}

double eig_high(const LorentzSpec& spec, const Eigen::VectorXd& z) {
  return z0_part(spec, z) + bar_part(spec, z).norm();
}

bool in_cone(const LorentzSpec& spec, const Eigen::VectorXd& z, double tol) {
  return eig_low(spec, z) >= -tol * std::max(1.0, z.norm());
}

bool in_polar(const LorentzSpec& spec, const Eigen::VectorXd& z, double tol) {
  return eig_high(spec, z) <= tol * std::max(1.0, z.norm());
}

Eigen::VectorXd project(const LorentzSpec& spec, const Eigen::VectorXd& z) {
  const double z0 = z0_part(spec, z);
  const Eigen::VectorXd zbar = bar_part(spec, z);
  const double r = zbar.norm();
  if (z0 >= r) return z;                                    // inside
  if (z0 <= -r) return Eigen::VectorXd::Zero(spec.dim);     // polar maps to apex
  const double beta = 0.5 * (z0 + r);                        // strictly outside both
  return join_parts(spec, beta, (beta / r) * zbar);
}

Eigen::VectorXd project_polar(const LorentzSpec& spec, const Eigen::VectorXd& z) {
  return z - project(spec, z);
}

Eigen::VectorXd dir_derivative(const LorentzSpec& spec, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& h) {
  const double tol = 1e-12 * std::max(1.0, z.norm());
  const double lo = eig_low(spec, z);
  const double hi = eig_high(spec, z);
  if (z.norm() <= tol) return project(spec, h);  // positive homogeneity at the apex
  if (lo > tol) return h;                        // interior of the cone
  if (hi < -tol) return Eigen::VectorXd::Zero(spec.dim);  // interior of the polar
  const Eigen::VectorXd zbar = bar_part(spec, z);
  const double r = zbar.norm();
  const Eigen::VectorXd w = zbar / r;
  const double h0 = z0_part(spec, h);
  const Eigen::VectorXd hbar = bar_part(spec, h);
  if (lo < -tol && hi > tol) {
    // Outside both cones: the projection is differentiable with Jacobian
    // C(w, alpha), alpha = (z0 + r) / (2 r).
    return c_matrix(spec, w, hi / (2.0 * r)) * h;
  }
  if (std::abs(lo) <= tol) {
    // Boundary of the cone away from the apex: one-sided derivative obtained
    // from the smooth low spectral branch switching on.
    const double slack = std::max(w.dot(hbar) - h0, 0.0);
    return h + 0.5 * slack * join_parts(spec, 1.0, -w);
  }
  // Boundary of the polar away from the apex.
  const double gain = std::max(h0 + w.dot(hbar), 0.0);
  return 0.5 * gain * join_parts(spec, 1.0, w);
}

GraphDirCase classify_graph_direction(const LorentzSpec& spec, const Eigen::VectorXd& h,
                                      const Eigen::VectorXd& k, double tol) {
  const double scale = std::max(1.0, h.norm() + k.norm());
  if (h.norm() + k.norm() <= tol)
    throw LorentzError("classify_graph_direction: zero direction");
  if ((k - project(spec, h)).norm() > tol * scale)
    throw LorentzError("classify_graph_direction: k does not equal the projection of h");
  const double lo = eig_low(spec, h);
  const double hi = eig_high(spec, h);
  const double band = tol * std::max(1.0, h.norm());
  if (lo > band) return GraphDirCase::IntK;
  if (hi < -band) return GraphDirCase::IntPolar;
  if (lo < -band && hi > band) return GraphDirCase::Outside;
  if (std::abs(lo) <= band) return GraphDirCase::BdK;
  return GraphDirCase::BdPolar;
}

namespace {

// Families are built in canonical coordinates (bar block first, z0 last) and
// conjugated into the user's axis convention.
Eigen::MatrixXd to_user(const LorentzSpec& spec, const Eigen::MatrixXd& canon) {
  if (spec.axis == ConeSpec::Axis::Last) return canon;
  // Permutation sending user coordinates (z0 first) to canonical order.
  const int s = spec.dim;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(s, s);
  for (int i = 0; i < s - 1; ++i) P(i, i + 1) = 1.0;  // canonical bar_i = user_{i+1}
  P(s - 1, 0) = 1.0;                                  // canonical z0 = user_0
  return P.transpose() * canon * P;
}

}  // namespace

Eigen::MatrixXd c_matrix(const LorentzSpec& spec, const Eigen::VectorXd& w, double alpha) {
  const int m = spec.dim - 1;
  if (w.size() != m) throw LorentzError("c_matrix: w must have dim-1 components");
  Eigen::MatrixXd canon(spec.dim, spec.dim);
  canon.topLeftCorner(m, m) =
      alpha * Eigen::MatrixXd::Identity(m, m) + (0.5 - alpha) * (w * w.transpose());
  canon.topRightCorner(m, 1) = 0.5 * w;
  canon.bottomLeftCorner(1, m) = 0.5 * w.transpose();
  canon(m, m) = 0.5;
  return to_user(spec, canon);
}

Eigen::MatrixXd a_matrix(const LorentzSpec& spec, const Eigen::VectorXd& w) {
  const int m = spec.dim - 1;
  if (w.size() != m) throw LorentzError("a_matrix: w must have dim-1 components");
  Eigen::MatrixXd canon = Eigen::MatrixXd::Identity(spec.dim, spec.dim);
  canon.topLeftCorner(m, m) -= 0.5 * (w * w.transpose());
  canon.topRightCorner(m, 1) = 0.5 * w;
  canon.bottomLeftCorner(1, m) = 0.5 * w.transpose();
  canon(m, m) = 0.5;
  return to_user(spec, canon);
}

Eigen::MatrixXd b_matrix(const LorentzSpec& spec, const Eigen::VectorXd& w) {
  const int m = spec.dim - 1;
  if (w.size() != m) throw LorentzError("b_matrix: w must have dim-1 components");
  Eigen::MatrixXd canon(spec.dim, spec.dim);
  canon.topLeftCorner(m, m) = 0.5 * (w * w.transpose());
  canon.topRightCorner(m, 1) = 0.5 * w;
  canon.bottomLeftCorner(1, m) = 0.5 * w.transpose();
  canon(m, m) = 0.5;
  return to_user(spec, canon);
}

bool a_admissible(const LorentzSpec& spec, const Eigen::VectorXd& w, const Eigen::VectorXd& ustar,
                  double tol) {
  return -w.dot(bar_part(spec, ustar)) + z0_part(spec, ustar) >= -tol;
}

bool b_admissible(const LorentzSpec& spec, const Eigen::VectorXd& w, const Eigen::VectorXd& ustar,
                  double tol) {
  return w.dot(bar_part(spec, ustar)) + z0_part(spec, ustar) >= -tol;
}

CoderivFamily coderiv_family_at_apex(const LorentzSpec& spec, GraphDirCase c) {
  CoderivFamily f;
  f.spec = spec;
  switch (c) {
    case GraphDirCase::IntK:
      f.kind = CoderivFamily::Kind::Identity;
      break;
    case GraphDirCase::IntPolar:
      f.kind = CoderivFamily::Kind::Zero;
      break;
    case GraphDirCase::Outside:
      f.kind = CoderivFamily::Kind::CFamily;
      break;
    case GraphDirCase::BdK:
      f.kind = CoderivFamily::Kind::CFamilyPlusA;
      break;
    case GraphDirCase::BdPolar:
      f.kind = CoderivFamily::Kind::CFamilyPlusB;
      break;
  }
  return f;
}

namespace {

MembershipResult in_result(const Eigen::VectorXd& w, double alpha, double t, double residual) {
  MembershipResult r;
  r.verdict = MembershipResult::Verdict::In;
  r.w = w;
  r.alpha = alpha;
  r.t = t;
  r.residual = residual;
  return r;
}

// Exact C-family membership for dim 2, where w ranges over {-1, +1} and
// alpha cancels out of C(w, alpha).
std::optional<MembershipResult> c_family_dim2(const CoderivFamily& f, const Eigen::VectorXd& ustar,
                                              const Eigen::VectorXd& y, double tol) {
  for (const double w : {-1.0, 1.0}) {
    Eigen::VectorXd wv(1);
    wv << w;
    const double res = (c_matrix(f.spec, wv, 0.0) * ustar - y).norm();
    if (res <= tol) return in_result(wv, 0.0, 0.0, res);
  }
  return std::nullopt;
}

// Membership in conv{ustar, M ustar} for a fixed matrix: solve for the convex
// weight by least squares on the segment.
std::optional<double> segment_weight(const Eigen::VectorXd& ustar, const Eigen::VectorXd& mu,
                                     const Eigen::VectorXd& y, double tol) {
  const Eigen::VectorXd dir = mu - ustar;
  const double denom = dir.squaredNorm();
  double t = 0.0;
  if (denom > tol * tol) t = dir.dot(y - ustar) / denom;
  t = std::clamp(t, 0.0, 1.0);
  const double res = (ustar + t * dir - y).norm();
  if (res <= tol) return t;
  return std::nullopt;
}

Eigen::VectorXd sphere_sample(int m, int index, int total, std::mt19937_64& rng) {
  if (m == 1) return Eigen::VectorXd::Constant(1, index % 2 == 0 ? 1.0 : -1.0);
  if (m == 2) {
    const double theta = 2.0 * M_PI * index / total;
    Eigen::VectorXd w(2);
    w << std::cos(theta), std::sin(theta);
    return w;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w(i) = gauss(rng);
  const double nrm = w.norm();
  return nrm > 0 ? Eigen::VectorXd(w / nrm) : sphere_sample(m, index + 1, total, rng);
}

MembershipResult sampled_c_family(const CoderivFamily& f, const Eigen::VectorXd& ustar,
                                  const Eigen::VectorXd& y, const MembershipOptions& opts) {
  // Necessary condition: every C(w,alpha) maps (w,1) to itself and satisfies
  // <ybar, w> = y0, hence |y0| <= ||ybar|| on the family image.
  const double y0 = z0_part(f.spec, y);
  const Eigen::VectorXd ybar = bar_part(f.spec, y);
  MembershipResult out;
  if (std::abs(y0) > ybar.norm() + opts.tol || y.norm() > ustar.norm() + opts.tol) {
    out.verdict = MembershipResult::Verdict::Out;
    return out;
  }
  std::mt19937_64 rng(opts.seed);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_w;
  double best_alpha = 0.0;
  const int m = f.spec.dim - 1;
  for (int i = 0; i < opts.sphere_samples; ++i) {
    const Eigen::VectorXd w = sphere_sample(m, i, opts.sphere_samples, rng);
    for (int a = 0; a < opts.alpha_samples; ++a) {
      const double alpha = static_cast<double>(a) / (opts.alpha_samples - 1);
      const double res = (c_matrix(f.spec, w, alpha) * ustar - y).norm();
      if (res < best) {
        best = res;
        best_w = w;
        best_alpha = alpha;
      }
    }
  }
  // Local refinement around the best sample.
  std::normal_distribution<double> gauss(0.0, 1.0);
  double step = 0.1;
  for (int it = 0; it < opts.refine_steps; ++it) {
    Eigen::VectorXd w = best_w;
    for (int i = 0; i < m; ++i) w(i) += step * gauss(rng);
    w.normalize();
    const double alpha = std::clamp(best_alpha + step * gauss(rng), 0.0, 1.0);
    const double res = (c_matrix(f.spec, w, alpha) * ustar - y).norm();
    if (res < best) {
      best = res;
      best_w = w;
      best_alpha = alpha;
    }
    step *= 0.98;
  }
  if (best <= opts.tol) return in_result(best_w, best_alpha, 0.0, best);
  out.verdict = MembershipResult::Verdict::Undecided;
  out.residual = best;
  return out;
}

}  // namespace

MembershipResult family_membership(const CoderivFamily& f, const Eigen::VectorXd& ustar,
                                   const Eigen::VectorXd& y, const MembershipOptions& opts) {
  const double tol = opts.tol * std::max(1.0, ustar.norm());
  MembershipResult out;
  switch (f.kind) {
    case CoderivFamily::Kind::Identity:
      if ((y - ustar).norm() <= tol) return in_result(Eigen::VectorXd(), 0.0, 0.0, (y - ustar).norm());
      out.verdict = MembershipResult::Verdict::Out;
      return out;
    case CoderivFamily::Kind::Zero:
      if (y.norm() <= tol) return in_result(Eigen::VectorXd(), 0.0, 0.0, y.norm());
      out.verdict = MembershipResult::Verdict::Out;
      return out;
    case CoderivFamily::Kind::CFamily:
      if (f.spec.dim == 2) {
        if (auto r = c_family_dim2(f, ustar, y, tol)) return *r;
        out.verdict = MembershipResult::Verdict::Out;
        return out;
      }
      return sampled_c_family(f, ustar, y, opts);
    case CoderivFamily::Kind::CFamilyPlusA:
    case CoderivFamily::Kind::CFamilyPlusB: {
      const bool use_a = f.kind == CoderivFamily::Kind::CFamilyPlusA;
      if (f.spec.dim == 2) {
        if (auto r = c_family_dim2(f, ustar, y, tol)) return *r;
        for (const double w : {-1.0, 1.0}) {
          Eigen::VectorXd wv(1);
          wv << w;
          const bool ok = use_a ? a_admissible(f.spec, wv, ustar) : b_admissible(f.spec, wv, ustar);
          if (!ok) continue;
          const Eigen::MatrixXd M = use_a ? a_matrix(f.spec, wv) : b_matrix(f.spec, wv);
          if (auto t = segment_weight(ustar, M * ustar, y, tol)) {
            auto r = in_result(wv, 0.0, *t, 0.0);
            return r;
          }
        }
        out.verdict = MembershipResult::Verdict::Out;
        return out;
      }
      // Sampled search over the C part, then the segment part.
      MembershipResult c = sampled_c_family(f, ustar, y, opts);
      if (c.verdict == MembershipResult::Verdict::In) return c;
      std::mt19937_64 rng(opts.seed + 1);
      const int m = f.spec.dim - 1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < opts.sphere_samples; ++i) {
        const Eigen::VectorXd w = sphere_sample(m, i, opts.sphere_samples, rng);
        const bool ok = use_a ? a_admissible(f.spec, w, ustar) : b_admissible(f.spec, w, ustar);
        if (!ok) continue;
        const Eigen::MatrixXd M = use_a ? a_matrix(f.spec, w) : b_matrix(f.spec, w);
        if (auto t = segment_weight(ustar, M * ustar, y, tol)) return in_result(w, 0.0, *t, 0.0);
        const Eigen::VectorXd dir = M * ustar - ustar;
        const double denom = dir.squaredNorm();
        const double t = denom > 0 ? std::clamp(dir.dot(y - ustar) / denom, 0.0, 1.0) : 0.0;
        best = std::min(best, (ustar + t * dir - y).norm());
      }
      out.verdict = MembershipResult::Verdict::Undecided;
      out.residual = std::min(best, c.residual);
      return out;
    }
  }
  return out;
}

ProjectionQuery convert_projection_normal(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                          const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  ProjectionQuery out;
  out.base_point = a + b;
  out.base_value = a;
  out.input = -q - p;
  out.output = -q;
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> convert_direction(const Eigen::VectorXd& v,
                                                              const Eigen::VectorXd& xi) {
  return {v + xi, v};
}

std::optional<bool> regular_ncone_coderiv_contains(const LorentzSpec& spec, const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& lambda,
                                                   const Eigen::VectorXd& input,
                                                   const Eigen::VectorXd& candidate, double tol) {
  const double zn = z.norm();
  const double ln = lambda.norm();
  if (zn <= tol && ln <= tol) {
    // Apex: the regular normal cone to the graph is polar(K) x K.
    return in_polar(spec, candidate, tol) && in_cone(spec, -input, tol);
  }
  if (eig_low(spec, z) > tol * std::max(1.0, zn)) {
    // Interior point: the constraint is locally inactive, the value is {0}.
    return candidate.norm() <= tol;
  }
  if (zn <= tol && eig_high(spec, lambda) < -tol * std::max(1.0, ln)) {
    // lambda in the polar interior: the graph is locally {0} x R^s, so the
    // candidate is unconstrained but the input must vanish.
    return input.norm() <= tol;
  }
  return std::nullopt;  // boundary positions go through the reduction instead
}

}  // namespace aubin::lorentz
