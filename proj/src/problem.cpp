// SPDX-License-Identifier: Apache-2.0
#include "aubin/problem.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace aubin {

using nlohmann::json;

ConeSpec ConeSpec::orthant(int s) {
  ConeSpec c;
  c.type = Type::OrthantNonpositive;
  c.dim = s;
  c.validate();
  return c;
}

ConeSpec ConeSpec::lorentz(std::vector<int> blocks, Axis axis) {
  ConeSpec c;
  c.type = Type::LorentzProduct;
  c.blocks = std::move(blocks);
  c.axis = axis;
  c.dim = 0;
  for (int b : c.blocks) c.dim += b;
  c.validate();
  return c;
}

ConeSpec ConeSpec::hrep(Eigen::MatrixXd rows) {
  ConeSpec c;
  c.type = Type::PolyhedralHRep;
  c.rows = std::move(rows);
  c.dim = static_cast<int>(c.rows.cols());
  c.validate();
  return c;
}

void ConeSpec::validate() const {
  if (dim < 1) throw ProblemError("cone dimension must be >= 1");
  if (type == Type::LorentzProduct) {
    if (blocks.empty()) throw ProblemError("lorentz_product needs at least one block");
    int total = 0;
    for (int b : blocks) {
      if (b < 1) throw ProblemError("lorentz block dims must be >= 1");
      total += b;
    }
    if (total != dim) throw ProblemError("lorentz block dims do not sum to cone dim");
  }
  if (type == Type::PolyhedralHRep) {
    if (rows.rows() == 0 || rows.cols() != dim)
      throw ProblemError("polyhedral_hrep rows must be nonempty with cone dim columns");
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      if (!rows.row(i).allFinite() || rows.row(i).norm() == 0.0)
        throw ProblemError("polyhedral_hrep rows must be finite and nonzero");
    }
  }
}

std::optional<Eigen::MatrixXd> ConeSpec::polyhedral_rows() const {
  switch (type) {
    case Type::OrthantNonpositive:
      return Eigen::MatrixXd::Identity(dim, dim);
    case Type::PolyhedralHRep:
      return rows;
    case Type::LorentzProduct: {
      for (int b : blocks)
        if (b > 2) return std::nullopt;
      // dim-1 block: K = R+, row -z0 <= 0. dim-2 block with coordinates
      // (zbar, z0): z0 >= |zbar| becomes zbar - z0 <= 0 and -zbar - z0 <= 0.
      int nrows = 0;
      for (int b : blocks) nrows += (b == 1 ? 1 : 2);
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nrows, dim);
      int r = 0, off = 0;
      for (int b : blocks) {
        if (b == 1) {
          A(r++, off) = -1.0;
        } else {
          const int i0 = off + (axis == Axis::First ? 0 : 1);   // z0
          const int ib = off + (axis == Axis::First ? 1 : 0);   // zbar
          A(r, ib) = 1.0;
          A(r++, i0) = -1.0;
          A(r, ib) = -1.0;
          A(r++, i0) = -1.0;
        }
        off += b;
      }
      return A;
    }
  }
  return std::nullopt;
}

std::vector<std::string> ProblemSpec::hp_symbols() const {
  std::vector<std::string> sym = parameters;
  sym.insert(sym.end(), variables.begin(), variables.end());
  return sym;
}

void ProblemSpec::validate() const {
  cone.validate();
  if (H.size() != variables.size())
    throw ProblemError("H must have one component per decision variable");
  if (static_cast<int>(g.size()) != cone.dim)
    throw ProblemError("g must have one component per cone dimension");
  if (p_ref.size() != l() || x_ref.size() != n())
    throw ProblemError("reference point dimensions do not match declarations");
  for (const auto& gi : g)
    for (const auto& id : gi.free_identifiers())
      if (std::find(variables.begin(), variables.end(), id) == variables.end())
        throw ProblemError("g may depend on decision variables only, found '" + id + "'");
}

Eigen::VectorXd ProblemSpec::eval_H(const Eigen::VectorXd& p, const Eigen::VectorXd& x) const {
  std::vector<double> vals(static_cast<std::size_t>(l() + n()));
  for (int i = 0; i < l(); ++i) vals[static_cast<std::size_t>(i)] = p(i);
  for (int i = 0; i < n(); ++i) vals[static_cast<std::size_t>(l() + i)] = x(i);
  Eigen::VectorXd out(n());
  for (int i = 0; i < n(); ++i) out(i) = H[static_cast<std::size_t>(i)].eval(vals);
  return out;
}

Eigen::VectorXd ProblemSpec::eval_g(const Eigen::VectorXd& x) const {
  std::vector<double> vals(static_cast<std::size_t>(x.size()));
  for (int i = 0; i < x.size(); ++i) vals[static_cast<std::size_t>(i)] = x(i);
  Eigen::VectorXd out(s());
  for (int i = 0; i < s(); ++i) out(i) = g[static_cast<std::size_t>(i)].eval(vals);
  return out;
}

namespace {

ConeSpec cone_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "orthant_nonpositive") return ConeSpec::orthant(j.at("dim").get<int>());
  if (type == "lorentz_product") {
    const auto blocks = j.at("blocks").get<std::vector<int>>();
    const std::string axis = j.value("axis", "last");
    if (axis != "first" && axis != "last") throw ProblemError("lorentz axis must be 'first' or 'last'");
    return ConeSpec::lorentz(blocks, axis == "first" ? ConeSpec::Axis::First : ConeSpec::Axis::Last);
  }
  if (type == "polyhedral_hrep") {
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ProblemError("polyhedral_hrep needs rows");
    Eigen::MatrixXd A(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) throw ProblemError("ragged polyhedral_hrep rows");
      for (std::size_t k = 0; k < rows[i].size(); ++k) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return ConeSpec::hrep(A);
  }
  throw ProblemError("unknown cone type '" + type + "'");
}

json cone_to_json(const ConeSpec& c) {
  json j;
  switch (c.type) {
    case ConeSpec::Type::OrthantNonpositive:
      j["type"] = "orthant_nonpositive";
      j["dim"] = c.dim;
      break;
    case ConeSpec::Type::LorentzProduct:
      j["type"] = "lorentz_product";
      j["blocks"] = c.blocks;
      j["axis"] = (c.axis == ConeSpec::Axis::First ? "first" : "last");
      break;
    case ConeSpec::Type::PolyhedralHRep: {
      j["type"] = "polyhedral_hrep";
      std::vector<std::vector<double>> rows;
      for (Eigen::Index i = 0; i < c.rows.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(c.rows.cols()));
        for (Eigen::Index k = 0; k < c.rows.cols(); ++k) r[static_cast<std::size_t>(k)] = c.rows(i, k);
        rows.push_back(std::move(r));
      }
      j["rows"] = rows;
      break;
    }
  }
  return j;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace

ProblemSpec problem_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProblemError(std::string("problem file is not valid JSON: ") + e.what());
  }
  try {
    ProblemSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.parameters = j.at("parameters").get<std::vector<std::string>>();
    spec.variables = j.at("variables").get<std::vector<std::string>>();
    spec.cone = cone_from_json(j.at("cone"));
    const auto hp = spec.hp_symbols();
    for (const auto& htext : j.at("H").get<std::vector<std::string>>())
      spec.H.push_back(parse_expr(htext, hp));
    for (const auto& gtext : j.at("g").get<std::vector<std::string>>())
      spec.g.push_back(parse_expr(gtext, spec.variables));
    spec.p_ref = vector_from_json(j.at("reference").at("p"));
    spec.x_ref = vector_from_json(j.at("reference").at("x"));
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ProblemError(std::string("malformed problem file: ") + e.what());
  }
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return problem_from_json_text(ss.str());
}

std::string problem_to_json_text(const ProblemSpec& spec,
                                 const std::vector<std::string>& H_text,
                                 const std::vector<std::string>& g_text) {
  json j;
  j["name"] = spec.name;
  j["parameters"] = spec.parameters;
  j["variables"] = spec.variables;
  j["H"] = H_text;
  j["g"] = g_text;
  j["cone"] = cone_to_json(spec.cone);
  j["reference"]["p"] = std::vector<double>(spec.p_ref.data(), spec.p_ref.data() + spec.p_ref.size());
  j["reference"]["x"] = std::vector<double>(spec.x_ref.data(), spec.x_ref.data() + spec.x_ref.size());
  return j.dump(2);
}

}  // namespace aubin
