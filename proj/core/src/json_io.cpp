#include "qstrat/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

using Index = Eigen::Index;

std::string format_number(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write(const Json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(k).dump();
        out += indent < 0 ? ":" : ": ";
        write(v, indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        write(v, indent, depth + 1, out);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      out += format_number(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected an object holding '") + key + "'", 0);
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", 0);
  return *it;
}

template <class T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what(), 0);
  }
}

double get_number(const Json& j, const char* key) { return number_from_json(field(j, key)); }

Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v(i)));
  return a;
}

Eigen::VectorXd vector_from_json(const Json& a) {
  if (!a.is_array()) throw ParseError("expected an array of numbers", 0);
  Eigen::VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = number_from_json(a[i]);
  return v;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) a.push_back(number_to_json(m(r, c)));
  }
  return a;
}

Eigen::MatrixXd square_from_json(const Json& a, std::size_t side) {
  const auto s = static_cast<Index>(side);
  const Eigen::VectorXd v = vector_from_json(a);
  if (v.size() != s * s) throw ParseError("block entry count does not match its side", 0);
  Eigen::MatrixXd m(s, s);
  for (Index r = 0; r < s; ++r) {
    for (Index c = 0; c < s; ++c) m(r, c) = v(r * s + c);
  }
  return m;
}

Json conic_to_json(const ConicVector& x) {
  Json psd = Json::array();
  for (const auto& b : x.psd) psd.push_back(matrix_to_json(b));
  return {{"psd", psd}, {"nonneg", vector_to_json(x.nonneg)}, {"free", vector_to_json(x.free)}};
}

ConicVector conic_from_json(const Json& j, const std::vector<std::size_t>& sides) {
  ConicVector x;
  const Json& psd = field(j, "psd");
  if (!psd.is_array()) throw ParseError("'psd' must be an array", 0);
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const std::size_t side = k < sides.size()
                                 ? sides[k]
                                 : static_cast<std::size_t>(std::llround(std::sqrt(double(psd[k].size()))));
    x.psd.push_back(square_from_json(psd[k], side));
  }
  x.nonneg = vector_from_json(field(j, "nonneg"));
  x.free = vector_from_json(field(j, "free"));
  return x;
}

Json system_to_json(const SystemLabel& s) { return {{"name", s.name}, {"dim", s.dim}}; }

SystemLabel system_from_json(const Json& j) {
  const auto dim = get<long long>(j, "dim");
  if (dim < 1) throw ParseError("system dimension must be >= 1", 0);
  return {get<std::string>(j, "name"), static_cast<std::size_t>(dim)};
}

Json group_to_json(const SystemList& g) {
  if (g.size() == 1) return system_to_json(g[0]);
  Json a = Json::array();
  for (const auto& s : g) a.push_back(system_to_json(s));
  return a;
}

SystemList group_from_json(const Json& j) {
  if (j.is_object()) return {system_from_json(j)};
  if (!j.is_array()) throw ParseError("a round group must be a system or an array of systems", 0);
  SystemList g;
  for (const auto& s : j) g.push_back(system_from_json(s));
  return g;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  write(j, indent, 0, out);
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

Json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError("expected a number, got " + j.dump(), 0);
}

Json operator_to_json(const LabeledOperator& op) {
  Json systems = Json::array();
  for (const auto& s : op.systems()) systems.push_back(system_to_json(s));
  Json re = Json::array();
  Json im = Json::array();
  const CMatrix& m = op.matrix();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      re.push_back(number_to_json(m(r, c).real()));
      im.push_back(number_to_json(m(r, c).imag()));
    }
  }
  return {{"systems", systems}, {"re", re}, {"im", im}};
}

LabeledOperator operator_from_json(const Json& j) {
  const Json& sj = field(j, "systems");
  if (!sj.is_array()) throw ParseError("'systems' must be an array", 0);
  SystemList systems;
  for (const auto& s : sj) systems.push_back(system_from_json(s));
  const auto d = static_cast<Index>(total_dim(systems));
  const Eigen::VectorXd re = vector_from_json(field(j, "re"));
  const Eigen::VectorXd im = vector_from_json(field(j, "im"));
  if (re.size() != d * d || im.size() != d * d) {
    throw ParseError("operator needs " + std::to_string(d * d) + " entries in 're' and 'im'", 0);
  }
  CMatrix m(d, d);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) m(r, c) = Complex(re(r * d + c), im(r * d + c));
  }
  return LabeledOperator(std::move(systems), std::move(m));
}

Json strategy_to_json(const StrategyChoi& s) {
  Json inputs = Json::array();
  Json outputs = Json::array();
  for (const auto& g : s.rounds.inputs) inputs.push_back(group_to_json(g));
  for (const auto& g : s.rounds.outputs) outputs.push_back(group_to_json(g));
  Json rounds = {{"n", s.rounds.n()}, {"inputs", inputs}, {"outputs", outputs}};
  return {{"rounds", rounds}, {"op", operator_to_json(s.op)}};
}

StrategyChoi strategy_from_json(const Json& j) {
  const Json& rj = field(j, "rounds");
  RoundStructure r;
  const Json& in = field(rj, "inputs");
  const Json& out = field(rj, "outputs");
  if (!in.is_array() || !out.is_array()) throw ParseError("'inputs' and 'outputs' must be arrays", 0);
  for (const auto& g : in) r.inputs.push_back(group_from_json(g));
  for (const auto& g : out) r.outputs.push_back(group_from_json(g));
  const auto n = get<long long>(rj, "n");
  if (n < 0 || static_cast<std::size_t>(n) != r.n() || r.outputs.size() != r.n()) {
    throw ParseError("'n' disagrees with the number of round groups", 0);
  }
  return StrategyChoi(std::move(r), operator_from_json(field(j, "op")));
}

Json report_to_json(const SolveReport& r, bool include_solution) {
  Json j = {{"status", to_string(r.status)},
            {"primal_value", number_to_json(r.primal_value)},
            {"dual_value", number_to_json(r.dual_value)},
            {"gap", number_to_json(r.gap)},
            {"primal_residual", number_to_json(r.primal_residual)},
            {"dual_residual", number_to_json(r.dual_residual)},
            {"iterations", r.iterations},
            {"message", r.message}};
  if (include_solution) {
    j["x"] = conic_to_json(r.x);
    j["y"] = vector_to_json(r.y);
    j["z"] = conic_to_json(r.z);
  }
  return j;
}

SolveReport report_from_json(const Json& j) {
  SolveReport r;
  try {
    r.status = solve_status_from_string(get<std::string>(j, "status"));
  } catch (const DomainError& e) {
    throw ParseError(e.what(), 0);
  }
  r.primal_value = get_number(j, "primal_value");
  r.dual_value = get_number(j, "dual_value");
  r.gap = get_number(j, "gap");
  r.primal_residual = get_number(j, "primal_residual");
  r.dual_residual = get_number(j, "dual_residual");
  r.iterations = get<int>(j, "iterations");
  if (j.contains("message")) r.message = get<std::string>(j, "message");
  if (j.contains("x")) {
    r.x = conic_from_json(j["x"], {});
    r.y = vector_from_json(field(j, "y"));
    r.z = conic_from_json(field(j, "z"), {});
  }
  return r;
}

Json result_to_json(const QuantityResult& r) {
  Json j = {{"value", number_to_json(r.value)},
            {"primal_value", number_to_json(r.primal_value)},
            {"dual_value", number_to_json(r.dual_value)},
            {"gap", number_to_json(r.gap)},
            {"solver", report_to_json(r.solver)},
            {"mode", to_string(r.mode)},
            {"quantity", to_string(r.quantity)},
            {"epsilon", number_to_json(r.epsilon)}};
  if (r.dual_solver) j["dual_solver"] = report_to_json(*r.dual_solver);
  return j;
}

QuantityResult result_from_json(const Json& j) {
  QuantityResult r;
  r.value = get_number(j, "value");
  r.primal_value = get_number(j, "primal_value");
  r.dual_value = get_number(j, "dual_value");
  r.gap = get_number(j, "gap");
  r.solver = report_from_json(field(j, "solver"));
  if (j.contains("dual_solver")) r.dual_solver = report_from_json(j["dual_solver"]);
  r.mode = mode_from_string(get<std::string>(j, "mode"));
  r.quantity = quantity_from_string(get<std::string>(j, "quantity"));
  r.epsilon = get_number(j, "epsilon");
  return r;
}

Json standard_sdp_to_json(const StandardSdp& p) {
  Json rows = Json::array();
  for (const auto& row : p.rows) {
    Json psd = Json::array();
    for (const auto& e : row.psd) psd.push_back(Json::array({e.block, e.row, e.col, number_to_json(e.value)}));
    Json nonneg = Json::array();
    for (const auto& e : row.nonneg) nonneg.push_back(Json::array({e.index, number_to_json(e.value)}));
    Json free = Json::array();
    for (const auto& e : row.free) free.push_back(Json::array({e.index, number_to_json(e.value)}));
    rows.push_back({{"psd", psd}, {"nonneg", nonneg}, {"free", free}});
  }
  return {{"psd_sides", p.psd_sides},
          {"nonneg_count", p.nonneg_count},
          {"free_count", p.free_count},
          {"c", conic_to_json(p.c)},
          {"rows", rows},
          {"b", vector_to_json(p.b)}};
}

StandardSdp standard_sdp_from_json(const Json& j) {
  StandardSdp p;
  p.psd_sides = get<std::vector<std::size_t>>(j, "psd_sides");
  p.nonneg_count = get<std::size_t>(j, "nonneg_count");
  p.free_count = get<std::size_t>(j, "free_count");
  p.c = conic_from_json(field(j, "c"), p.psd_sides);
  const Json& rows = field(j, "rows");
  if (!rows.is_array()) throw ParseError("'rows' must be an array", 0);
  try {
    for (const auto& rj : rows) {
      ConstraintRow row;
      for (const auto& e : field(rj, "psd")) {
        row.psd.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>(), e.at(2).get<std::uint32_t>(),
                           number_from_json(e.at(3))});
      }
      for (const auto& e : field(rj, "nonneg")) {
        row.nonneg.push_back({e.at(0).get<std::uint32_t>(), number_from_json(e.at(1))});
      }
      for (const auto& e : field(rj, "free")) {
        row.free.push_back({e.at(0).get<std::uint32_t>(), number_from_json(e.at(1))});
      }
      p.rows.push_back(std::move(row));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed constraint entry: ") + e.what(), 0);
  }
  p.b = vector_from_json(field(j, "b"));
  p.validate();
  return p;
}

}  // namespace qstrat
