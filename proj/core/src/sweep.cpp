#include "qstrat/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

constexpr double kRowGapTolerance = 1e-6;

const std::vector<std::string>& sweep_params() {
  static const std::vector<std::string> names = {"noise", "gamma", "noise_a", "noise_b", "gamma_a", "gamma_b"};
  return names;
}

double parse_csv_real(std::string_view s, std::size_t line_offset) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected a real, got '" + std::string(s) + "'", line_offset);
  }
  return v;
}

int parse_csv_int(std::string_view s, std::size_t line_offset) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected an integer, got '" + std::string(s) + "'", line_offset);
  }
  return v;
}

// Rounds to what the CSV stores, so fresh rows equal rows read back.
double as_stored(double v) { return parse_csv_real(format_csv_real(v), 0); }

double scaled_gap(Quantity q, double primal, double dual) {
  const double a = reported_value(q, primal);
  const double b = reported_value(q, dual);
  if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
  return std::abs(a - b);
}

void apply_solver_overrides(const Json& j, SolverOptions& o) {
  if (!j.is_object()) throw ParseError("'solver' must be an object", 0);
  for (const auto& [k, v] : j.items()) {
    if (k == "gap_tol") {
      o.gap_tol = number_from_json(v);
    } else if (k == "feas_tol") {
      o.feas_tol = number_from_json(v);
    } else if (k == "max_iters") {
      o.max_iters = v.get<int>();
    } else if (k == "step_fraction") {
      o.step_fraction = number_from_json(v);
    } else {
      throw ParseError("unknown solver option '" + k + "'", 0);
    }
  }
}

struct Cell {
  double x;
  int n;
  Mode mode;
  Quantity quantity;
};

void set_param(const std::string& which, double x, GadcParams& a, GadcParams& b) {
  if (which == "noise" || which == "noise_a") a.noise = x;
  if (which == "noise" || which == "noise_b") b.noise = x;
  if (which == "gamma" || which == "gamma_a") a.gamma = x;
  if (which == "gamma" || which == "gamma_b") b.gamma = x;
}

}  // namespace

void SweepConfig::validate() const {
  const auto a = parse_channel_spec(channel_a);
  const auto b = parse_channel_spec(channel_b);
  if (a.kind != ChannelSpec::Kind::gadc || b.kind != ChannelSpec::Kind::gadc) {
    throw DomainError("sweeps vary GADC parameters; both channels must be gadc specs");
  }
  if (n_values.empty()) throw DomainError("n_values is empty");
  for (int n : n_values) {
    if (n < 1) throw DomainError("n_values entries must be >= 1");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  if (std::find(sweep_params().begin(), sweep_params().end(), sweep_param) == sweep_params().end()) {
    throw DomainError("unknown sweep_param '" + sweep_param + "'");
  }
  if (grid.empty()) throw DomainError("grid is empty");
  for (double x : grid) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("grid values must lie in [0, 1]");
  }
  if (quantities.empty()) throw DomainError("quantities is empty");
  if (modes.empty()) throw DomainError("modes is empty");
  if (output_path.empty()) throw DomainError("output_path is empty");
  solver.validate();
}

SweepConfig sweep_config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("sweep config must be a JSON object", 0);
  static const std::set<std::string> known = {"channel_a", "channel_b", "n_values",    "epsilon", "sweep_param",
                                              "grid",      "quantities", "modes",      "output_path", "solver"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ParseError("unknown sweep config field '" + k + "'", 0);
  }
  SweepConfig c;
  try {
    c.channel_a = j.at("channel_a").get<std::string>();
    c.channel_b = j.at("channel_b").get<std::string>();
    c.n_values = j.at("n_values").get<std::vector<int>>();
    if (j.contains("epsilon")) c.epsilon = number_from_json(j["epsilon"]);
    if (j.contains("sweep_param")) c.sweep_param = j["sweep_param"].get<std::string>();
    for (const auto& x : j.at("grid")) c.grid.push_back(number_from_json(x));
    for (const auto& q : j.at("quantities")) c.quantities.push_back(quantity_from_string(q.get<std::string>()));
    for (const auto& m : j.at("modes")) c.modes.push_back(mode_from_string(m.get<std::string>()));
    c.output_path = j.at("output_path").get<std::string>();
    if (j.contains("solver")) apply_solver_overrides(j["solver"], c.solver);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("sweep config: ") + e.what(), 0);
  }
  return c;
}

Json sweep_config_to_json(const SweepConfig& c) {
  Json grid = Json::array();
  for (double x : c.grid) grid.push_back(number_to_json(x));
  Json qs = Json::array();
  for (auto q : c.quantities) qs.push_back(to_string(q));
  Json ms = Json::array();
  for (auto m : c.modes) ms.push_back(to_string(m));
  return {{"channel_a", c.channel_a},
          {"channel_b", c.channel_b},
          {"n_values", c.n_values},
          {"epsilon", number_to_json(c.epsilon)},
          {"sweep_param", c.sweep_param},
          {"grid", grid},
          {"quantities", qs},
          {"modes", ms},
          {"output_path", c.output_path},
          {"solver",
           {{"gap_tol", c.solver.gap_tol},
            {"feas_tol", c.solver.feas_tol},
            {"max_iters", c.solver.max_iters},
            {"step_fraction", c.solver.step_fraction}}}};
}

std::string ResultRow::key() const {
  return format_csv_real(gamma1) + ',' + format_csv_real(noise1) + ',' + format_csv_real(gamma2) + ',' +
         format_csv_real(noise2) + ',' + std::to_string(n) + ',' + format_csv_real(epsilon) + ',' + mode + ',' +
         quantity;
}

std::string format_csv_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string emit_csv_row(const ResultRow& r) {
  return r.key() + ',' + format_csv_real(r.value) + ',' + format_csv_real(r.gap) + ',' +
         std::to_string(r.iterations) + ',' + r.status;
}

std::string emit_csv(std::vector<ResultRow> rows) {
  sort_rows(rows);
  std::string out = std::string(kCsvHeader) + '\n';
  for (const auto& r : rows) out += emit_csv_row(r) + '\n';
  return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t at = pos;
    pos = end + 1;
    if (header) {
      if (line != kCsvHeader) throw ParseError("CSV header does not match the result schema", at);
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t s = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(s, i - s));
        s = i + 1;
      }
    }
    if (f.size() != 12) throw ParseError("expected 12 columns, got " + std::to_string(f.size()), at);
    ResultRow r;
    r.gamma1 = parse_csv_real(f[0], at);
    r.noise1 = parse_csv_real(f[1], at);
    r.gamma2 = parse_csv_real(f[2], at);
    r.noise2 = parse_csv_real(f[3], at);
    r.n = parse_csv_int(f[4], at);
    r.epsilon = parse_csv_real(f[5], at);
    r.mode = f[6];
    r.quantity = f[7];
    r.value = parse_csv_real(f[8], at);
    r.gap = parse_csv_real(f[9], at);
    r.iterations = parse_csv_int(f[10], at);
    r.status = f[11];
    rows.push_back(std::move(r));
  }
  if (header) throw ParseError("CSV is empty", 0);
  return rows;
}

std::vector<ResultRow> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void sort_rows(std::vector<ResultRow>& rows) {
  auto key = [](const ResultRow& r) {
    return std::tie(r.quantity, r.mode, r.n, r.epsilon, r.gamma1, r.noise1, r.gamma2, r.noise2);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
}

ResultRow evaluate_cell(const ChannelSpec& a, const ChannelSpec& b, int n, double epsilon, Mode mode, Quantity q,
                        const EvaluateOptions& o) {
  ResultRow row;
  if (a.kind == ChannelSpec::Kind::gadc) {
    row.gamma1 = as_stored(a.gadc.gamma);
    row.noise1 = as_stored(a.gadc.noise);
  }
  if (b.kind == ChannelSpec::Kind::gadc) {
    row.gamma2 = as_stored(b.gadc.gamma);
    row.noise2 = as_stored(b.gadc.noise);
  }
  row.n = n;
  row.epsilon = as_stored(epsilon);
  row.mode = to_string(mode);
  row.quantity = to_string(q);

  const auto sn = n_fold_sequential_choi(a.build(), static_cast<std::size_t>(n));
  const auto sm = n_fold_sequential_choi(b.build(), static_cast<std::size_t>(n));
  QuantityResult r;
  try {
    r = evaluate(q, sn, sm, epsilon, mode, o);
    row.status = "optimal";
  } catch (const SolveError& e) {
    r = e.partial();
    if (!solved(r.solver.status)) {
      row.status = to_string(r.solver.status);
    } else if (r.dual_solver && !solved(r.dual_solver->status)) {
      row.status = to_string(r.dual_solver->status);
    } else {
      row.status = "gap_exceeded";
    }
  } catch (const Error&) {
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.primal_value = r.dual_value = r.value;
    row.status = "error";
  }
  row.value = as_stored(r.value);
  row.gap = std::isinf(r.value) ? r.value : as_stored(scaled_gap(q, r.primal_value, r.dual_value));
  row.iterations = r.total_iterations();
  if (row.status == "optimal" && !(row.gap <= kRowGapTolerance * (1.0 + std::abs(row.value)))) {
    row.status = "gap_exceeded";
  }
  return row;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<ResultRow> run_sweep(const SweepConfig& c, const SweepOptions& o) {
  c.validate();
  const auto base_a = parse_channel_spec(c.channel_a);
  const auto base_b = parse_channel_spec(c.channel_b);

  std::vector<ResultRow> existing;
  if (o.resume && std::filesystem::exists(c.output_path)) existing = read_csv_file(c.output_path);
  std::set<std::string> done;
  for (const auto& r : existing) done.insert(r.key());

  EvaluateOptions eo;
  eo.solver = c.solver;

  // Enumerate cells, skipping those already stored and duplicates.
  std::vector<Cell> cells;
  for (auto q : c.quantities) {
    for (auto m : c.modes) {
      for (int n : c.n_values) {
        for (double x : c.grid) {
          GadcParams pa = base_a.gadc;
          GadcParams pb = base_b.gadc;
          set_param(c.sweep_param, x, pa, pb);
          ResultRow probe;
          probe.gamma1 = as_stored(pa.gamma);
          probe.noise1 = as_stored(pa.noise);
          probe.gamma2 = as_stored(pb.gamma);
          probe.noise2 = as_stored(pb.noise);
          probe.n = n;
          probe.epsilon = as_stored(c.epsilon);
          probe.mode = to_string(m);
          probe.quantity = to_string(q);
          if (done.insert(probe.key()).second) cells.push_back({x, n, m, q});
        }
      }
    }
  }

  if (existing.empty()) {
    const auto parent = std::filesystem::path(c.output_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_file_atomic(c.output_path, std::string(kCsvHeader) + '\n');
  }

  std::vector<ResultRow> fresh(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex writer;
  std::size_t finished = 0;
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      ChannelSpec a = base_a;
      ChannelSpec b = base_b;
      set_param(c.sweep_param, cell.x, a.gadc, b.gadc);
      ResultRow row = evaluate_cell(a, b, cell.n, c.epsilon, cell.mode, cell.quantity, eo);
      std::lock_guard lock(writer);
      std::ofstream out(c.output_path, std::ios::binary | std::ios::app);
      out << emit_csv_row(row) << '\n';
      fresh[i] = std::move(row);
      ++finished;
      if (o.progress) o.progress(fresh[i], finished, cells.size());
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(cells.size())));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work);
  }

  std::vector<ResultRow> all = existing;
  all.insert(all.end(), fresh.begin(), fresh.end());
  write_file_atomic(c.output_path, emit_csv(std::move(all)));
  return fresh;
}

}  // namespace qstrat
