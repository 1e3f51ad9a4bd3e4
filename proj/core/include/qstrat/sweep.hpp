#pragma once

// Parameter sweeps over GADC pairs with CSV persistence.
//
// A sweep evaluates every (grid point, n, mode, quantity) cell.  Rows are
// appended to the CSV as cells finish; when the sweep ends the file is
// rewritten sorted by key, so identical configurations give identical files
// regardless of completion order.  With resume set, cells whose key columns
// already appear in the CSV are not evaluated again.

#include <functional>
#include <string>
#include <vector>

#include "qstrat/channel_spec.hpp"
#include "qstrat/json_io.hpp"
#include "qstrat/programs.hpp"

namespace qstrat {

struct SweepConfig {
  std::string channel_a;
  std::string channel_b;
  std::vector<int> n_values;
  double epsilon = 0.05;
  /// noise | gamma (both channels) or noise_a, noise_b, gamma_a, gamma_b.
  std::string sweep_param = "noise";
  std::vector<double> grid;
  std::vector<Quantity> quantities;
  std::vector<Mode> modes;
  std::string output_path;
  SolverOptions solver;

  /// Throws DomainError on inconsistent fields.
  void validate() const;
};

/// Field names as in SweepConfig; "solver" holds optional gap_tol, feas_tol,
/// max_iters and step_fraction overrides.
SweepConfig sweep_config_from_json(const Json& j);
Json sweep_config_to_json(const SweepConfig& c);

struct ResultRow {
  double gamma1 = 0.0;
  double noise1 = 0.0;
  double gamma2 = 0.0;
  double noise2 = 0.0;
  int n = 1;
  double epsilon = 0.0;
  std::string mode;
  std::string quantity;
  double value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  std::string status;

  /// The key columns formatted as in the CSV.
  std::string key() const;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr const char* kCsvHeader =
    "gamma1,noise1,gamma2,noise2,n,epsilon,mode,quantity,value,gap,iterations,status";

/// Real columns use 12 significant digits; infinities are written as inf.
std::string format_csv_real(double v);
std::string emit_csv_row(const ResultRow& r);
std::string emit_csv(std::vector<ResultRow> rows);
/// Throws ParseError (position = byte offset of the bad line).
std::vector<ResultRow> parse_csv(const std::string& text);
std::vector<ResultRow> read_csv_file(const std::string& path);

/// Deterministic key order: quantity, mode, n, epsilon, then the four
/// channel parameters.
void sort_rows(std::vector<ResultRow>& rows);

/// Evaluates one cell.  Solver failures become the row status:
/// the failing solve status, or gap_exceeded when the certified gap on the
/// reported scale exceeds 1e-6 (1 + |value|).
ResultRow evaluate_cell(const ChannelSpec& a, const ChannelSpec& b, int n, double epsilon, Mode mode, Quantity q,
                        const EvaluateOptions& o);

struct SweepOptions {
  int jobs = 1;
  bool resume = false;
  /// Called after each finished cell (serialized).
  std::function<void(const ResultRow&, std::size_t done, std::size_t total)> progress;
};

/// Returns the rows evaluated by this run; the CSV holds all rows.
std::vector<ResultRow> run_sweep(const SweepConfig& c, const SweepOptions& o = {});

/// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qstrat
