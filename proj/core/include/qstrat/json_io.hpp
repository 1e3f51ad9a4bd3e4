#pragma once

// JSON interchange for operators, strategies, results and standard-form
// problems.
//
// Operator:  {"systems": [{"name": s, "dim": d}], "re": [d*d], "im": [d*d]}
//            entries row-major.
// Strategy:  {"rounds": {"n": n, "inputs": [g...], "outputs": [g...]},
//             "op": operator}
//            where each group g is a system object or an array of them.
// StandardSdp:
//            {"psd_sides": [...], "nonneg_count": l, "free_count": f,
//             "c": {"psd": [[row-major]...], "nonneg": [...], "free": [...]},
//             "rows": [{"psd": [[block, row, col, v]...],
//                       "nonneg": [[index, v]...], "free": [[index, v]...]}],
//             "b": [...]}
//
// dump_json writes every number with 17 significant digits; infinities and
// NaN are written as the strings "inf", "-inf" and "nan" and read back.

#include <string>

#include <nlohmann/json.hpp>

#include "qstrat/comb.hpp"
#include "qstrat/labeled_operator.hpp"
#include "qstrat/programs.hpp"
#include "qstrat/solver.hpp"
#include "qstrat/standard_sdp.hpp"

namespace qstrat {

using Json = nlohmann::ordered_json;

/// Serializes with 17 significant digits; indent < 0 gives one line.
std::string dump_json(const Json& j, int indent = -1);
/// Throws ParseError carrying the byte offset of a syntax error.
Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);

/// Number or one of the strings written for non-finite values.
Json number_to_json(double v);
double number_from_json(const Json& j);

Json operator_to_json(const LabeledOperator& op);
LabeledOperator operator_from_json(const Json& j);

Json strategy_to_json(const StrategyChoi& s);
StrategyChoi strategy_from_json(const Json& j);

/// Summary fields; solution blocks only when include_solution is set.
Json report_to_json(const SolveReport& r, bool include_solution = false);
SolveReport report_from_json(const Json& j);

Json result_to_json(const QuantityResult& r);
QuantityResult result_from_json(const Json& j);

Json standard_sdp_to_json(const StandardSdp& p);
StandardSdp standard_sdp_from_json(const Json& j);

}  // namespace qstrat
