#pragma once

#include "hopman/eval/rollout.hpp"

namespace hopman::eval {

// Report directory: results.csv, level_<L>.png bar charts, summary.json.
// Byte-stable for identical inputs.
struct ReportInputs {
  std::vector<ResultTable> tables;
  std::vector<OrderingOutcome> orderings;
  nlohmann::json summary_extra;  // checkpoints, seeds, split checksum
};

void make_report(const ReportInputs& inputs, const std::string& dir);

std::string results_csv(const std::vector<ResultTable>& tables);
std::vector<ResultTable> parse_results_csv(const std::string& csv);

// Grouped bar chart for one level: skills on the x axis, one bar per
// condition.
Image render_level_chart(const std::vector<ResultTable>& tables, Level level);

}  // namespace hopman::eval
