#include "hopman/eval/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hopman/png_io.hpp"

namespace hopman::eval {

namespace fs = std::filesystem;

std::string results_csv(const std::vector<ResultTable>& tables) {
  if (tables.empty()) throw DataError("report: no result tables");
  std::string out = "condition,level,skill,episodes,successes,rate\n";
  char buf[160];
  for (const auto& table : tables)
    for (const auto& [key, c] : table.cells) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%d,%.9g\n", table.condition.c_str(),
                    data::to_string(key.first), world::to_string(key.second), c.episodes,
                    c.successes, c.rate());
      out += buf;
    }
  return out;
}

std::vector<ResultTable> parse_results_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "condition,level,skill,episodes,successes,rate")
    throw DataError("results.csv: unexpected header");
  std::map<std::string, ResultTable> by_cond;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cond, level, skill, episodes, successes, rate;
    std::getline(ls, cond, ',');
    std::getline(ls, level, ',');
    std::getline(ls, skill, ',');
    std::getline(ls, episodes, ',');
    std::getline(ls, successes, ',');
    std::getline(ls, rate, ',');
    auto& table = by_cond[cond];
    table.condition = cond;
    auto& cell = table.cells[{data::level_from_string(level), world::skill_from_string(skill)}];
    cell.episodes = std::stoi(episodes);
    cell.successes = std::stoi(successes);
  }
  std::vector<ResultTable> out;
  for (auto& [k, v] : by_cond) out.push_back(std::move(v));
  return out;
}

void make_report(const ReportInputs& inputs, const std::string& dir) {
  if (inputs.tables.empty()) throw DataError("make_report: empty condition set, nothing written");
  fs::create_directories(dir);

  {
    std::ofstream f(fs::path(dir) / "results.csv", std::ios::trunc);
    if (!f) throw DataError("report: cannot write results.csv");
    f << results_csv(inputs.tables);
  }

  std::set<Level> levels;
  for (const auto& t : inputs.tables)
    for (const auto& [key, c] : t.cells) levels.insert(key.first);
  for (Level level : levels) {
    const Image chart = render_level_chart(inputs.tables, level);
    write_png((fs::path(dir) / ("level_" + std::string(data::to_string(level)) + ".png")).string(),
              chart);
  }

  nlohmann::json summary = inputs.summary_extra;
  summary["conditions"] = nlohmann::json::array();
  for (const auto& t : inputs.tables) {
    nlohmann::json jt;
    jt["condition"] = t.condition;
    for (const auto& [key, c] : t.cells) {
      nlohmann::json cell;
      cell["level"] = data::to_string(key.first);
      cell["skill"] = world::to_string(key.second);
      cell["episodes"] = c.episodes;
      cell["successes"] = c.successes;
      jt["cells"].push_back(cell);
    }
    summary["conditions"].push_back(jt);
  }
  for (const auto& o : inputs.orderings) {
    nlohmann::json jo;
    jo["better"] = o.expectation.better;
    jo["worse"] = o.expectation.worse;
    for (Level l : o.expectation.levels) jo["levels"].push_back(data::to_string(l));
    jo["margin"] = o.expectation.margin;
    jo["better_rate"] = o.better_rate;
    jo["worse_rate"] = o.worse_rate;
    jo["pass"] = o.pass;
    summary["orderings"].push_back(jo);
  }
  std::ofstream f(fs::path(dir) / "summary.json", std::ios::trunc);
  if (!f) throw DataError("report: cannot write summary.json");
  f << summary.dump(2) << "\n";
}

}  // namespace hopman::eval
