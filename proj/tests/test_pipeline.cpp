#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "faircf/errors.hpp"
#include "faircf/pipeline.hpp"
#include "faircf/synthetic.hpp"

using namespace faircf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("faircf_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_run(const fs::path& dir, int clusters) {
  SyntheticConfig synth;
  synth.rows_per_group = 100;
  write_synthetic_dataset(dir / "data", synth);
  RunConfig c;
  c.data = dir / "data" / "data.csv";
  c.schema = dir / "data" / "schema.json";
  c.seed = 3;
  c.clusters = clusters;
  c.sac.hidden = {16, 16};
  c.train.episodes = 6;
  c.train.warmup_steps = 100;
  c.train.batch_size = 32;
  c.threads = 1;
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("without clusters only the whole population is reported") {
  TempDir tmp;
  RunConfig c = small_run(tmp.path, 0);
  c.out = tmp.path / "out";
  const FairnessReport report = cmd_run(c);
  REQUIRE(report.populations.size() == 1);
  CHECK(report.populations[0].name == "Whole");
  CHECK(fs::exists(c.out / "report.json"));
  CHECK(fs::exists(c.out / "trace_Whole.csv"));
  CHECK_FALSE(fs::exists(c.out / "clusters.csv"));
  CHECK_FALSE(fs::exists(c.out / "INCOMPLETE"));
}

TEST_CASE("clusters add one population each and partition the affected set") {
  TempDir tmp;
  const RunConfig c = small_run(tmp.path, 3);
  const RunArtifacts art = run_pipeline(c);
  const auto& pops = art.report.populations;
  REQUIRE(pops.size() == 4);
  CHECK(pops[1].name == "C1");
  CHECK(pops[3].name == "C3");
  REQUIRE(art.clustering);
  std::vector<std::size_t> rows;
  for (std::size_t k = 1; k < pops.size(); ++k) rows.insert(rows.end(), pops[k].rows.begin(), pops[k].rows.end());
  std::sort(rows.begin(), rows.end());
  std::vector<std::size_t> whole = pops[0].rows;
  std::sort(whole.begin(), whole.end());
  CHECK(rows == whole);
  CHECK(whole.size() == art.report.affected);
}

TEST_CASE("selected counterfactuals are valid, actionable and in range") {
  TempDir tmp;
  const RunConfig c = small_run(tmp.path, 0);
  const RunArtifacts art = run_pipeline(c);
  const PopulationResult& whole = art.report.populations.at(0);
  const ActionSpace space(art.report.schema);
  const Dataset ds = load_csv(c.data, c.schema);
  for (std::size_t i = 0; i < whole.selections.size(); ++i) {
    const auto& sel = whole.selections[i];
    if (!sel) continue;
    CHECK(art.model.predict(sel->counterfactual) == 1);
    const Instance& x = ds.normalized_row(whole.rows[i]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!space.schema().feature(j).actionable) CHECK(sel->counterfactual[j] == x[j]);
      CHECK(sel->counterfactual[j] >= 0.0);
      CHECK(sel->counterfactual[j] <= 1.0);
    }
  }
}

TEST_CASE("equal seeds give byte-identical reports") {
  TempDir tmp;
  RunConfig a = small_run(tmp.path, 2);
  a.out = tmp.path / "a";
  RunConfig b = a;
  b.out = tmp.path / "b";
  b.threads = 2;
  cmd_run(a);
  cmd_run(b);
  CHECK(slurp(a.out / "report.json") == slurp(b.out / "report.json"));
  CHECK(slurp(a.out / "trace_Whole.csv") == slurp(b.out / "trace_Whole.csv"));
}

TEST_CASE("report numbers agree with each other") {
  TempDir tmp;
  RunConfig c = small_run(tmp.path, 2);
  c.out = tmp.path / "out";
  cmd_run(c);
  const auto doc = nlohmann::json::parse(slurp(c.out / "report.json"));
  const double phi = doc["config"]["scenario"]["phi"].get<double>();
  for (const auto& p : doc["populations"]) {
    if (p["skipped"].get<bool>()) continue;
    const double sr0 = p["sr"][0], sr1 = p["sr"][1];
    CHECK(p["pd"].get<double>() == doctest::Approx(std::fabs(sr0 - sr1)).epsilon(1e-12));
    CHECK(p["asr"].get<double>() == doctest::Approx((sr0 + sr1) / 2).epsilon(1e-12));
    int counts[2] = {0, 0};
    for (const auto& a : p["actions"]) {
      for (int g = 0; g < 2; ++g) counts[g] += a["effectiveness"][g].get<double>() >= phi ? 1 : 0;
    }
    CHECK(p["action_counts"][0].get<int>() == counts[0]);
    CHECK(p["action_counts"][1].get<int>() == counts[1]);
    CHECK(p["ad"].get<int>() == std::abs(counts[0] - counts[1]));
    CHECK(p["recoursed"].get<int>() <= p["size"][0].get<int>() + p["size"][1].get<int>());
  }
}

TEST_CASE("audit warns when the model's positive rates differ") {
  TempDir tmp;
  RunConfig c = small_run(tmp.path, 0);
  const Dataset ds = load_csv(c.data, c.schema);
  std::ostringstream biased, even;
  biased << "row_index,score\n";
  even << "row_index,score\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    biased << i << ',' << (ds.group(i) == 0 ? 0.9 : 0.1) << '\n';
    even << i << ",0.9\n";
  }
  write_file(tmp.path / "biased.csv", biased.str());
  write_file(tmp.path / "even.csv", even.str());

  c.predictions = tmp.path / "biased.csv";
  const AuditResult warned = cmd_audit(c);
  CHECK(warned.audit.dp_difference == doctest::Approx(1.0));
  REQUIRE_FALSE(warned.warnings.empty());
  CHECK(warned.warnings[0].find("demographic parity") != std::string::npos);

  c.predictions = tmp.path / "even.csv";
  const AuditResult quiet = cmd_audit(c);
  CHECK(quiet.audit.dp_difference == 0.0);
  CHECK(quiet.warnings.empty());
}

TEST_CASE("a dataset with one protected group fails and leaves an INCOMPLETE marker") {
  TempDir tmp;
  RunConfig c = small_run(tmp.path, 0);
  const std::string text = slurp(c.data);
  std::istringstream in(text);
  std::ostringstream only0;
  std::string line;
  std::getline(in, line);
  only0 << line << '\n';
  while (std::getline(in, line)) {
    // group is the fifth column
    std::istringstream cells(line);
    std::string cell;
    for (int k = 0; k < 5; ++k) std::getline(cells, cell, ',');
    if (cell == "0") only0 << line << '\n';
  }
  write_file(c.data, only0.str());
  c.out = tmp.path / "out";
  CHECK_THROWS_AS(cmd_run(c), DataError);
  CHECK(fs::exists(c.out / "INCOMPLETE"));
  CHECK(slurp(c.out / "INCOMPLETE").find("stage:") == 0);
}

TEST_CASE("a non-empty output directory is refused") {
  TempDir tmp;
  RunConfig c = small_run(tmp.path, 0);
  c.out = tmp.path / "data";
  CHECK_THROWS_AS(cmd_run(c), ConfigError);
}

TEST_CASE("baseline finds counterfactuals on the synthetic data") {
  TempDir tmp;
  const RunConfig c = small_run(tmp.path, 0);
  const BaselineReport r = cmd_baseline(c);
  for (const auto& g : r.groups) {
    CHECK(g.size > 0);
    CHECK(g.found <= g.size);
    REQUIRE(g.quality);
    CHECK(g.quality->actionability);
  }
  CHECK(r.to_json()["method"] == "nun-greedy");
}

TEST_CASE("run config JSON round trip and thread count") {
  RunConfig c;
  c.clusters = 0;
  c.seed = 11;
  c.sac.hidden = {8};
  c.scenario.scenario = Scenario::kGroupEE;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.clusters == 0);
  CHECK(back.seed == 11);
  CHECK(back.sac.hidden == std::vector<int>{8});
  CHECK(back.scenario.scenario == Scenario::kGroupEE);
  CHECK(worker_threads(3) >= 1);
  CHECK(worker_threads(3) <= 3);
}

TEST_CASE("trace plot is an SVG document") {
  sac::TrainingTrace t;
  for (int i = 0; i < 5; ++i) t.rows.push_back({10L * (i + 1), i, 0.0, 10, -1.0 + 0.2 * i, 1.0 - 0.1 * i});
  const std::string svg = trace_svg(t);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(round6(1.23456789) == 1.23457);
}
