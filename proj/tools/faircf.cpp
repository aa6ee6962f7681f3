// faircf: fair counterfactual action sets for tabular classifiers.
//
//   faircf run --data D --schema S --scenario hybrid --clusters 3 --seed 1 --out DIR
//   faircf audit --data D --schema S --seed 1 [--predictions P]
//   faircf baseline --data D --schema S --seed 1
//   faircf trace-plot --trace DIR/trace_Whole.csv --out trace.svg
//   faircf synth --out DIR

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "faircf/errors.hpp"
#include "faircf/pipeline.hpp"
#include "faircf/synthetic.hpp"

namespace {

using faircf::RunConfig;

struct CommonOptions {
  std::string config_file;
  std::string data;
  std::string schema;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "JSON run config; command-line flags override it");
  cmd->add_option("--data", o.data, "CSV dataset with a header row");
  cmd->add_option("--schema", o.schema, "JSON schema config");
  cmd->add_option("--seed", o.seed, "Random seed (required)");
}

RunConfig build_config(const CommonOptions& o) {
  RunConfig config;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw faircf::ConfigError("cannot open config file " + o.config_file);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw faircf::ConfigError("config file " + o.config_file + " is not valid JSON: " + e.what());
    }
    config = RunConfig::from_json(doc);
    if (!doc.contains("seed") && !o.seed) throw faircf::ConfigError("a seed is required (--seed or \"seed\")");
  } else if (!o.seed) {
    throw faircf::ConfigError("--seed is required");
  }
  if (!o.data.empty()) config.data = o.data;
  if (!o.schema.empty()) config.schema = o.schema;
  if (!o.out.empty()) config.out = o.out;
  if (o.seed) config.seed = *o.seed;
  return config;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw faircf::DataError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair counterfactual action sets for tabular binary classifiers"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string scenario;
  std::optional<int> clusters;
  std::optional<int> episodes;
  std::optional<int> threads;
  bool trajectories = false;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Train, audit, optimize action sets and write a report directory");
  add_common(run, run_opts);
  run->add_option("--out", run_opts.out, "Output directory (must not exist or be empty)");
  run->add_option("--scenario", scenario, "individual-ee | group-ee | group-ecr | hybrid");
  run->add_option("--clusters", clusters, "k for k-means subgroups; 0 evaluates only the whole population");
  run->add_option("--episodes", episodes, "SAC training episodes per population");
  run->add_option("--threads", threads, "Worker threads (capped by RECOURSE_THREADS)");
  run->add_flag("--trajectories", trajectories, "Write per-step JSON-lines logs");
  run->add_flag("-q,--quiet", quiet, "No progress output");

  CommonOptions audit_opts;
  std::string predictions;
  auto* audit = app.add_subcommand("audit", "Demographic parity and equalized odds of the classifier");
  add_common(audit, audit_opts);
  audit->add_option("--predictions", predictions, "CSV row_index,score from an external model");
  audit->add_option("--out", audit_opts.out, "Also write the audit as JSON to this file");

  CommonOptions base_opts;
  auto* baseline = app.add_subcommand("baseline", "Nearest-unlike-neighbor counterfactual baseline");
  add_common(baseline, base_opts);
  baseline->add_option("--out", base_opts.out, "Also write the result as JSON to this file");

  std::string trace_path;
  std::string svg_path;
  auto* plot = app.add_subcommand("trace-plot", "SVG chart of a training trace CSV");
  plot->add_option("--trace", trace_path, "trace_<population>.csv from a run directory")->required();
  plot->add_option("--out", svg_path, "SVG file to write")->required();

  std::string synth_dir;
  faircf::SyntheticConfig synth_cfg;
  auto* synth = app.add_subcommand("synth", "Write the two-group synthetic dataset and its schema");
  synth->add_option("--out", synth_dir, "Directory for data.csv and schema.json")->required();
  synth->add_option("--rows-per-group", synth_cfg.rows_per_group, "Rows per protected group");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  synth->add_option("--asymmetry", synth_cfg.asymmetry, "Shift of group 1 below the boundary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(faircf::ExitCode::kConfig);
  }

  try {
    if (*run) {
      RunConfig config = build_config(run_opts);
      if (!scenario.empty()) config.scenario.scenario = faircf::scenario_from_string(scenario);
      if (clusters) config.clusters = *clusters;
      if (episodes) config.train.episodes = *episodes;
      if (threads) config.threads = *threads;
      if (trajectories) config.write_trajectories = true;
      const faircf::FairnessReport report = faircf::cmd_run(config, quiet ? nullptr : &std::cerr);
      std::cout << report.table();
      std::cout << "\nwrote " << config.out.string() << "\n";
    } else if (*audit) {
      RunConfig config = build_config(audit_opts);
      if (!predictions.empty()) config.predictions = predictions;
      const faircf::AuditResult result = faircf::cmd_audit(config);
      std::cout << result.audit.to_json().dump(2) << '\n';
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      if (!audit_opts.out.empty()) write_json(audit_opts.out, result.audit.to_json());
    } else if (*baseline) {
      const RunConfig config = build_config(base_opts);
      const faircf::BaselineReport report = faircf::cmd_baseline(config);
      std::cout << report.to_json().dump(2) << '\n';
      if (!base_opts.out.empty()) write_json(base_opts.out, report.to_json());
    } else if (*plot) {
      std::ifstream in(trace_path);
      if (!in) throw faircf::DataError("cannot open " + trace_path);
      const auto trace = faircf::sac::TrainingTrace::read_csv(in);
      std::ofstream out(svg_path);
      if (!out) throw faircf::DataError("cannot write " + svg_path);
      out << faircf::trace_svg(trace);
    } else if (*synth) {
      faircf::write_synthetic_dataset(synth_dir, synth_cfg);
      std::cout << "wrote " << (std::filesystem::path(synth_dir) / "data.csv").string() << " and schema.json\n";
    }
  } catch (const faircf::Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << ": " << e.what() << '\n';
    if (e.exit_code() == faircf::ExitCode::kDivergence) {
      std::cerr << "hint: lower the learning rates in the config\n";
    }
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(faircf::ExitCode::kFailure);
  }
  return 0;
}
