#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "faircf/cluster.hpp"
#include "faircf/fairness.hpp"
#include "faircf/model.hpp"
#include "faircf/recourse.hpp"
#include "faircf/rl_env.hpp"
#include "faircf/sac.hpp"
#include "faircf/tabular.hpp"
#include "json.hpp"

namespace faircf {

struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path schema;
  std::filesystem::path out;
  // External model scores (row_index,score). Usable for audits only: the
  // counterfactual search has to score unseen points.
  std::optional<std::filesystem::path> predictions;
  ScenarioSpec scenario;
  sac::SacConfig sac;
  sac::TrainConfig train;
  LogisticConfig classifier;
  AutoencoderConfig autoencoder;
  int clusters = 3;  // 0 disables the per-cluster populations
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  // Worker threads for per-population runs; 0 reads RECOURSE_THREADS, then
  // falls back to the hardware count.
  int threads = 0;
  bool write_trajectories = false;

  // Everything but the paths, for the report's config echo.
  nlohmann::json to_json() const;
  // Merges a JSON config file's keys over the defaults.
  static RunConfig from_json(const nlohmann::json& doc);
};

int worker_threads(int requested);

struct GroupQuality {
  std::size_t size = 0;
  std::optional<CfQuality> quality;  // absent for an empty group
};

struct ActionSummary {
  std::vector<double> raw_deltas;
  std::array<double, 2> effectiveness{0.0, 0.0};
  bool zero = true;
};

struct PopulationResult {
  std::string name;  // "Whole", "C1", ...
  std::vector<std::size_t> rows;  // dataset row indices
  std::size_t size0 = 0;
  std::size_t size1 = 0;
  bool skipped = false;
  std::string skip_reason;

  ActionSet actions;
  std::vector<ActionSummary> action_summaries;
  FairnessSnapshot snapshot;
  bool targets_met = false;
  std::array<GroupQuality, 2> quality;
  // Per population member: the selected counterfactual, if any action works.
  std::vector<std::optional<SelectedCf>> selections;
  sac::TrainingTrace trace;
  std::string trajectory;  // JSON lines, when requested
};

struct FairnessReport {
  ScenarioSpec scenario;
  FeatureSchema schema;
  ModelFairnessAudit audit;
  std::vector<PopulationResult> populations;
  std::size_t affected = 0;
  std::uint64_t seed = 0;
  nlohmann::json config_echo;

  // Numbers carry 6 significant digits; PD and ASR are recomputed from the
  // rounded success rates so the file is self-consistent.
  nlohmann::json to_json() const;
  // Mirrors the "[G0, G1] (PD)" cell layout, in percent.
  std::string table() const;
};

// 6 significant digits.
double round6(double v);

nlohmann::json action_set_json(const ActionSet& actions, const std::vector<ActionSummary>& summaries,
                               const ActionSpace& space);

// Trains SAC on one population and returns the best emitted action set.
struct OptimizationResult {
  ActionSet actions;
  FairnessSnapshot snapshot;
  bool targets_met = false;
  sac::TrainingTrace trace;
};

OptimizationResult optimize_action_set(const Population& population, const Classifier& h,
                                       const ActionSpace& space, const ScenarioSpec& spec,
                                       const sac::SacConfig& sac_config, const sac::TrainConfig& train,
                                       std::ostream* trajectory_log = nullptr);

// Evaluates an action set on a population: snapshot, per-action coverage,
// per-individual best CF, CF quality per group.
void evaluate_population(PopulationResult& result, const Population& population, const Classifier& h,
                         const Autoencoder& ae, const ActionSpace& space, const ScenarioSpec& spec);

struct RunArtifacts {
  FairnessReport report;
  LogisticRegression model;
  std::optional<Clustering> clustering;
  std::vector<std::size_t> affected_rows;
};

// load -> classifier -> audit -> affected set -> clusters -> per population:
// SAC -> best set -> per-individual CFs -> quality. Errors carry the stage name.
RunArtifacts run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

// Runs the pipeline and writes report.json, report.txt, model.json, per
// population actions_*.json and trace_*.csv (plus clusters.csv) into
// config.out. Files are staged in a sibling directory and renamed into
// place; on failure the directory still appears, with an INCOMPLETE marker.
FairnessReport cmd_run(const RunConfig& config, std::ostream* log = nullptr);

struct AuditResult {
  ModelFairnessAudit audit;
  std::vector<std::string> warnings;  // dp or eo above 0.10
};

AuditResult cmd_audit(const RunConfig& config);

struct BaselineGroup {
  std::size_t size = 0;
  std::size_t found = 0;
  std::optional<CfQuality> quality;
};

struct BaselineReport {
  std::array<BaselineGroup, 2> groups;
  nlohmann::json to_json() const;
};

BaselineReport cmd_baseline(const RunConfig& config);

// Line chart of a trace CSV: reward mean and entropy coefficient against step.
std::string trace_svg(const sac::TrainingTrace& trace);

}  // namespace faircf
