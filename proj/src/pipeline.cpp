#include "faircf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "faircf/baseline.hpp"
#include "faircf/errors.hpp"

namespace faircf {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per pipeline component.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

enum Stream : std::uint64_t { kSplit = 0, kAutoencoder = 1, kCluster = 2, kPopulation = 16 };

template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

nlohmann::json logistic_json(const LogisticConfig& c) {
  return {{"lr", c.lr}, {"epochs", c.epochs}, {"l2", c.l2}};
}

LogisticConfig logistic_from_json(const nlohmann::json& doc) {
  LogisticConfig c;
  c.lr = doc.value("lr", c.lr);
  c.epochs = doc.value("epochs", c.epochs);
  c.l2 = doc.value("l2", c.l2);
  return c;
}

nlohmann::json autoencoder_json(const AutoencoderConfig& c) {
  return {{"hidden_dims", c.hidden_dims}, {"noise_sigma", c.noise_sigma}, {"lr", c.lr},
          {"epochs", c.epochs},           {"batch_size", c.batch_size}};
}

AutoencoderConfig autoencoder_from_json(const nlohmann::json& doc) {
  AutoencoderConfig c;
  c.hidden_dims = doc.value("hidden_dims", c.hidden_dims);
  c.noise_sigma = doc.value("noise_sigma", c.noise_sigma);
  c.lr = doc.value("lr", c.lr);
  c.epochs = doc.value("epochs", c.epochs);
  c.batch_size = doc.value("batch_size", c.batch_size);
  return c;
}

void round_all(nlohmann::json& j) {
  if (j.is_number_float()) {
    j = round6(j.get<double>());
  } else if (j.is_structured()) {
    for (auto& v : j) round_all(v);
  }
}

nlohmann::json rounded(nlohmann::json j) {
  round_all(j);
  return j;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out) {}
  void operator()(const std::string& line) {
    if (!out_) return;
    std::lock_guard lock(mu_);
    *out_ << line << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

struct Loaded {
  Dataset ds;
  TrainTestSplit split;
};

Loaded load_and_split(const RunConfig& config) {
  if (config.data.empty() || config.schema.empty()) throw ConfigError("both --data and --schema are required");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  Loaded l;
  l.ds = staged("load", [&] { return load_csv(config.data, config.schema); });
  l.split = staged("split", [&] {
    return train_test_split(l.ds.size(), config.train_fraction, derive_seed(config.seed, kSplit));
  });
  return l;
}

Autoencoder fit_autoencoder(const RunConfig& config, const Dataset& train) {
  return staged("autoencoder", [&] {
    AutoencoderConfig ae = config.autoencoder;
    ae.seed = derive_seed(config.seed, kAutoencoder);
    return train_autoencoder(train, ae);
  });
}

}  // namespace

double round6(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? 0.0 : v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

int worker_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RECOURSE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw ConfigError(std::string("RECOURSE_THREADS must be a positive integer, got '") + env + "'");
    }
    n = std::min<long>(n > 0 ? n : cap, cap);
  }
  return std::max(n, 1);
}

// ---------------------------------------------------------------------------
// Config

nlohmann::json RunConfig::to_json() const {
  return {{"scenario", scenario.to_json()},
          {"sac", sac.to_json()},
          {"train", train.to_json()},
          {"classifier", logistic_json(classifier)},
          {"autoencoder", autoencoder_json(autoencoder)},
          {"clusters", clusters},
          {"seed", seed},
          {"train_fraction", train_fraction}};
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  RunConfig c;
  try {
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
    if (doc.contains("data")) c.data = doc.at("data").get<std::string>();
    if (doc.contains("schema")) c.schema = doc.at("schema").get<std::string>();
    if (doc.contains("out")) c.out = doc.at("out").get<std::string>();
    if (doc.contains("predictions")) c.predictions = doc.at("predictions").get<std::string>();
    if (doc.contains("scenario")) c.scenario = ScenarioSpec::from_json(doc.at("scenario"));
    if (doc.contains("sac")) c.sac = sac::SacConfig::from_json(doc.at("sac"));
    if (doc.contains("train")) c.train = sac::TrainConfig::from_json(doc.at("train"));
    if (doc.contains("classifier")) c.classifier = logistic_from_json(doc.at("classifier"));
    if (doc.contains("autoencoder")) c.autoencoder = autoencoder_from_json(doc.at("autoencoder"));
    c.clusters = doc.value("clusters", c.clusters);
    c.seed = doc.value("seed", c.seed);
    c.train_fraction = doc.value("train_fraction", c.train_fraction);
    c.threads = doc.value("threads", c.threads);
    c.write_trajectories = doc.value("write_trajectories", c.write_trajectories);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Optimization and evaluation

OptimizationResult optimize_action_set(const Population& population, const Classifier& h,
                                       const ActionSpace& space, const ScenarioSpec& spec,
                                       const sac::SacConfig& sac_config, const sac::TrainConfig& train,
                                       std::ostream* trajectory_log) {
  FairRecourseEnv env(population, h, space, spec);
  env.set_trajectory_log(trajectory_log);
  sac::SacAgent agent(env.observation_dim(), env.action_dim(), sac_config);
  OptimizationResult result;
  result.trace = sac::train(agent, env, train);

  // One greedy rollout of the final policy also competes for the emitted set.
  std::vector<double> obs = env.reset();
  for (bool done = false; !done;) {
    const sac::ActionSample a = agent.sample_action(obs, true);
    sac::EnvStep s = env.step(a.action);
    obs = std::move(s.observation);
    done = s.terminal || s.truncated;
  }

  const Candidate& best = *env.best();
  result.actions = best.actions;
  result.snapshot = best.snapshot;
  result.targets_met = best.satisfied;
  return result;
}

void evaluate_population(PopulationResult& result, const Population& population, const Classifier& h,
                         const Autoencoder& ae, const ActionSpace& space, const ScenarioSpec& spec) {
  const ActionSet& actions = result.actions;
  result.snapshot = compute_snapshot(actions, population, h, space, spec.snapshot_options());
  result.targets_met = stopping(result.snapshot, spec);

  result.action_summaries.clear();
  const std::vector<Instance> g0 = population.members(0);
  const std::vector<Instance> g1 = population.members(1);
  for (const Action& a : actions.actions) {
    ActionSummary s;
    s.raw_deltas = space.raw_deltas(a);
    s.zero = a.is_zero();
    s.effectiveness = {g0.empty() ? 0.0 : effectiveness(a, g0, h, space),
                       g1.empty() ? 0.0 : effectiveness(a, g1, h, space)};
    result.action_summaries.push_back(std::move(s));
  }

  result.selections.assign(population.size(), std::nullopt);
  std::array<std::vector<CfPair>, 2> pairs;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const Instance& x = population.rows[i];
    result.selections[i] = select_best(x, actions, h, space);
    Instance cf;
    if (result.selections[i]) {
      cf = result.selections[i]->counterfactual;
    } else {
      // Nobody-flips fallback: the action that gets closest to the boundary.
      std::size_t pick = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < actions.size(); ++a) {
        const double s = h.score(space.apply(x, actions.actions[a]));
        if (s > best) {
          best = s;
          pick = a;
        }
      }
      cf = actions.size() ? space.apply(x, actions.actions[pick]) : x;
    }
    pairs[static_cast<std::size_t>(population.groups[i])].push_back(CfPair{x, std::move(cf)});
  }
  for (int g = 0; g < 2; ++g) {
    result.quality[g].size = pairs[g].size();
    result.quality[g].quality.reset();
    if (!pairs[g].empty()) result.quality[g].quality = cf_quality(pairs[g], h, ae, space);
  }
}

nlohmann::json action_set_json(const ActionSet& actions, const std::vector<ActionSummary>& summaries,
                               const ActionSpace& space) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t a = 0; a < actions.size(); ++a) {
    nlohmann::json deltas = nlohmann::json::object();
    const ActionSummary& s = summaries.at(a);
    for (std::size_t k = 0; k < space.actionable_count(); ++k) {
      deltas[space.schema().feature(space.actionable()[k]).name] = s.raw_deltas[k];
    }
    out.push_back({{"action", a},
                   {"deltas", std::move(deltas)},
                   {"zero", s.zero},
                   {"effectiveness", {s.effectiveness[0], s.effectiveness[1]}}});
  }
  return rounded(std::move(out));
}

// ---------------------------------------------------------------------------
// Report

nlohmann::json FairnessReport::to_json() const {
  const ActionSpace space(schema);
  nlohmann::json pops = nlohmann::json::array();
  for (const auto& p : populations) {
    nlohmann::json j = {{"name", p.name}, {"size", {p.size0, p.size1}}, {"skipped", p.skipped}};
    if (p.skipped) {
      j["skip_reason"] = p.skip_reason;
      pops.push_back(std::move(j));
      continue;
    }
    const FairnessSnapshot& s = p.snapshot;
    const double sr0 = round6(s.sr0);
    const double sr1 = round6(s.sr1);
    j["sr"] = {sr0, sr1};
    // Derived from the rounded primaries so they recompute exactly.
    j["pd"] = std::fabs(sr0 - sr1);
    j["asr"] = (sr0 + sr1) / 2.0;
    j["action_counts"] = {s.a0_count, s.a1_count};
    j["ad"] = std::abs(s.a0_count - s.a1_count);
    j["active_actions"] = s.active_count;
    j["micro_effectiveness"] = {round6(s.micro_eff0), round6(s.micro_eff1)};
    j["macro_effectiveness"] = {round6(s.macro_eff0), round6(s.macro_eff1)};
    j["mean_gower"] = round6(s.mean_gower);
    j["recoursed"] = s.recoursed;
    j["targets_met"] = p.targets_met;
    j["actions"] = action_set_json(p.actions, p.action_summaries, space);
    nlohmann::json quality = nlohmann::json::array();
    for (const auto& q : p.quality) {
      quality.push_back(q.quality ? rounded(q.quality->to_json()) : nlohmann::json(nullptr));
    }
    j["cf_quality"] = std::move(quality);
    j["training"] = {{"episodes", p.trace.rows.size()},
                     {"steps", p.trace.total_steps},
                     {"updates", p.trace.updates},
                     {"final_reward_mean", round6(p.trace.rows.empty() ? 0.0 : p.trace.rows.back().episode_reward_mean)},
                     {"final_entropy_coefficient",
                      round6(p.trace.rows.empty() ? 0.0 : p.trace.rows.back().entropy_coefficient)}};
    pops.push_back(std::move(j));
  }
  return {{"scenario", rounded(scenario.to_json())},
          {"seed", seed},
          {"schema_fingerprint", schema.fingerprint()},
          {"affected", affected},
          {"audit", rounded(audit.to_json())},
          {"config", rounded(config_echo)},
          {"populations", std::move(pops)}};
}

std::string FairnessReport::table() const {
  std::ostringstream out;
  out << "Scenario: " << to_string(scenario.scenario) << "   seed: " << seed << "   affected: " << affected
      << "\n";
  out << "Model audit: dp " << fmt("%.3f", audit.dp_difference) << ", eo " << fmt("%.3f", audit.eo_difference)
      << ", accuracy " << fmt("%.3f", audit.accuracy) << "\n\n";

  out << std::left << std::setw(10) << "Pop" << std::setw(14) << "Size" << std::setw(22) << "SR % [G0, G1] (PD)"
      << std::setw(18) << "Actions (AD)" << std::setw(8) << "Act" << std::setw(9) << "Gower"
      << "Targets\n";
  for (const auto& p : populations) {
    std::string size = "[" + std::to_string(p.size0) + ", " + std::to_string(p.size1) + "]";
    out << std::setw(10) << p.name << std::setw(14) << size;
    if (p.skipped) {
      out << "skipped: " << p.skip_reason << "\n";
      continue;
    }
    const auto& s = p.snapshot;
    const double sr0 = round6(s.sr0);
    const double sr1 = round6(s.sr1);
    const std::string sr = "[" + fmt("%.1f", 100 * sr0) + ", " + fmt("%.1f", 100 * sr1) + "] (" +
                           fmt("%.1f", 100 * std::fabs(sr0 - sr1)) + ")";
    const std::string counts = "[" + std::to_string(s.a0_count) + ", " + std::to_string(s.a1_count) + "] (" +
                               std::to_string(std::abs(s.a0_count - s.a1_count)) + ")";
    out << std::setw(22) << sr << std::setw(18) << counts << std::setw(8) << s.active_count << std::setw(9)
        << fmt("%.3f", s.mean_gower) << (p.targets_met ? "met" : "not met") << "\n";
  }

  out << "\nCF quality per group: validity %, plausibility, similarity (Gower), minimality\n";
  for (const auto& p : populations) {
    if (p.skipped) continue;
    out << std::setw(10) << p.name;
    for (int g = 0; g < 2; ++g) {
      const auto& q = p.quality[g].quality;
      out << "G" << g << ": ";
      if (!q) {
        out << std::setw(34) << "-";
        continue;
      }
      std::string cell = fmt("%.1f", 100 * q->validity) + ", " + fmt("%.4f", q->plausibility) + ", " +
                         fmt("%.3f", q->similarity) + ", " + fmt("%.2f", q->minimality);
      out << std::setw(34) << cell;
    }
    out << "\n";
  }

  const ActionSpace space(schema);
  for (const auto& p : populations) {
    if (p.skipped) continue;
    out << "\nActions for " << p.name << " (raw units; coverage G0/G1 %)\n";
    for (std::size_t a = 0; a < p.actions.size(); ++a) {
      const auto& s = p.action_summaries.at(a);
      out << "  a" << a << ": ";
      if (s.zero) {
        out << "(no change)";
      } else {
        bool first = true;
        for (std::size_t k = 0; k < s.raw_deltas.size(); ++k) {
          if (std::fabs(p.actions.actions[a].deltas[k]) < kZeroDelta) continue;
          if (!first) out << ", ";
          first = false;
          out << space.schema().feature(space.actionable()[k]).name << " " << fmt("%+.4g", s.raw_deltas[k]);
        }
      }
      out << "  [" << fmt("%.1f", 100 * s.effectiveness[0]) << ", " << fmt("%.1f", 100 * s.effectiveness[1])
          << "]\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline

RunArtifacts run_pipeline(const RunConfig& config, std::ostream* log_stream) {
  Logger log(log_stream);
  staged("config", [&] {
    config.scenario.validate();
    if (config.clusters < 0) throw ConfigError("clusters must be >= 0");
    if (config.predictions) {
      throw ConfigError("a prediction file can only drive `audit`: counterfactual search must score unseen points");
    }
    return 0;
  });

  Loaded loaded = load_and_split(config);
  const Dataset& ds = loaded.ds;
  log("loaded " + std::to_string(ds.size()) + " rows, " + std::to_string(ds.schema().size()) + " features");
  const Dataset train = ds.subset(loaded.split.train);
  const Dataset test = ds.subset(loaded.split.test);

  RunArtifacts art;
  art.model = staged("classifier", [&] { return train_classifier(train, config.classifier); });
  art.report.audit = staged("audit", [&] { return audit_fairness(art.model, test); });
  log("classifier accuracy " + fmt("%.3f", art.report.audit.accuracy) + ", dp " +
      fmt("%.3f", art.report.audit.dp_difference) + ", eo " + fmt("%.3f", art.report.audit.eo_difference));

  const AffectedSet affected = staged("affected", [&] { return affected_subset(ds, art.model); });
  art.affected_rows = affected.indices;
  log("affected rows: " + std::to_string(affected.indices.size()) + " (G0 " + std::to_string(affected.group0.size()) +
      ", G1 " + std::to_string(affected.group1.size()) + ")");

  const Autoencoder ae = fit_autoencoder(config, train);

  std::vector<std::pair<std::string, std::vector<std::size_t>>> pops;
  pops.emplace_back("Whole", affected.indices);
  if (config.clusters > 0) {
    art.clustering = staged("cluster", [&] {
      const Population whole = make_population(ds, affected.indices);
      const std::size_t excluded[] = {ds.schema().protected_index()};
      return kmeans_fit(whole.rows, config.clusters, derive_seed(config.seed, kCluster), 300, excluded);
    });
    for (int c = 0; c < config.clusters; ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t m : art.clustering->members(c)) rows.push_back(affected.indices[m]);
      pops.emplace_back("C" + std::to_string(c + 1), std::move(rows));
    }
  }

  const ActionSpace space(ds.schema());
  std::vector<PopulationResult> results(pops.size());
  std::vector<Population> populations(pops.size());
  for (std::size_t p = 0; p < pops.size(); ++p) {
    PopulationResult& r = results[p];
    r.name = pops[p].first;
    r.rows = pops[p].second;
    populations[p] = make_population(ds, r.rows);
    r.size0 = populations[p].count(0);
    r.size1 = populations[p].count(1);
    if (r.size0 == 0 || r.size1 == 0) {
      r.skipped = true;
      r.skip_reason = std::string("protected group ") + (r.size0 == 0 ? "0" : "1") + " is absent";
      log("WARNING: skipping " + r.name + ": " + r.skip_reason);
    }
  }

  std::vector<std::exception_ptr> errors(pops.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t p = next++; p < pops.size(); p = next++) {
      PopulationResult& r = results[p];
      if (r.skipped) continue;
      try {
        staged(("optimize " + r.name).c_str(), [&] {
          sac::SacConfig sc = config.sac;
          sc.seed = derive_seed(config.seed, kPopulation + p);
          std::ostringstream trajectory;
          log("optimizing " + r.name + " (" + std::to_string(populations[p].size()) + " individuals)");
          OptimizationResult opt = optimize_action_set(populations[p], art.model, space, config.scenario, sc,
                                                       config.train, config.write_trajectories ? &trajectory : nullptr);
          r.actions = std::move(opt.actions);
          r.trace = std::move(opt.trace);
          r.trajectory = trajectory.str();
          return 0;
        });
        staged(("evaluate " + r.name).c_str(), [&] {
          evaluate_population(r, populations[p], art.model, ae, space, config.scenario);
          return 0;
        });
        log(r.name + ": SR [" + fmt("%.3f", r.snapshot.sr0) + ", " + fmt("%.3f", r.snapshot.sr1) + "], counts [" +
            std::to_string(r.snapshot.a0_count) + ", " + std::to_string(r.snapshot.a1_count) + "], gower " +
            fmt("%.3f", r.snapshot.mean_gower) + (r.targets_met ? ", targets met" : ", targets not met"));
      } catch (...) {
        errors[p] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(worker_threads(config.threads), static_cast<int>(pops.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  FairnessReport& report = art.report;
  report.scenario = config.scenario;
  report.schema = ds.schema();
  report.populations = std::move(results);
  report.affected = affected.indices.size();
  report.seed = config.seed;
  report.config_echo = config.to_json();
  return art;
}

FairnessReport cmd_run(const RunConfig& config, std::ostream* log) {
  if (config.out.empty()) throw ConfigError("--out is required");
  const fs::path out = fs::absolute(config.out).lexically_normal();
  if (fs::exists(out) && !(fs::is_directory(out) && fs::is_empty(out))) {
    throw ConfigError("output directory " + out.string() + " already exists and is not empty");
  }
  const fs::path parent = out.parent_path();
  fs::create_directories(parent);
  const fs::path staging = parent / ("." + out.filename().string() + ".partial");
  fs::remove_all(staging);
  fs::create_directories(staging);

  auto publish = [&] {
    if (fs::exists(out)) fs::remove(out);  // empty by the check above
    fs::rename(staging, out);
  };

  try {
    RunArtifacts art = run_pipeline(config, log);
    const FairnessReport& report = art.report;
    const ActionSpace space(report.schema);
    write_text(staging / "report.json", report.to_json().dump(2) + "\n");
    write_text(staging / "report.txt", report.table());
    write_text(staging / "audit.json", rounded(report.audit.to_json()).dump(2) + "\n");
    write_text(staging / "model.json", art.model.to_json(report.schema).dump(2) + "\n");
    nlohmann::json cfg = config.to_json();
    cfg["data"] = config.data.string();
    cfg["schema"] = config.schema.string();
    write_text(staging / "config.json", cfg.dump(2) + "\n");
    if (art.clustering) {
      std::ofstream csv(staging / "clusters.csv");
      write_assignments(csv, *art.clustering, art.affected_rows);
    }
    for (const auto& p : report.populations) {
      if (p.skipped) continue;
      write_text(staging / ("actions_" + p.name + ".json"),
                 action_set_json(p.actions, p.action_summaries, space).dump(2) + "\n");
      std::ostringstream trace;
      p.trace.write_csv(trace);
      write_text(staging / ("trace_" + p.name + ".csv"), trace.str());
      if (config.write_trajectories) write_text(staging / ("trajectory_" + p.name + ".jsonl"), p.trajectory);
    }
    publish();
    return report;
  } catch (const Error& e) {
    try {
      write_text(staging / "INCOMPLETE",
                 "stage: " + (e.stage().empty() ? std::string("unknown") : e.stage()) + "\nerror: " + e.what() + "\n");
      publish();
    } catch (...) {
    }
    throw;
  } catch (const std::exception& e) {
    try {
      write_text(staging / "INCOMPLETE", std::string("error: ") + e.what() + "\n");
      publish();
    } catch (...) {
    }
    throw;
  }
}

AuditResult cmd_audit(const RunConfig& config) {
  Loaded loaded = load_and_split(config);
  const Dataset test = loaded.ds.subset(loaded.split.test);
  AuditResult result;
  if (config.predictions) {
    const ScoreTableClassifier h = staged("classifier", [&] { return load_prediction_file(*config.predictions, loaded.ds); });
    result.audit = staged("audit", [&] { return audit_fairness(h, test); });
  } else {
    const LogisticRegression h =
        staged("classifier", [&] { return train_classifier(loaded.ds.subset(loaded.split.train), config.classifier); });
    result.audit = staged("audit", [&] { return audit_fairness(h, test); });
  }
  if (result.audit.dp_difference > 0.10) {
    result.warnings.push_back("demographic parity difference " + fmt("%.4f", result.audit.dp_difference) +
                              " exceeds 0.10");
  }
  if (result.audit.eo_difference > 0.10) {
    result.warnings.push_back("equalized odds difference " + fmt("%.4f", result.audit.eo_difference) +
                              " exceeds 0.10");
  }
  return result;
}

nlohmann::json BaselineReport::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& b : groups) {
    g.push_back({{"size", b.size},
                 {"found", b.found},
                 {"cf_quality", b.quality ? rounded(b.quality->to_json()) : nlohmann::json(nullptr)}});
  }
  return {{"method", "nun-greedy"}, {"groups", std::move(g)}};
}

BaselineReport cmd_baseline(const RunConfig& config) {
  Loaded loaded = load_and_split(config);
  const Dataset& ds = loaded.ds;
  const Dataset train = ds.subset(loaded.split.train);
  const LogisticRegression h = staged("classifier", [&] { return train_classifier(train, config.classifier); });
  const AffectedSet affected = staged("affected", [&] { return affected_subset(ds, h); });
  const Autoencoder ae = fit_autoencoder(config, train);
  const ActionSpace space(ds.schema());

  return staged("baseline", [&] {
    const NunIndex index(ds.normalized_rows(), h, space);
    BaselineReport report;
    std::array<std::vector<CfPair>, 2> pairs;
    for (std::size_t row : affected.indices) {
      const Instance& x = ds.normalized_row(row);
      const int g = ds.group(row);
      auto r = nun_counterfactual(x, index, h);
      if (r) ++report.groups[g].found;
      // A miss keeps the original point, which counts as invalid.
      pairs[g].push_back(CfPair{x, r ? r->counterfactual : x});
    }
    for (int g = 0; g < 2; ++g) {
      report.groups[g].size = pairs[g].size();
      if (!pairs[g].empty()) report.groups[g].quality = cf_quality(pairs[g], h, ae, space);
    }
    return report;
  });
}

// ---------------------------------------------------------------------------
// Trace plot

std::string trace_svg(const sac::TrainingTrace& trace) {
  constexpr double kWidth = 720, kPanel = 260, kMargin = 56, kGap = 40;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << 2 * kPanel + kGap + 2 * kMargin << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto panel = [&](double top, const char* title, auto value, const char* color) {
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    if (!trace.rows.empty()) {
      x_min = static_cast<double>(trace.rows.front().step);
      x_max = static_cast<double>(trace.rows.back().step);
      y_min = y_max = value(trace.rows.front());
      for (const auto& r : trace.rows) {
        y_min = std::min(y_min, value(r));
        y_max = std::max(y_max, value(r));
      }
    }
    if (x_max <= x_min) x_max = x_min + 1;
    if (y_max <= y_min) {
      y_min -= 0.5;
      y_max += 0.5;
    }
    const double left = kMargin, right = kWidth - 20, bottom = top + kPanel;
    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (right - left); };
    auto py = [&](double y) { return bottom - (y - y_min) / (y_max - y_min) * kPanel; };

    svg << "<text x=\"" << left << "\" y=\"" << top - 8 << "\" font-weight=\"bold\">" << title << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\"" << kPanel
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double yv = y_min + (y_max - y_min) * t / 4.0;
      svg << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt("%.3g", yv)
          << "</text>\n";
      const double xv = x_min + (x_max - x_min) * t / 4.0;
      svg << "<text x=\"" << px(xv) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">" << fmt("%.0f", xv)
          << "</text>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : trace.rows) svg << fmt("%.2f", px(static_cast<double>(r.step))) << ',' << fmt("%.2f", py(value(r))) << ' ';
    svg << "\"/>\n";
  };

  panel(kMargin, "Episode reward mean", [](const sac::TraceRow& r) { return r.episode_reward_mean; }, "#1f77b4");
  panel(kMargin + kPanel + kGap, "Entropy coefficient", [](const sac::TraceRow& r) { return r.entropy_coefficient; },
        "#d62728");
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << 2 * kPanel + kGap + 2 * kMargin - 8
      << "\" text-anchor=\"middle\">step</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace faircf
