#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "faircf/errors.hpp"
#include "faircf/fairness.hpp"
#include "faircf/model.hpp"
#include "faircf/pipeline.hpp"
#include "faircf/recourse.hpp"
#include "faircf/rl_env.hpp"
#include "faircf/synthetic.hpp"
#include "faircf/tabular.hpp"

namespace py = pybind11;
using namespace faircf;

namespace {

ActionSet to_action_set(const std::vector<std::vector<double>>& deltas) {
  ActionSet set;
  for (const auto& d : deltas) set.actions.push_back(Action{d});
  return set;
}

Population to_population(const std::vector<Instance>& rows, const std::vector<int>& groups) {
  if (rows.size() != groups.size()) throw ShapeError("rows and groups differ in length");
  Population p;
  p.rows = rows;
  p.groups = groups;
  for (std::size_t i = 0; i < rows.size(); ++i) p.source_rows.push_back(i);
  return p;
}

RunConfig run_config(const std::string& config_json, const std::string& data, const std::string& schema) {
  RunConfig c = RunConfig::from_json(nlohmann::json::parse(config_json.empty() ? "{}" : config_json));
  c.data = data;
  c.schema = schema;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fair counterfactual action sets for tabular binary classifiers.";

  static py::exception<Error> base(m, "FaircfError");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DataError> data_error(m, "DataError", base.ptr());
  static py::exception<DivergenceError> divergence_error(m, "DivergenceError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    } catch (const DivergenceError& e) {
      py::set_error(divergence_error, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<FeatureSchema>(m, "Schema")
      .def_static("load", &FeatureSchema::load, py::arg("path"))
      .def_static(
          "from_json", [](const std::string& text) { return FeatureSchema::from_json(nlohmann::json::parse(text)); },
          py::arg("text"))
      .def("to_json", [](const FeatureSchema& s) { return s.to_json().dump(); })
      .def_property_readonly("names",
                             [](const FeatureSchema& s) {
                               std::vector<std::string> out;
                               for (const auto& f : s.features()) out.push_back(f.name);
                               return out;
                             })
      .def_property_readonly("actionable", &FeatureSchema::actionable_indices)
      .def_property_readonly("protected", &FeatureSchema::protected_feature)
      .def_property_readonly("target", &FeatureSchema::target_feature)
      .def("normalize", [](const FeatureSchema& s, const Instance& raw) { return s.normalize(raw); }, py::arg("raw"))
      .def(
          "denormalize", [](const FeatureSchema& s, const Instance& x) { return s.denormalize(x); },
          py::arg("normalized"))
      .def("fingerprint", &FeatureSchema::fingerprint)
      .def("__len__", &FeatureSchema::size);

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", py::overload_cast<const std::filesystem::path&, const std::filesystem::path&>(&load_csv),
                  py::arg("csv"), py::arg("schema"))
      .def_property_readonly("schema", &Dataset::schema)
      .def_property_readonly("rows", &Dataset::rows)
      .def_property_readonly("normalized", &Dataset::normalized_rows)
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("groups",
                             [](const Dataset& d) {
                               std::vector<int> g;
                               for (std::size_t i = 0; i < d.size(); ++i) g.push_back(d.group(i));
                               return g;
                             })
      .def("__len__", &Dataset::size);

  py::class_<LogisticRegression>(m, "LogisticRegression")
      .def(py::init<std::vector<double>, double, double>(), py::arg("weights"), py::arg("bias"),
           py::arg("threshold") = 0.5)
      .def("score", [](const LogisticRegression& h, const Instance& x) { return h.score(x); }, py::arg("x"))
      .def("predict", [](const LogisticRegression& h, const Instance& x) { return h.predict(x); }, py::arg("x"))
      .def_property_readonly("weights", &LogisticRegression::weights)
      .def_property_readonly("bias", &LogisticRegression::bias);

  m.def(
      "train_classifier",
      [](const Dataset& ds, double lr, int epochs, double l2) {
        return train_classifier(ds, LogisticConfig{lr, epochs, l2});
      },
      py::arg("dataset"), py::arg("lr") = 0.5, py::arg("epochs") = 500, py::arg("l2") = 1e-4);

  m.def(
      "gower", [](const Instance& x, const Instance& y, const FeatureSchema& s) { return gower(x, y, s); },
      py::arg("x"), py::arg("x_prime"), py::arg("schema"),
      "Mean per-feature Gower distance between two normalized instances.");

  m.def(
      "apply_action",
      [](const FeatureSchema& schema, const Instance& x, const std::vector<double>& deltas) {
        return ActionSpace(schema).apply(x, Action{deltas});
      },
      py::arg("schema"), py::arg("x"), py::arg("deltas"),
      "Applies a delta vector over the actionable features to a normalized instance.");

  m.def(
      "effectiveness",
      [](const std::vector<double>& deltas, const std::vector<Instance>& group, const LogisticRegression& h,
         const FeatureSchema& schema) { return effectiveness(Action{deltas}, group, h, ActionSpace(schema)); },
      py::arg("deltas"), py::arg("group"), py::arg("classifier"), py::arg("schema"));

  m.def(
      "evaluate",
      [](const std::vector<std::vector<double>>& actions, const std::vector<Instance>& rows,
         const std::vector<int>& groups, const LogisticRegression& h, const FeatureSchema& schema,
         const std::string& scenario) {
        ScenarioSpec spec;
        spec.scenario = scenario_from_string(scenario);
        const FairnessSnapshot s =
            compute_snapshot(to_action_set(actions), to_population(rows, groups), h, ActionSpace(schema),
                             spec.snapshot_options());
        return py::make_tuple(s.to_json().dump(), scenario_reward(s, spec), stopping(s, spec));
      },
      py::arg("actions"), py::arg("rows"), py::arg("groups"), py::arg("classifier"), py::arg("schema"),
      py::arg("scenario") = "hybrid",
      "Snapshot JSON, reward and stopping flag for an action set over a population.");

  m.def(
      "write_synthetic",
      [](const std::filesystem::path& dir, std::size_t rows_per_group, std::uint64_t seed, double asymmetry) {
        write_synthetic_dataset(dir, SyntheticConfig{rows_per_group, seed, asymmetry});
      },
      py::arg("dir"), py::arg("rows_per_group") = 300, py::arg("seed") = 7, py::arg("asymmetry") = 0.8);

  m.def(
      "run",
      [](const std::string& config_json, const std::string& data, const std::string& schema,
         const std::string& out) {
        RunConfig c = run_config(config_json, data, schema);
        c.out = out;
        py::gil_scoped_release release;
        return cmd_run(c).to_json().dump();
      },
      py::arg("config_json"), py::arg("data"), py::arg("schema"), py::arg("out"));

  m.def(
      "audit",
      [](const std::string& config_json, const std::string& data, const std::string& schema) {
        const AuditResult r = cmd_audit(run_config(config_json, data, schema));
        return py::make_tuple(r.audit.to_json().dump(), r.warnings);
      },
      py::arg("config_json"), py::arg("data"), py::arg("schema"));
}
