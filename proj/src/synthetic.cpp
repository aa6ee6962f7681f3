#include "faircf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "faircf/errors.hpp"

namespace faircf {

namespace {

struct Blob {
  double income;
  double credit;
  double education;
};

// Linear label rule in raw units.
double label_score(double income, double credit, double education, double age) {
  return (income - 40.0) / 10.0 + (credit - 620.0) / 50.0 + (education - 10.0) / 2.0 +
         0.1 * (age - 40.0) / 10.0;
}

}  // namespace

FeatureSchema synthetic_schema() {
  std::vector<FeatureSpec> f(5);
  f[0].name = "income";
  f[0].actionable = true;
  f[1].name = "credit";
  f[1].actionable = true;
  f[2].name = "education";
  f[2].kind = FeatureKind::kOrdinal;
  f[2].actionable = true;
  f[3].name = "age";
  f[4].name = "group";
  f[4].kind = FeatureKind::kNominal;
  return FeatureSchema(std::move(f), "group", "approved");
}

Dataset make_synthetic_dataset(const SyntheticConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // One unit of the label rule is 10 income, 50 credit or 2 education levels;
  // the asymmetry is spread evenly over the three.
  const double shift = config.asymmetry;
  const Blob blobs[2][2] = {
      {{52.0, 660.0, 11.0}, {36.0, 600.0, 9.0}},
      {{52.0 - 10.0 * shift / 3, 660.0 - 50.0 * shift / 3, 11.0 - 2.0 * shift / 3},
       {36.0 - 10.0 * shift / 3, 600.0 - 50.0 * shift / 3, 9.0 - 2.0 * shift / 3}},
  };
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (int g = 0; g < 2; ++g) {
    for (std::size_t i = 0; i < config.rows_per_group; ++i) {
      const Blob& b = blobs[g][i % 2];
      const double income = std::clamp(b.income + 7.0 * normal(rng), 5.0, 120.0);
      const double credit = std::clamp(b.credit + 35.0 * normal(rng), 300.0, 850.0);
      const double education = std::clamp(std::round(b.education + 1.5 * normal(rng)), 1.0, 16.0);
      const double age = std::clamp(std::round(40.0 + 10.0 * normal(rng)), 18.0, 80.0);
      const double score = label_score(income, credit, education, age) + 0.5 * normal(rng);
      rows.push_back({std::round(income * 10.0) / 10.0, std::round(credit), education, age,
                      static_cast<double>(g)});
      labels.push_back(score >= 0.5 ? 1 : 0);
    }
  }
  return Dataset::fit(synthetic_schema(), std::move(rows), std::move(labels));
}

void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& config) {
  std::filesystem::create_directories(dir);
  const Dataset ds = make_synthetic_dataset(config);
  {
    std::ofstream csv(dir / "data.csv");
    if (!csv) throw DataError("cannot write " + (dir / "data.csv").string());
    for (const auto& f : ds.schema().features()) csv << f.name << ',';
    csv << ds.schema().target_feature() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (double v : ds.row(i)) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        csv << buf << ',';
      }
      csv << ds.label(i) << '\n';
    }
  }
  nlohmann::json schema = {
      {"features",
       {{{"name", "income"}, {"kind", "continuous"}, {"actionable", true}},
        {{"name", "credit"}, {"kind", "continuous"}, {"actionable", true}},
        {{"name", "education"}, {"kind", "ordinal"}, {"actionable", true}},
        {{"name", "age"}, {"kind", "continuous"}, {"actionable", false}},
        {{"name", "group"}, {"kind", "nominal"}, {"actionable", false}}}},
      {"protected", "group"},
      {"target", "approved"}};
  std::ofstream out(dir / "schema.json");
  if (!out) throw DataError("cannot write " + (dir / "schema.json").string());
  out << schema.dump(2) << '\n';
}

}  // namespace faircf
