#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "faircf/fairness.hpp"
#include "faircf/model.hpp"
#include "faircf/recourse.hpp"
#include "faircf/tabular.hpp"

namespace faircf::testing {

// `actionable` continuous features x0.. on [0, 1], then a protected nominal
// column "g" on [0, 1]. Values are already normalized.
inline FeatureSchema unit_schema(std::size_t actionable, std::size_t inert = 0) {
  std::vector<FeatureSpec> f;
  for (std::size_t i = 0; i < actionable; ++i) {
    FeatureSpec s;
    s.name = "x" + std::to_string(i);
    s.actionable = true;
    s.observed_max = 1.0;
    f.push_back(s);
  }
  for (std::size_t i = 0; i < inert; ++i) {
    FeatureSpec s;
    s.name = "z" + std::to_string(i);
    s.observed_max = 1.0;
    f.push_back(s);
  }
  FeatureSpec g;
  g.name = "g";
  g.kind = FeatureKind::kNominal;
  g.observed_max = 1.0;
  f.push_back(g);
  return FeatureSchema(std::move(f), "g", "y");
}

// score = sigmoid(w . x + b) over every column (w for "g" is 0).
inline LogisticRegression linear_classifier(std::vector<double> w_actionable, double bias,
                                            std::size_t total_features) {
  w_actionable.resize(total_features, 0.0);
  return LogisticRegression(std::move(w_actionable), bias);
}

// h = 1 iff x0 + x1 >= 1
inline FunctionClassifier sum_at_least_one() {
  return FunctionClassifier([](std::span<const double> x) { return x[0] + x[1] >= 1.0 - 1e-12 ? 1.0 : 0.0; });
}

inline Population make_pop(std::vector<Instance> rows) {
  Population p;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.groups.push_back(static_cast<int>(rows[i].back()));
    p.source_rows.push_back(i);
  }
  p.rows = std::move(rows);
  return p;
}

struct RandomCase {
  FeatureSchema schema;
  LogisticRegression h;
  Population population;
  ActionSet actions;
};

// Random population (<= max_pop, both groups present), random action set
// (<= max_actions, sometimes with zero actions) and a random linear classifier.
inline RandomCase random_case(std::mt19937_64& rng, std::size_t max_pop = 20, std::size_t max_actions = 4) {
  std::uniform_int_distribution<std::size_t> feat(1, 3);
  const std::size_t l = feat(rng);
  RandomCase c{unit_schema(l), {}, {}, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(l);
  for (auto& v : w) v = n(rng) * 3.0;
  c.h = linear_classifier(w, n(rng), l + 1);

  std::uniform_int_distribution<std::size_t> pop(2, max_pop);
  const std::size_t size = pop(rng);
  std::vector<Instance> rows;
  for (std::size_t i = 0; i < size; ++i) {
    Instance x(l + 1);
    for (std::size_t j = 0; j < l; ++j) x[j] = u(rng);
    x[l] = i < 2 ? static_cast<double>(i) : (u(rng) < 0.5 ? 0.0 : 1.0);
    rows.push_back(x);
  }
  c.population = make_pop(std::move(rows));

  std::uniform_int_distribution<std::size_t> acts(1, max_actions);
  const std::size_t k = acts(rng);
  std::uniform_real_distribution<double> delta(-1.0, 1.0);
  for (std::size_t a = 0; a < k; ++a) {
    Action act{std::vector<double>(l, 0.0)};
    if (u(rng) > 0.2) {
      for (auto& d : act.deltas) d = u(rng) < 0.3 ? 0.0 : delta(rng);
    }
    c.actions.actions.push_back(act);
  }
  return c;
}

// Central differences of f at p; f reads the parameters it is given.
template <typename F>
std::vector<double> numeric_gradient(F&& f, std::vector<double> p, double h = 1e-6) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(p);
    p[i] = keep - h;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// |a - n| / max(|a|, |n|) in the Euclidean norm; 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// Brute-force oracles, written straight from the definitions.
namespace oracle {

inline bool flips(const Instance& x, const Action& a, const Classifier& h, const ActionSpace& s) {
  return h.predict(s.apply(x, a)) == 1;
}

inline double eff(const Action& a, const std::vector<Instance>& g, const Classifier& h, const ActionSpace& s) {
  std::size_t k = 0;
  for (const auto& x : g) k += flips(x, a, h, s) ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(g.size());
}

inline double micro(const ActionSet& A, const std::vector<Instance>& g, const Classifier& h, const ActionSpace& s) {
  std::size_t k = 0;
  for (const auto& x : g) {
    bool any = false;
    for (const auto& a : A.actions) any = any || flips(x, a, h, s);
    k += any ? 1 : 0;
  }
  return static_cast<double>(k) / static_cast<double>(g.size());
}

inline double macro(const ActionSet& A, const std::vector<Instance>& g, const Classifier& h, const ActionSpace& s) {
  double best = 0.0;
  for (const auto& a : A.actions) best = std::max(best, eff(a, g, h, s));
  return best;
}

inline int count_at_least(const ActionSet& A, const std::vector<Instance>& g, const Classifier& h,
                          const ActionSpace& s, double phi) {
  int k = 0;
  for (const auto& a : A.actions) k += eff(a, g, h, s) >= phi ? 1 : 0;
  return k;
}

inline int active(const ActionSet& A, const std::vector<Instance>& all, const Classifier& h, const ActionSpace& s,
                  double alpha) {
  int k = 0;
  for (const auto& a : A.actions) k += (!a.is_zero() && eff(a, all, h, s) >= alpha) ? 1 : 0;
  return k;
}

}  // namespace oracle

}  // namespace faircf::testing
