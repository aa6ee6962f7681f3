#include "doctest.h"
#include "faircf/baseline.hpp"
#include "faircf/errors.hpp"
#include "support.hpp"

using namespace faircf;
using faircf::testing::linear_classifier;
using faircf::testing::unit_schema;

TEST_CASE("one copied feature is enough when it alone flips the decision") {
  const ActionSpace space(unit_schema(2));
  const auto h = linear_classifier({10.0, 1.0}, -5.0, 3);  // favorable iff 10 x0 + x1 > 5
  const std::vector<Instance> pool = {{0.9, 0.9, 1.0}, {0.1, 0.1, 0.0}};
  const NunIndex index(pool, h, space);
  CHECK(index.size() == 1);
  const Instance x = {0.2, 0.2, 0.0};
  const auto r = nun_counterfactual(x, index, h);
  REQUIRE(r);
  CHECK(r->changed == 1);
  CHECK(r->counterfactual == Instance{0.9, 0.2, 0.0});
  CHECK(h.predict(r->counterfactual) == 1);
}

TEST_CASE("counterfactuals change only actionable columns and stay in range") {
  const ActionSpace space(unit_schema(2, 1));
  const auto h = linear_classifier({2.0, 2.0, 1.0}, -3.0, 4);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Instance> pool;
  for (int i = 0; i < 50; ++i) pool.push_back({u(rng), u(rng), u(rng), i % 2 ? 1.0 : 0.0});
  const NunIndex index(pool, h, space);
  int found = 0;
  for (int i = 0; i < 100; ++i) {
    const Instance x = {0.3 * u(rng), 0.3 * u(rng), u(rng), i % 2 ? 1.0 : 0.0};
    const auto r = nun_counterfactual(x, index, h);
    if (!r) continue;
    ++found;
    CHECK(h.predict(r->counterfactual) == 1);
    CHECK(r->counterfactual[2] == x[2]);
    CHECK(r->counterfactual[3] == x[3]);
    CHECK(r->changed >= 1);
    CHECK(r->changed <= 2);
    for (double v : r->counterfactual) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(found > 0);
}

TEST_CASE("no counterfactual when actionable features cannot flip the decision") {
  const ActionSpace space(unit_schema(1, 1));
  const auto h = linear_classifier({0.0, 10.0}, -5.0, 3);  // depends on the inert column only
  const std::vector<Instance> pool = {{0.9, 0.9, 0.0}};
  const NunIndex index(pool, h, space);
  CHECK_FALSE(nun_counterfactual(Instance{0.1, 0.1, 0.0}, index, h));
}

TEST_CASE("nearest neighbor ties go to the lowest index") {
  const ActionSpace space(unit_schema(1));
  const auto h = linear_classifier({10.0}, -5.0, 2);
  const std::vector<Instance> pool = {{0.9, 0.0}, {0.7, 1.0}, {0.7, 0.0}};
  const NunIndex index(pool, h, space);
  CHECK(index.nearest(Instance{0.4, 0.0}) == 1);
}

TEST_CASE("an empty favorable pool is an error") {
  const ActionSpace space(unit_schema(1));
  const auto h = linear_classifier({10.0}, -5.0, 2);
  const std::vector<Instance> pool = {{0.1, 0.0}};
  CHECK_THROWS_AS(NunIndex(pool, h, space), EmptyPopulationError);
}
