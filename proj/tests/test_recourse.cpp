#include <cmath>
#include <random>

#include "doctest.h"
#include "faircf/errors.hpp"
#include "faircf/model.hpp"
#include "faircf/recourse.hpp"
#include "support.hpp"

using namespace faircf;
using faircf::testing::unit_schema;

namespace {

FeatureSpec feature(std::string name, FeatureKind kind, double lo, double hi, bool actionable) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = kind;
  f.observed_min = lo;
  f.observed_max = hi;
  f.actionable = actionable;
  return f;
}

// income in thousands on [0, 10], education level 1..16, protected g.
FeatureSchema income_schema() {
  return FeatureSchema({feature("income", FeatureKind::kContinuous, 0, 10, true),
                        feature("education", FeatureKind::kOrdinal, 1, 16, true),
                        feature("age", FeatureKind::kContinuous, 18, 80, false),
                        feature("g", FeatureKind::kNominal, 0, 1, false)},
                       "g", "y");
}

Autoencoder identity_like_autoencoder(int d) {
  nn::Mlp net({d, 2, d});
  net.params().setZero();
  return Autoencoder(std::move(net));
}

}  // namespace

TEST_CASE("raw income 2k plus 1k lands on 3k") {
  const ActionSpace space(income_schema());
  const FeatureSchema& s = space.schema();
  const Instance x = s.normalize(std::vector<double>{2.0, 9.0, 30.0, 0.0});
  const Action a{{s.normalize("income", 1.0) - s.normalize("income", 0.0), 0.0}};
  const Instance cf = space.apply(x, a);
  CHECK(s.denormalize("income", cf[0]) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(space.raw_deltas(a)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cf[1] == x[1]);
  CHECK(cf[2] == x[2]);
}

TEST_CASE("zero action is the identity and saturation clips at 1") {
  const ActionSpace space(unit_schema(2));
  const Instance x = {0.9, 0.3, 1.0};
  CHECK(space.apply(x, space.zero_action()) == x);
  const Instance cf = space.apply(x, Action{{0.5, -0.5}});
  CHECK(cf[0] == 1.0);
  CHECK(cf[1] == 0.0);
  CHECK(cf[2] == 1.0);
}

TEST_CASE("ordinal deltas round to whole levels, half away from zero") {
  const ActionSpace space(income_schema());
  const FeatureSchema& s = space.schema();
  const Instance x = s.normalize(std::vector<double>{2.0, 9.0, 30.0, 0.0});
  const double level = 1.0 / 15.0;  // one education level in normalized units
  auto edu = [&](double delta) { return s.denormalize("education", space.apply(x, Action{{0.0, delta}})[1]); };
  CHECK(edu(2 * level) == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(edu(0.5 * level) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(edu(0.49 * level) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(edu(-0.6 * level) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(edu(5.0) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(edu(-5.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deltas below the zero threshold are ignored") {
  const ActionSpace space(unit_schema(2));
  const Action tiny{{5e-7, -5e-7}};
  CHECK(tiny.is_zero());
  const Instance x = {0.4, 0.4, 0.0};
  CHECK(space.apply(x, tiny) == x);
  CHECK(space.raw_deltas(tiny) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("apply is monotone in a positive delta") {
  const ActionSpace space(income_schema());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const Instance x = {u(rng), u(rng), u(rng), 0.0};
    const double d1 = u(rng), d2 = d1 + u(rng);
    for (std::size_t k = 0; k < 2; ++k) {
      Action a1{{0.0, 0.0}}, a2{{0.0, 0.0}};
      a1.deltas[k] = d1;
      a2.deltas[k] = d2;
      CHECK(space.apply(x, a2)[k] >= space.apply(x, a1)[k]);
    }
  }
}

TEST_CASE("gower worked examples") {
  // Two continuous features on [0, 1].
  const FeatureSchema two({feature("a", FeatureKind::kContinuous, 0, 1, true),
                           feature("b", FeatureKind::kContinuous, 0, 1, false)},
                          "b", "y");
  CHECK(gower(std::vector<double>{0.2, 0.1}, std::vector<double>{0.5, 0.4}, two) ==
        doctest::Approx(0.3).epsilon(1e-12));
  // A nominal mismatch and an equal continuous value.
  const FeatureSchema mixed({feature("a", FeatureKind::kContinuous, 0, 1, true),
                             feature("g", FeatureKind::kNominal, 0, 1, false)},
                            "g", "y");
  CHECK(gower(std::vector<double>{0.4, 0.0}, std::vector<double>{0.4, 1.0}, mixed) == 0.5);
  CHECK(gower(std::vector<double>{0.4, 0.0}, std::vector<double>{0.4, 0.0}, mixed) == 0.0);
  CHECK_THROWS_AS(gower(std::vector<double>{0.4}, std::vector<double>{0.4, 0.0}, mixed), ShapeError);
}

TEST_CASE("gower is a bounded pseudo-metric") {
  const FeatureSchema s = income_schema();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&] { return Instance{u(rng), u(rng), u(rng), u(rng) < 0.5 ? 0.0 : 1.0}; };
  for (int t = 0; t < 1000; ++t) {
    const Instance x = draw(), y = draw(), z = draw();
    const double xy = gower(x, y, s), yx = gower(y, x, s), xz = gower(x, z, s), zy = gower(z, y, s);
    CHECK(xy >= 0.0);
    CHECK(xy <= 1.0);
    CHECK(xy == yx);
    CHECK(gower(x, x, s) == 0.0);
    CHECK(xy <= xz + zy + 1e-12);
  }
}

TEST_CASE("select_best picks the closest valid action") {
  const ActionSpace space(unit_schema(2));
  const auto h = faircf::testing::sum_at_least_one();
  const Instance x = {0.4, 0.4, 0.0};
  // Gower over 3 features: 0.9 / 3 = 0.3 and 0.3 / 3 = 0.1.
  ActionSet set{{Action{{0.45, 0.45}}, Action{{0.3, 0.0}}}};
  auto best = select_best(x, set, h, space);
  REQUIRE(best);
  CHECK(best->action_index == 1);
  CHECK(best->gower == doctest::Approx(0.1).epsilon(1e-12));

  ActionSet none{{Action{{0.0, 0.1}}, Action{{-0.2, 0.0}}}};
  CHECK_FALSE(select_best(x, none, h, space));

  // Equal cost at indices 1 and 3.
  ActionSet tie{{Action{{0.0, 0.0}}, Action{{0.2, 0.4}}, Action{{0.0, 0.05}}, Action{{0.4, 0.2}}}};
  best = select_best(x, tie, h, space);
  REQUIRE(best);
  CHECK(best->action_index == 1);
}

TEST_CASE("select_best agrees with exhaustive enumeration") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const auto c = faircf::testing::random_case(rng, 10, 5);
    const ActionSpace space(c.schema);
    for (const auto& x : c.population.rows) {
      const auto got = select_best(x, c.actions, c.h, space);
      std::optional<std::size_t> want;
      double want_g = 0.0;
      for (std::size_t a = 0; a < c.actions.size(); ++a) {
        const Instance cf = space.apply(x, c.actions.actions[a]);
        if (c.h.predict(cf) != 1) continue;
        const double g = gower(x, cf, c.schema);
        if (!want || g < want_g) {
          want = a;
          want_g = g;
        }
      }
      REQUIRE(got.has_value() == want.has_value());
      if (got) {
        CHECK(got->action_index == *want);
        CHECK(got->gower == want_g);
      }
    }
  }
}

TEST_CASE("cf_quality metrics") {
  const ActionSpace space(unit_schema(3));
  const FunctionClassifier h([](std::span<const double> x) { return x[0] + x[1] + x[2] >= 1.5 ? 1.0 : 0.0; });
  const Autoencoder ae = identity_like_autoencoder(4);
  std::vector<CfPair> pairs;
  const Instance x = {0.2, 0.2, 0.2, 1.0};
  pairs.push_back({x, space.apply(x, Action{{0.6, 0.6, 0.0}})});
  pairs.push_back({x, space.apply(x, Action{{0.0, 0.7, 0.7}})});
  const CfQuality q = cf_quality(pairs, h, ae, space);
  CHECK(q.validity == 1.0);
  CHECK(q.minimality == 2.0);
  CHECK(q.actionability);
  CHECK(q.count == 2);
  CHECK(q.similarity == doctest::Approx((1.2 / 4 + 1.4 / 4) / 2).epsilon(1e-12));
  CHECK(q.minimality <= static_cast<double>(space.actionable_count()));

  // A change on the protected column breaks actionability.
  std::vector<CfPair> bad = {{x, Instance{0.9, 0.9, 0.2, 0.0}}};
  CHECK_FALSE(cf_quality(bad, h, ae, space).actionability);
  CHECK_THROWS_AS(cf_quality(std::vector<CfPair>{}, h, ae, space), DataError);
}

TEST_CASE("minimality counts changes after ordinal rounding") {
  const ActionSpace space(income_schema());
  const FunctionClassifier h([](std::span<const double>) { return 1.0; });
  const Autoencoder ae = identity_like_autoencoder(4);
  const Instance x = space.schema().normalize(std::vector<double>{2.0, 9.0, 30.0, 0.0});
  // 0.3 of a level rounds away; only income changes.
  const Instance cf = space.apply(x, Action{{0.1, 0.3 / 15.0}});
  const CfQuality q = cf_quality(std::vector<CfPair>{{x, cf}}, h, ae, space);
  CHECK(q.minimality == 1.0);
}

TEST_CASE("action sets flatten row-major") {
  ActionSet set{{Action{{1, 2, 3}}, Action{{4, 5, 6}}}};
  const auto flat = set.flatten();
  CHECK(flat == std::vector<double>{1, 2, 3, 4, 5, 6});
  const ActionSet back = ActionSet::unflatten(flat, 3);
  CHECK(back.actions[1].deltas == std::vector<double>{4, 5, 6});
  CHECK_THROWS_AS(ActionSet::unflatten(flat, 4), ShapeError);
}
