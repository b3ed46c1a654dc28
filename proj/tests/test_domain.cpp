#include <catch2/catch_amalgamated.hpp>

#include "bidctl/domain.hpp"
#include "bidctl/serialize.hpp"

using namespace bidctl;

namespace {

CampaignConfig template_config() {
  CampaignConfig c;
  c.budget = 100.0;
  c.value_per_click = 2.0;
  c.min_bid_cpm = 0.1;
  c.max_bid_cpm = 20.0;
  c.num_intervals = 10;
  c.auctions_per_interval = 100;
  c.goals = {{KpiKind::Pacing, 1.0, GoalDirection::AtLeast},
             {KpiKind::Cpc, 2.0, GoalDirection::AtMost},
             {KpiKind::Viewability, 0.6, GoalDirection::AtLeast}};
  return c;
}

bool has_code(const std::vector<ConfigIssue>& issues, ConfigErrorCode code) {
  for (const auto& i : issues)
    if (i.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("template config validates cleanly", "[domain]") {
  CHECK(validate_config(template_config()).empty());
}

TEST_CASE("zero goal value is rejected by name", "[domain]") {
  auto c = template_config();
  c.goals[1].goal_value = 0.0;
  auto issues = validate_config(c);
  REQUIRE(has_code(issues, ConfigErrorCode::NonPositiveGoal));
}

TEST_CASE("duplicate KPI in the priority order is rejected", "[domain]") {
  auto c = template_config();
  c.goals = {{KpiKind::Pacing, 1.0, GoalDirection::AtLeast},
             {KpiKind::Pacing, 2.0, GoalDirection::AtLeast}};
  auto issues = validate_config(c);
  REQUIRE(has_code(issues, ConfigErrorCode::DuplicatePriority));
}

TEST_CASE("inverted bid caps are rejected", "[domain]") {
  auto c = template_config();
  c.min_bid_cpm = 5.0;
  c.max_bid_cpm = 1.0;
  REQUIRE(has_code(validate_config(c), ConfigErrorCode::BidCapInverted));
}

TEST_CASE("empty goal list is rejected", "[domain]") {
  auto c = template_config();
  c.goals.clear();
  REQUIRE(has_code(validate_config(c), ConfigErrorCode::EmptyGoalList));
}

TEST_CASE("every violation is reported, not just the first", "[domain]") {
  auto c = template_config();
  c.budget = -1.0;
  c.min_bid_cpm = 5.0;
  c.max_bid_cpm = 1.0;
  c.goals[0].goal_value = -2.0;
  auto issues = validate_config(c);
  CHECK(has_code(issues, ConfigErrorCode::NegativeBudget));
  CHECK(has_code(issues, ConfigErrorCode::BidCapInverted));
  CHECK(has_code(issues, ConfigErrorCode::NonPositiveGoal));
}

TEST_CASE("ensure_valid throws with all issues attached", "[domain]") {
  auto c = template_config();
  c.goals.clear();
  REQUIRE_THROWS_AS(ensure_valid(c), InvalidConfigError);
}

TEST_CASE("default weight matrix matches the standard table", "[domain]") {
  WeightMatrix w;
  CHECK(w.at(KpiKind::Pacing, LeverKind::Tolerance) == -0.5);
  CHECK(w.at(KpiKind::Pacing, LeverKind::BidMultiplier) == 0.5);
  CHECK(w.at(KpiKind::Pacing, LeverKind::ViewabilityThreshold) == 0.0);
  CHECK(w.at(KpiKind::Cpc, LeverKind::Tolerance) == -0.5);
  CHECK(w.at(KpiKind::Cpc, LeverKind::BidMultiplier) == 0.5);
  CHECK(w.at(KpiKind::Cpc, LeverKind::ViewabilityThreshold) == 0.0);
  CHECK(w.at(KpiKind::Viewability, LeverKind::Tolerance) == 0.0);
  CHECK(w.at(KpiKind::Viewability, LeverKind::BidMultiplier) == 0.0);
  CHECK(w.at(KpiKind::Viewability, LeverKind::ViewabilityThreshold) == 1.0);
  // CPA moves the same levers as CPC.
  CHECK(w.at(KpiKind::Cpa, LeverKind::Tolerance) == -0.5);
  CHECK(w.at(KpiKind::Cpa, LeverKind::BidMultiplier) == 0.5);
}

TEST_CASE("default weights satisfy the direction sign convention",
          "[domain]") {
  CHECK(weight_directions_ok(WeightMatrix{}));
  WeightMatrix bad;
  bad.set(KpiKind::Pacing, LeverKind::Tolerance, 0.25);
  CHECK_FALSE(weight_directions_ok(bad));
}

TEST_CASE("weight matrix round-trips through JSON bit-exactly", "[domain]") {
  WeightMatrix w;
  w.set(KpiKind::Pacing, LeverKind::Tolerance, -0.123456789012345678);
  w.set(KpiKind::Viewability, LeverKind::ViewabilityThreshold, 0.7);
  const json j = w;
  const auto back = j.get<WeightMatrix>();
  for (KpiKind k : kAllKpis)
    for (LeverKind l : kAllLevers)
      REQUIRE(back.at(k, l) == w.at(k, l));
}

TEST_CASE("lever state get/set covers every lever", "[domain]") {
  LeverState s;
  CHECK(s.tolerance == 0.0);
  CHECK(s.bid_multiplier == 1.0);
  CHECK(s.viewability_threshold == 0.01);
  for (LeverKind l : kAllLevers) {
    s.set(l, 0.42);
    CHECK(s.get(l) == 0.42);
  }
}

TEST_CASE("campaign config JSON round-trip preserves goals and order",
          "[domain]") {
  const auto c = template_config();
  const json j = c;
  const auto back = j.get<CampaignConfig>();
  REQUIRE(back.goals.size() == c.goals.size());
  CHECK(back.budget == c.budget);
  CHECK(back.goals[1].kind == KpiKind::Cpc);
  CHECK(back.goals[1].goal_value == 2.0);
  CHECK(back.goals[1].direction == GoalDirection::AtMost);
  CHECK(back.priority_order() == c.priority_order());
}
