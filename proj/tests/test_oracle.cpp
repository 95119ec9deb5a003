#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tlsynth/oracle.hpp"

using namespace tlsynth;

namespace {

const char* reach_doc = R"(
states: q1 q2 q3
initial: q1
deterministic: q2 q3
accepting: F1 = {q2}
q1 -- !u & !t --> q1
q1 -- t --> q2
q1 -- u --> q3
q2 -- t --> q2
q3 -- u --> q3
)";

ChainEnv reach_chain(int n) {
  std::vector<Label> labels(static_cast<std::size_t>(n));
  labels.front() = {"u"};
  labels.back() = {"t"};
  return ChainEnv(n, std::move(labels));
}

}  // namespace

TEST_CASE("oracle solves the single-state self-loop", "[oracle]") {
  FiniteMdp mdp = FiniteMdp::make(1, 1);
  mdp.transitions[0][0].push_back({1.0, 0, 1.0});
  const OracleSolution sol = exact_dp_oracle(mdp, 0.9);
  // geometric series 1/(1-gamma)
  REQUIRE_THAT(sol.at(0, 0), Catch::Matchers::WithinAbs(10.0, 1e-6));
}

TEST_CASE("oracle prefers the rewarded direction on a 2-cell chain",
          "[oracle]") {
  // actions: 0 = left, 1 = right; reward on entering the right cell
  FiniteMdp mdp = FiniteMdp::make(2, 2);
  mdp.transitions[0][0].push_back({1.0, 0, 0.0});
  mdp.transitions[0][1].push_back({1.0, 1, 1.0});
  mdp.transitions[1][0].push_back({1.0, 0, 0.0});
  mdp.transitions[1][1].push_back({1.0, 1, 1.0});
  const OracleSolution sol = exact_dp_oracle(mdp, 0.9);
  REQUIRE(sol.policy(0) == 1);
  REQUIRE(sol.policy(1) == 1);
}

TEST_CASE("oracle handles stochastic outcomes", "[oracle]") {
  // one state, one action, half chance of reward 1: value = 0.5/(1-gamma)
  FiniteMdp mdp = FiniteMdp::make(1, 1);
  mdp.transitions[0][0].push_back({0.5, 0, 1.0});
  mdp.transitions[0][0].push_back({0.5, 0, 0.0});
  const OracleSolution sol = exact_dp_oracle(mdp, 0.9);
  REQUIRE_THAT(sol.at(0, 0), Catch::Matchers::WithinAbs(5.0, 1e-6));
}

TEST_CASE("chain product enumeration matches hand analysis", "[oracle]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(20);
  const ChainProduct cp = enumerate_chain_product(env, aut, 1.0);
  REQUIRE(cp.mdp.n_states == 20 * 3 + 1);
  REQUIRE(cp.mdp.n_actions == 3);

  const OracleSolution sol = exact_dp_oracle(cp.mdp, 0.9);

  const AutState q1 = aut.state_id("q1");
  const AutState q2 = aut.state_id("q2");
  const AutState q3 = aut.state_id("q3");

  // in the middle of the chain the unique optimal action is `right`
  for (int cell = 2; cell <= 17; ++cell) {
    const int s = cp.index(cell, q1);
    REQUIRE(sol.policy(s) == 1);
    REQUIRE(sol.is_optimal(s, 1));
    REQUIRE_FALSE(sol.is_optimal(s, 0));
  }

  // entering the target pays 1 and staying keeps paying, so the value at
  // cell 18 is 1 + 0.9/(1-0.9)*0.9... = 10, scaled by 0.9 per cell leftwards
  REQUIRE_THAT(sol.state_value(cp.index(18, q1)),
               Catch::Matchers::WithinAbs(10.0, 1e-6));
  REQUIRE_THAT(sol.state_value(cp.index(17, q1)),
               Catch::Matchers::WithinAbs(9.0, 1e-6));
  REQUIRE_THAT(sol.state_value(cp.index(10, q1)),
               Catch::Matchers::WithinAbs(10.0 * std::pow(0.9, 8), 1e-6));

  // at the accepting state on the target cell, right and stay both keep
  // collecting the reward; left leads to the sink
  const int target_q2 = cp.index(19, q2);
  REQUIRE(sol.is_optimal(target_q2, 1));
  REQUIRE(sol.is_optimal(target_q2, 2));
  REQUIRE_FALSE(sol.is_optimal(target_q2, 0));
  REQUIRE_THAT(sol.state_value(target_q2),
               Catch::Matchers::WithinAbs(10.0, 1e-6));

  // trap rows and off-target accepting rows are all-zero: everything ties
  REQUIRE(sol.state_value(cp.index(5, q3)) == 0.0);
  REQUIRE(sol.state_value(cp.index(5, q2)) == 0.0);
  REQUIRE(sol.is_optimal(cp.index(5, q3), 0));
  REQUIRE(sol.is_optimal(cp.index(5, q3), 2));
}

TEST_CASE("enumeration rejects unsupported automata", "[oracle]") {
  const char* two_sets = R"(
states: q1 q2 q3
initial: q1
deterministic: q2 q3
accepting: F1 = {q2}; F2 = {q3}
q1 -- t --> q2
q2 -- t --> q3
q3 -- t --> q2
)";
  const Ldba aut = parse_ldba(two_sets);
  const ChainEnv env = reach_chain(4);
  REQUIRE_THROWS_AS(enumerate_chain_product(env, aut, 1.0),
                    std::invalid_argument);
}

TEST_CASE("distance ordering puts accepting-adjacent states first",
          "[oracle]") {
  const Ldba aut = parse_ldba(reach_doc);
  const auto dist = distance_to_accepting(aut);
  REQUIRE(dist[size_t(aut.state_id("q2"))] == 0);
  REQUIRE(dist[size_t(aut.state_id("q1"))] == 1);
  REQUIRE(dist[size_t(aut.state_id("q3"))] ==
          std::numeric_limits<int>::max());
  const auto order = backward_training_order(aut);
  REQUIRE(order == std::vector<AutState>{aut.state_id("q2"),
                                         aut.state_id("q1"),
                                         aut.state_id("q3")});
}
