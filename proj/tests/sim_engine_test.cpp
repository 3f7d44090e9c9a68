#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "contaski/audit.hpp"
#include "contaski/channel.hpp"
#include "contaski/event_queue.hpp"
#include "contaski/placement.hpp"
#include "contaski/simulator.hpp"
#include "test_util.hpp"

using namespace contaski;
using contaski::testing::preset;

namespace {

ScenarioConfig load_valid(const std::string& name) {
  auto v = validate_scenario(load_scenario(preset(name)));
  EXPECT_TRUE(v.ok());
  return *v.config;
}

ScenarioConfig random_network(std::uint64_t seed, std::uint32_t count, double loss = 0.0) {
  ScenarioConfig c;
  c.seed = seed;
  c.nodes = GeneratedNodes{count, PlacementStrategy::kUniformRandom, {}};
  c.radio.loss_prob = loss;
  return c;
}

}  // namespace

TEST(EventQueueTest, OrdersByTimeThenInsertion) {
  EventQueue<int> q;
  q.push(SimTime::from_ms(5), 1);
  q.push(SimTime::from_ms(1), 2);
  q.push(SimTime::from_ms(5), 3);
  q.push(SimTime::from_ms(1), 4);
  std::vector<int> order;
  while (!q.empty()) order.push_back(q.pop().payload);
  EXPECT_EQ(order, (std::vector<int>{2, 4, 1, 3}));
}

TEST(ChannelTest, LosslessBroadcastReachesEveryNodeInRange) {
  RandomStream loss(1);
  Channel ch({50, SimTime::from_ms(2), 0.0, 0.0},
             {{NodeId{0}, {0, 0}}, {NodeId{1}, {10, 0}}, {NodeId{2}, {0, 30}}, {NodeId{3}, {30, 40}}, {NodeId{4}, {90, 0}}},
             loss);
  const auto plans = ch.broadcast(NodeId{0}, SimTime::from_seconds(1));
  ASSERT_EQ(plans.size(), 3u);
  for (const auto& p : plans) {
    EXPECT_EQ(p.outcome, DeliveryOutcome::kDelivered);
    EXPECT_EQ(p.at, SimTime::from_us(1'002'000));
  }
  EXPECT_EQ(plans[2].recipient, NodeId{3});  // exactly 50 m away
}

TEST(ChannelTest, TotalLossDeliversNothing) {
  RandomStream loss(1);
  Channel ch({50, SimTime::from_ms(2), 1.0, 0.0}, {{NodeId{0}, {0, 0}}, {NodeId{1}, {10, 0}}, {NodeId{2}, {0, 30}}},
             loss);
  for (const auto& p : ch.broadcast(NodeId{0}, SimTime{})) EXPECT_EQ(p.outcome, DeliveryOutcome::kLost);
}

TEST(ChannelTest, DiskBoundaryIsInclusive) {
  RandomStream loss(1);
  Channel ch({50, SimTime::from_ms(2), 0.0, 0.0}, {{NodeId{0}, {0, 0}}, {NodeId{1}, {50.01, 0}}, {NodeId{2}, {50, 0}}},
             loss);
  const auto plans = ch.broadcast(NodeId{0}, SimTime{});
  ASSERT_EQ(plans.size(), 1u);
  EXPECT_EQ(plans[0].recipient, NodeId{2});
  EXPECT_EQ(ch.unicast(NodeId{0}, NodeId{1}, SimTime{}).outcome, DeliveryOutcome::kOutOfRange);
}

TEST(ChannelTest, AccessPointIgnoresRange) {
  RandomStream loss(1);
  Channel ch({50, SimTime::from_ms(2), 0.0, 0.0}, {{NodeId{0}, {0, 0}}, {NodeId{1}, {1000, 1000}}}, loss);
  const auto down = ch.unicast(kAccessPoint, NodeId{1}, SimTime::from_seconds(150));
  EXPECT_EQ(down.outcome, DeliveryOutcome::kDelivered);
  EXPECT_EQ(down.at, SimTime::from_us(150'002'000));
  EXPECT_EQ(ch.unicast(NodeId{1}, kAccessPoint, SimTime{}).outcome, DeliveryOutcome::kDelivered);
}

TEST(ChannelTest, LossRateMatchesProbability) {
  RandomStream loss(77);
  std::map<NodeId, Position> pos;
  for (std::uint32_t i = 0; i < 11; ++i) pos[NodeId{i}] = {static_cast<double>(i), 0};
  Channel ch({50, SimTime::from_ms(2), 0.3, 0.0}, pos, loss);
  int lost = 0, total = 0;
  for (int k = 0; k < 2000; ++k) {
    for (const auto& p : ch.broadcast(NodeId{0}, SimTime{})) {
      lost += p.outcome == DeliveryOutcome::kLost;
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(lost) / total, 0.3, 0.02);
}

TEST(Placement, GridOfFour) {
  RandomStream rng(1);
  const auto p = place_nodes(PlacementStrategy::kGrid, Area{200, 200}, 4, rng);
  EXPECT_EQ(p, (std::vector<Position>{{50, 50}, {150, 50}, {50, 150}, {150, 150}}));
}

TEST(Placement, SingleNodeIsCentered) {
  RandomStream rng(1);
  EXPECT_EQ(place_nodes(PlacementStrategy::kGrid, Area{200, 200}, 1, rng), (std::vector<Position>{{100, 100}}));
}

TEST(Placement, ExplicitAndErrors) {
  RandomStream rng(1);
  const std::vector<Position> pts{{1, 2}, {3, 4}};
  EXPECT_EQ(place_nodes(PlacementStrategy::kExplicit, Area{}, 2, rng, pts), pts);
  EXPECT_THROW(place_nodes(PlacementStrategy::kExplicit, Area{}, 3, rng, pts), std::invalid_argument);
  EXPECT_THROW(place_nodes(PlacementStrategy::kGrid, Area{}, 0, rng), std::invalid_argument);
}

TEST(Placement, UniformStaysInsideArea) {
  RandomStream rng(3);
  for (const auto& p : place_nodes(PlacementStrategy::kUniformRandom, Area{200, 100}, 5000, rng)) {
    EXPECT_GE(p.x, 0);
    EXPECT_LT(p.x, 200);
    EXPECT_GE(p.y, 0);
    EXPECT_LT(p.y, 100);
  }
}

TEST(Placement, FourNodeChainAdjacency) {
  const auto c = load_valid("fig2.json");
  sim::Engine engine(c);
  const auto& ch = engine.channel();
  EXPECT_EQ(ch.neighbors_of(NodeId{0}), (std::vector<NodeId>{NodeId{1}}));
  EXPECT_EQ(ch.neighbors_of(NodeId{1}), (std::vector<NodeId>{NodeId{0}, NodeId{2}, NodeId{3}}));
  EXPECT_EQ(ch.neighbors_of(NodeId{2}), (std::vector<NodeId>{NodeId{1}, NodeId{3}}));
  EXPECT_EQ(ch.neighbors_of(NodeId{3}), (std::vector<NodeId>{NodeId{1}, NodeId{2}}));
}

TEST(Run, FourNodeExampleElectsB) {
  const auto r = run(load_valid("fig2.json"));
  for (const auto& n : r.nodes) {
    EXPECT_EQ(n.leader, NodeId{1}) << to_string(n.id);
    EXPECT_TRUE(check_node_invariants(n, SimilarityThreshold{}).empty());
  }
  EXPECT_EQ(r.ap.leaders, (std::set<NodeId>{NodeId{1}}));
  std::size_t registers = 0;
  for (const auto& e : r.trace.events()) registers += e.kind == TraceKind::kLeaderRegister;
  EXPECT_EQ(registers, 1u);
}

TEST(Run, RegistrationDeliveredTwoMillisecondsAfterCommit) {
  const auto c = load_valid("fig2.json");
  const auto r = run(c);
  for (const auto& e : r.trace.events()) {
    if (e.kind == TraceKind::kLeaderRegister) {
      EXPECT_EQ(e.t, c.protocol.leader_commit_time() + SimTime::from_ms(2));
    }
  }
}

TEST(Run, ZeroHorizonProducesEmptyTrace) {
  auto c = load_valid("fig2.json");
  c.horizon_s = 0;
  const auto r = run(c);
  EXPECT_TRUE(r.trace.empty());
  for (const auto& t : r.ap.task_list) EXPECT_EQ(t.status, TaskStatus::kPending);
}

TEST(Run, SameSeedSameDigest) {
  for (const char* name : {"fig2.json", "fig3.json"}) {
    const auto c = load_valid(name);
    EXPECT_EQ(run(c).trace.serialize(), run(c).trace.serialize()) << name;
  }
  const auto c = random_network(5, 60, 0.1);
  EXPECT_EQ(run(c).trace.digest(), run(c).trace.digest());
  auto other = c;
  other.seed = 6;
  EXPECT_NE(run(c).trace.digest(), run(other).trace.digest());
}

TEST(Run, EventCapAbortsRunawayRuns) {
  auto c = random_network(1, 40);
  c.max_events = 50;
  EXPECT_THROW(run(c), SimulationError);
}

TEST(Run, TimestampsNeverDecrease) {
  const auto r = run(random_network(11, 75, 0.05));
  SimTime last{};
  for (const auto& e : r.trace.events()) {
    EXPECT_GE(e.t, last);
    last = e.t;
  }
}

TEST(Run, EverySendResolvesExactlyOncePerRecipient) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run(random_network(seed, 50, 0.2));
    std::map<std::uint64_t, std::size_t> expected, resolved;
    for (const auto& e : r.trace.events()) {
      const auto id = e.detail.value("msg_id", std::uint64_t{0});
      if (e.kind == TraceKind::kSend) {
        expected[id] = e.detail.at("recipients").get<std::size_t>();
        resolved[id];
      }
      if (e.kind == TraceKind::kDeliver || e.kind == TraceKind::kDrop) ++resolved[id];
    }
    EXPECT_EQ(expected, resolved);
    EXPECT_TRUE(audit_trace(r.trace.events()).clean());
  }
}

TEST(Run, LosslessNeighborTablesMatchGeometricAdjacency) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto c = random_network(seed * 7919, 40);
    c.tasks = std::vector<TaskSpec>{};
    c.horizon_s = 100;
    const auto r = run(c);
    for (const auto& n : r.nodes) {
      std::set<NodeId> oracle;
      for (const auto& m : r.nodes) {
        const double dx = n.position.x - m.position.x, dy = n.position.y - m.position.y;
        if (m.id != n.id && std::sqrt(dx * dx + dy * dy) <= c.radio.range_m) oracle.insert(m.id);
      }
      std::set<NodeId> table;
      for (const auto& [id, rec] : n.neighbors) table.insert(id);
      ASSERT_EQ(table, oracle) << "seed " << seed << " node " << n.id.value;
    }
  }
}

TEST(Run, ClusterMembershipSoundAtEnd) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = run(random_network(seed, 75, 0.1));
    for (const auto& n : r.nodes) EXPECT_TRUE(check_node_invariants(n, SimilarityThreshold{}).empty());
  }
}

TEST(Run, HorizonCutsInFlightMessages) {
  auto c = load_valid("fig2.json");
  SimTime first_send{};
  for (const auto& e : run(c).trace.events()) {
    if (e.kind == TraceKind::kSend) {
      first_send = e.t;
      break;
    }
  }
  c.horizon_s = (first_send + SimTime::from_ms(1)).seconds();
  const auto r = run(c);
  std::size_t horizon_drops = 0;
  for (const auto& e : r.trace.events()) {
    if (e.kind == TraceKind::kDrop && e.detail.at("reason") == "horizon") ++horizon_drops;
  }
  EXPECT_GT(horizon_drops, 0u);
  EXPECT_TRUE(audit_trace(r.trace.events()).clean());
}

TEST(Materialize, IndependentStreams) {
  auto a = random_network(9, 30);
  auto b = a;
  std::get<GeneratedTasks>(b.tasks).count = 3;
  const auto ma = materialize(a), mb = materialize(b);
  for (std::size_t i = 0; i < ma.nodes.size(); ++i) {
    EXPECT_EQ(ma.nodes[i].position, mb.nodes[i].position);
    EXPECT_EQ(ma.nodes[i].capabilities, mb.nodes[i].capabilities);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ma.tasks[i].task, mb.tasks[i].task);
}
