#include <gtest/gtest.h>

#include "contaski/ap_protocol.hpp"
#include "contaski/scenario.hpp"
#include "contaski/simulator.hpp"

using namespace contaski;

namespace {

const SimTime kWindow = SimTime::from_ms(5000);
const NodeId B{1}, E{4};

ApState with_tasks(std::size_t n, double start_s = 150, double interval_s = 60) {
  ApState ap;
  for (std::size_t i = 0; i < n; ++i) {
    Task t{static_cast<TaskId>(i + 1), CapabilitySet{"temperature", "humidity"}, SimTime::from_seconds(60), 1};
    ap.task_list.push_back({t, SimTime::from_seconds(start_s + interval_s * static_cast<double>(i)),
                            TaskStatus::kPending});
  }
  return ap;
}

SimTime at(double s) { return SimTime::from_seconds(s); }

}  // namespace

TEST(Registry, RegistrationIsIdempotent) {
  ApState ap;
  EXPECT_TRUE(handle_leader_register(ap, {B}));
  EXPECT_FALSE(handle_leader_register(ap, {B}));
  EXPECT_EQ(ap.leaders, (std::set<NodeId>{B}));
  handle_leader_register(ap, {E});
  EXPECT_EQ(ap.leaders, (std::set<NodeId>{B, E}));
}

TEST(DispatchSchedule, DefaultGeneratorDispatchTimes) {
  ScenarioConfig c;
  c.nodes = GeneratedNodes{5, PlacementStrategy::kGrid, {}};
  const auto m = materialize(c);
  ASSERT_EQ(m.tasks.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(m.tasks[i].scheduled_at, at(150 + 60.0 * static_cast<double>(i)));
    EXPECT_EQ(m.tasks[i].task.task_id, i + 1);
  }
  EXPECT_EQ(m.tasks.back().scheduled_at, at(690));
}

TEST(DispatchSchedule, GeneratedTasksCarryTheBaseTriad) {
  ScenarioConfig c;
  c.nodes = GeneratedNodes{5, PlacementStrategy::kGrid, {}};
  const CapabilitySet base{"temperature", "humidity", "presence"};
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    c.seed = seed;
    for (const auto& t : materialize(c).tasks) {
      EXPECT_TRUE(base.is_subset_of(t.task.required));
      EXPECT_LE(t.task.required.size(), 7u);
      EXPECT_EQ(t.task.duration, at(60));
      EXPECT_EQ(t.task.quorum, 1u);
    }
  }
}

TEST(DispatchTask, SnapshotsLeadersAndOpensWindow) {
  auto ap = with_tasks(2);
  handle_leader_register(ap, {B});
  handle_leader_register(ap, {E});
  const auto a = dispatch_task(ap, at(150), kWindow);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->task.task_id, 1u);
  EXPECT_EQ(a->recipients, (std::vector<NodeId>{B, E}));
  EXPECT_EQ(a->window_closes, at(155));
  EXPECT_FALSE(a->unallocated);
  EXPECT_EQ(ap.task_list[0].status, TaskStatus::kDispatched);
  EXPECT_EQ(ap.task_list[1].status, TaskStatus::kPending);
  EXPECT_EQ(ap.dispatch_log.at(1).dispatch_time, at(150));

  handle_leader_register(ap, {NodeId{9}});
  EXPECT_EQ(ap.dispatch_log.at(1).leaders_at_dispatch.size(), 2u);
}

TEST(DispatchTask, NoLeadersMeansUnallocated) {
  auto ap = with_tasks(1);
  const auto a = dispatch_task(ap, at(150), kWindow);
  ASSERT_TRUE(a);
  EXPECT_TRUE(a->unallocated);
  EXPECT_TRUE(a->recipients.empty());
  EXPECT_EQ(ap.task_list[0].status, TaskStatus::kUnallocated);
  EXPECT_EQ(ap.dispatch_log.at(1).final_status, TaskStatus::kUnallocated);
}

TEST(DispatchTask, NothingPendingIsANoOp) {
  auto ap = with_tasks(1);
  handle_leader_register(ap, {B});
  EXPECT_TRUE(dispatch_task(ap, at(150), kWindow));
  EXPECT_FALSE(dispatch_task(ap, at(210), kWindow));
}

TEST(Accepts, AccumulateWithinWindow) {
  auto ap = with_tasks(1);
  handle_leader_register(ap, {B});
  handle_leader_register(ap, {E});
  dispatch_task(ap, at(150), kWindow);
  EXPECT_EQ(handle_task_accept(ap, {B, 1}, at(150.021)), AcceptResult::kCounted);
  EXPECT_EQ(ap.dispatch_log.at(1).accepts, (std::vector<AcceptRecord>{{B, at(150.021)}}));
  EXPECT_EQ(ap.dispatch_log.at(1).first_accept, at(150.021));
  EXPECT_EQ(handle_task_accept(ap, {E, 1}, at(150.035)), AcceptResult::kCounted);
  EXPECT_EQ(ap.dispatch_log.at(1).accepts.size(), 2u);
  EXPECT_EQ(ap.dispatch_log.at(1).first_accept, at(150.021));
  EXPECT_EQ(ap.task_list[0].status, TaskStatus::kDispatched);
  EXPECT_EQ(handle_task_accept(ap, {E, 1}, at(150.040)), AcceptResult::kDuplicate);
}

TEST(Accepts, LateUnknownAndForeignAreNotCounted) {
  auto ap = with_tasks(1);
  handle_leader_register(ap, {B});
  dispatch_task(ap, at(150), kWindow);
  EXPECT_EQ(handle_task_accept(ap, {B, 1}, at(155.000001)), AcceptResult::kLate);
  EXPECT_EQ(ap.dispatch_log.at(1).late_accepts.size(), 1u);
  EXPECT_EQ(handle_task_accept(ap, {B, 42}, at(151)), AcceptResult::kUnknownTask);
  EXPECT_EQ(handle_task_accept(ap, {E, 1}, at(151)), AcceptResult::kNotALeader);
  EXPECT_EQ(ap.violations.size(), 2u);
  EXPECT_TRUE(ap.dispatch_log.at(1).accepts.empty());
  EXPECT_EQ(handle_task_accept(ap, {B, 1}, at(155)), AcceptResult::kCounted);
}

TEST(WindowClose, LatIsLastAcceptMinusDispatch) {
  auto ap = with_tasks(1);
  handle_leader_register(ap, {B});
  handle_leader_register(ap, {E});
  dispatch_task(ap, at(150), kWindow);
  handle_task_accept(ap, {B, 1}, at(150.021));
  handle_task_accept(ap, {E, 1}, at(150.035));
  close_confirmation_window(ap, 1, at(155));
  EXPECT_EQ(ap.dispatch_log.at(1).lat, SimTime::from_ms(35));
  EXPECT_EQ(ap.dispatch_log.at(1).final_status, TaskStatus::kCompleted);
  EXPECT_EQ(ap.task_list[0].status, TaskStatus::kCompleted);
  EXPECT_EQ(handle_task_accept(ap, {B, 1}, at(155)), AcceptResult::kLate);
}

TEST(WindowClose, SingleAcceptAndNoAccept) {
  auto ap = with_tasks(2);
  handle_leader_register(ap, {B});
  dispatch_task(ap, at(150), kWindow);
  handle_task_accept(ap, {B, 1}, at(150.015));
  close_confirmation_window(ap, 1, at(155));
  EXPECT_EQ(ap.dispatch_log.at(1).lat, SimTime::from_ms(15));

  dispatch_task(ap, at(210), kWindow);
  close_confirmation_window(ap, 2, at(215));
  EXPECT_EQ(ap.dispatch_log.at(2).final_status, TaskStatus::kUnallocated);
  EXPECT_FALSE(ap.dispatch_log.at(2).lat);
  EXPECT_EQ(ap.task_list[1].status, TaskStatus::kUnallocated);
  close_confirmation_window(ap, 2, at(216));
  EXPECT_EQ(ap.task_list[1].status, TaskStatus::kUnallocated);
}

TEST(ApProperty, EveryTaskTerminatesAndCountsAddUp) {
  RandomStream rng(8);
  for (int c = 0; c < 1000; ++c) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 10));
    auto ap = with_tasks(n);
    const auto leaders = rng.uniform_int(0, 4);
    for (std::int64_t l = 0; l < leaders; ++l) handle_leader_register(ap, {NodeId{static_cast<std::uint32_t>(l)}});
    std::size_t nat = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto now = at(150 + 60.0 * static_cast<double>(i));
      const auto a = dispatch_task(ap, now, kWindow);
      ASSERT_TRUE(a);
      for (const auto& r : a->recipients) {
        if (rng.bernoulli(0.5)) {
          handle_task_accept(ap, {r, a->task.task_id}, now + SimTime::from_us(rng.uniform_int(4000, 5'000'000)));
        }
      }
      if (!a->unallocated) close_confirmation_window(ap, a->task.task_id, a->window_closes);
      const auto& rec = ap.dispatch_log.at(a->task.task_id);
      if (!rec.accepts.empty()) {
        ++nat;
        ASSERT_TRUE(rec.lat);
        EXPECT_GE(*rec.lat, SimTime::from_ms(4));
        EXPECT_LE(*rec.lat, kWindow);
      }
    }
    std::size_t completed = 0, unallocated = 0;
    for (const auto& t : ap.task_list) {
      completed += t.status == TaskStatus::kCompleted;
      unallocated += t.status == TaskStatus::kUnallocated;
    }
    EXPECT_EQ(completed + unallocated, n);
    EXPECT_EQ(completed, nat);
  }
}
