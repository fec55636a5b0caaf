#include "springmass/control.hpp"

#include <gtest/gtest.h>

#include <chrono>

#include "springmass/builder.hpp"
#include "springmass/log.hpp"
#include "oracles.hpp"

namespace springmass {
namespace {

using namespace std::chrono_literals;

Environment vacuum() {
  Environment env;
  env.gravity = {};
  return env;
}

// Two masses on a spring; cheap enough to run thousands of steps.
struct Dimer {
  MassHandle a, b;
  SpringHandle s;
};

Dimer add_dimer(ObjectStore& store) {
  Mass ma;
  Mass mb;
  mb.pos = {1.1, 0, 0};
  Dimer d;
  d.a = store.create_mass(ma);
  d.b = store.create_mass(mb);
  Spring s;
  s.m1 = d.a;
  s.m2 = d.b;
  s.k = 50.0;
  s.rest_length = 1.0;
  d.s = store.create_spring(s);
  return d;
}

TEST(ControlTest, AtTimePausesOnExactStep) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.set_breakpoint({AtTime{0.05}, "half"});
  ctl.start();
  const PauseReport r = ctl.wait_for_event();
  EXPECT_EQ(r.state, SimState::Paused);
  EXPECT_EQ(r.reason, PauseReason::Breakpoint);
  EXPECT_EQ(r.label, "half");
  EXPECT_EQ(r.step, 500u);
  EXPECT_EQ(ctl.step_count(), 500u);
  ctl.stop();
}

TEST(ControlTest, ZeroDurationPausesWithoutStepping) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.start(0.0);
  const PauseReport r = ctl.wait_for_event();
  EXPECT_EQ(r.step, 0u);
  EXPECT_EQ(r.label, "duration");
}

TEST(ControlTest, LifecycleErrors) {
  SimController ctl(StepConfig{}, vacuum());
  EXPECT_THROW(ctl.pause(), StateError);
  EXPECT_THROW(ctl.resume(), StateError);
  EXPECT_THROW(ctl.wait_for_event(), StateError);
  ctl.start(0.0);
  ctl.wait_for_event();
  ctl.start(0.0);  // from a pause, start() resumes with a new duration
  EXPECT_EQ(ctl.wait_for_event().label, "duration");
  ctl.stop();
  EXPECT_EQ(ctl.state(), SimState::Done);
  EXPECT_THROW(ctl.start(), StateError);
  EXPECT_THROW(ctl.resume(), StateError);
  EXPECT_NO_THROW(ctl.stop());
}

TEST(ControlTest, ManualPauseAndResume) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.start();
  std::this_thread::sleep_for(5ms);
  ctl.pause();
  EXPECT_EQ(ctl.state(), SimState::Paused);
  const std::uint64_t at = ctl.step_count();
  std::this_thread::sleep_for(5ms);
  EXPECT_EQ(ctl.step_count(), at);
  ctl.pause();  // no-op when already paused
  ctl.resume();
  std::this_thread::sleep_for(5ms);
  ctl.stop();
  EXPECT_GT(ctl.step_count(), at);
}

TEST(ControlTest, StoreIsLockedWhileRunning) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.start();
  EXPECT_THROW(ctl.store().create_mass(Mass{}), StateError);
  EXPECT_THROW(ctl.set_environment(Environment{}), StateError);
  ctl.pause();
  EXPECT_NO_THROW(ctl.store().create_mass(Mass{}));
  ctl.stop();
}

TEST(ControlTest, QueuedMutationAppliesAtNextPause) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  ctl.set_breakpoint({AtTime{0.01}, ""});
  ctl.start();
  MutationBatch batch;
  batch.add(SetSpringField{d.s, SpringField::Stiffness, Real{77.0}});
  Ticket ticket = ctl.queue_mutations(batch);
  const PauseReport r = ctl.wait_for_event();
  const BatchResult res = ticket.get();
  EXPECT_TRUE(res.applied);
  EXPECT_EQ(res.step, r.step);
  EXPECT_EQ(ctl.store().spring(d.s).k, 77.0);
  ctl.stop();
}

TEST(ControlTest, MutationWhilePausedAppliesImmediately) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  ctl.start(0.0);
  ctl.wait_for_event();
  auto ticket = ctl.queue_mutations(MutationBatch{}.add(DeleteSpring{d.s}));
  ASSERT_EQ(ticket.wait_for(0s), std::future_status::ready);
  EXPECT_TRUE(ticket.get().applied);
  EXPECT_FALSE(ctl.store().alive(d.s));
}

TEST(ControlTest, AbortAllRejectsWholeBatch) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  ctl.store().delete_mass(d.b);
  MutationBatch batch;
  batch.add(SetMassField{d.a, MassField::Velocity, Vec3{1, 0, 0}});
  batch.add(SetMassField{d.b, MassField::Velocity, Vec3{1, 0, 0}});
  const BatchResult r = ctl.queue_mutations(batch).get();
  EXPECT_FALSE(r.applied);
  EXPECT_EQ(r.commands[0].status, CommandStatus::NotApplied);
  EXPECT_EQ(r.commands[1].status, CommandStatus::Rejected);
  EXPECT_EQ(ctl.store().mass(d.a).vel, (Vec3{}));
}

TEST(ControlTest, PartialApplyKeepsValidCommands) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  ctl.store().delete_mass(d.b);
  MutationBatch batch;
  batch.policy = BatchPolicy::PartialApply;
  batch.add(SetMassField{d.a, MassField::Velocity, Vec3{1, 0, 0}});
  batch.add(SetMassField{d.b, MassField::Velocity, Vec3{1, 0, 0}});
  batch.add(SetMassField{d.a, MassField::Mass, Real{-1}});
  const BatchResult r = ctl.queue_mutations(batch).get();
  EXPECT_FALSE(r.applied);
  EXPECT_EQ(r.commands[0].status, CommandStatus::Applied);
  EXPECT_EQ(r.commands[1].status, CommandStatus::Rejected);
  EXPECT_EQ(r.commands[2].status, CommandStatus::Rejected);
  EXPECT_EQ(ctl.store().mass(d.a).vel, (Vec3{1, 0, 0}));
}

TEST(ControlTest, PendingMassReferencesResolveWithinBatch) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  MutationBatch batch;
  Mass m;
  m.pos = {0, 1, 0};
  batch.add(CreateMass{m});
  Spring s;
  s.k = 5.0;
  batch.add(CreateSpring{d.a, PendingMass{0}, s});
  const BatchResult r = ctl.queue_mutations(batch).get();
  ASSERT_TRUE(r.applied);
  ASSERT_TRUE(r.commands[1].created_spring.has_value());
  const Spring& made = ctl.store().spring(*r.commands[1].created_spring);
  EXPECT_EQ(made.m1, d.a);
  EXPECT_EQ(made.m2, *r.commands[0].created_mass);
}

TEST(ControlTest, DeleteThenUseInSameBatchIsRejected) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  MutationBatch batch;
  batch.add(DeleteMass{d.b});
  batch.add(SetMassField{d.b, MassField::Fixed, true});
  const BatchResult r = ctl.queue_mutations(batch).get();
  EXPECT_FALSE(r.applied);
  EXPECT_TRUE(ctl.store().alive(d.b));
}

TEST(ControlTest, SetEnvironmentCommand) {
  SimController ctl(StepConfig{}, vacuum());
  Environment env;
  env.drag = 0.25;
  ASSERT_TRUE(ctl.queue_mutations(MutationBatch{}.add(SetEnvironment{env})).get().applied);
  EXPECT_EQ(ctl.environment().drag, 0.25);
}

TEST(ControlTest, SnapshotWhileRunningIsStaleCopyOfLastPause) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.start();
  std::this_thread::sleep_for(2ms);
  const Snapshot s = ctl.snapshot();
  EXPECT_TRUE(s.stale);
  EXPECT_EQ(s.step, 0u);
  EXPECT_EQ(s.masses.size(), 2u);
  ctl.pause();
  const Snapshot fresh = ctl.snapshot();
  EXPECT_FALSE(fresh.stale);
  EXPECT_EQ(fresh.step, ctl.step_count());
  ctl.stop();
}

TEST(ControlTest, SnapshotSelectionIncludesDeletedButPinned) {
  SimController ctl(StepConfig{}, vacuum());
  const Dimer d = add_dimer(ctl.store());
  auto pin = ctl.store().pin(d.b);
  ctl.store().delete_mass(d.b);
  const Snapshot s = ctl.snapshot(SnapshotSelection::of({d.a, d.b}));
  ASSERT_EQ(s.masses.size(), 2u);
  const MassRecord* rec = s.find(d.b);
  ASSERT_NE(rec, nullptr);
  EXPECT_FALSE(rec->alive);
  EXPECT_EQ(rec->state.pos.x, 1.1);
}

TEST(ControlTest, ConditionBreakpointFiresOnSchedule) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.set_breakpoint({OnCondition{[](const StateView& v) { return v.step() >= 250; }, 100}, "c"});
  ctl.start();
  const PauseReport r = ctl.wait_for_event();
  EXPECT_EQ(r.label, "c");
  EXPECT_EQ(r.step, 300u);
  ctl.stop();
}

TEST(ControlTest, ClearedBreakpointDoesNotFire) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  const BreakpointId id = ctl.set_breakpoint({AtTime{0.001}, "gone"});
  EXPECT_TRUE(ctl.clear_breakpoint(id));
  EXPECT_FALSE(ctl.clear_breakpoint(id));
  ctl.start(0.002);
  EXPECT_EQ(ctl.wait_for_event().label, "duration");
}

TEST(ControlTest, NumericalAbortEndsRun) {
  set_log_sink([](LogLevel, std::string_view) {});
  StepConfig cfg;
  cfg.dt = 1.0;
  SimController ctl(cfg, vacuum());
  const Dimer d = add_dimer(ctl.store());
  ctl.store().set(d.s, SpringField::Stiffness, Real{1e300});
  ctl.start();
  const PauseReport r = ctl.wait_for_event();
  EXPECT_EQ(r.state, SimState::Done);
  EXPECT_EQ(r.reason, PauseReason::Aborted);
  EXPECT_FALSE(r.error.empty());
  set_log_sink(nullptr);
}

TEST(ControlTest, WaitWithTimeout) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  ctl.start();
  EXPECT_FALSE(ctl.wait_for_event_for(1ms).has_value());
  ctl.stop();
  EXPECT_TRUE(ctl.wait_for_event_for(1ms).has_value());
}

TEST(ControlTest, StepObserverSeesEveryStep) {
  SimController ctl(StepConfig{}, vacuum());
  add_dimer(ctl.store());
  std::uint64_t seen = 0;
  ctl.set_step_observer([&](const StateView& v) { seen = v.step(); });
  ctl.start(0.01);
  ctl.wait_for_event();
  EXPECT_EQ(seen, 100u);
}

TEST(ControlTest, PauseResumeDoesNotPerturbTrajectory) {
  auto run = [](bool interrupt) {
    SimController ctl(StepConfig{}, Environment{});
    ObjectStore& store = ctl.store();
    build_lattice({{0, 0, 0.01}, 3, 3, 3, 0.01, testing_support::soft_material(), 0.001}, store);
    Environment env;
    env.contacts.push_back(ContactPlane{{0, 0, 1}, 0.0, 500.0, 0.6, 0.5});
    ctl.set_environment(env);
    if (interrupt) {
      for (int k = 1; k < 20; ++k) ctl.set_breakpoint({AtTime{0.0037 * k}, ""});
    }
    ctl.start(0.08);
    while (ctl.wait_for_event().label != "duration") ctl.resume();
    return ctl.snapshot();
  };
  const Snapshot a = run(false);
  const Snapshot b = run(true);
  ASSERT_EQ(a.step, b.step);
  ASSERT_EQ(a.masses.size(), b.masses.size());
  for (std::size_t i = 0; i < a.masses.size(); ++i) {
    ASSERT_EQ(a.masses[i].state.pos, b.masses[i].state.pos);
    ASSERT_EQ(a.masses[i].state.vel, b.masses[i].state.vel);
  }
}

TEST(ControlTest, StateNames) {
  EXPECT_STREQ(to_string(SimState::Idle), "idle");
  EXPECT_STREQ(to_string(SimState::Done), "done");
}

}  // namespace
}  // namespace springmass
