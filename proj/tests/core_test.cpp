#include "podchain/core.hpp"

#include <gtest/gtest.h>

namespace podchain {
namespace {

TEST(Lifecycle, LegalTransitions) {
  EXPECT_EQ(lifecycle_transition(Phase::Pending, LifecycleEvent::MarkReady),
            Phase::Running);
  EXPECT_EQ(lifecycle_transition(Phase::Pending, LifecycleEvent::MarkTerminating),
            Phase::Terminating);
  EXPECT_EQ(lifecycle_transition(Phase::Running, LifecycleEvent::MarkTerminating),
            Phase::Terminating);
  EXPECT_EQ(lifecycle_transition(Phase::Terminating, LifecycleEvent::Remove),
            Phase::Removed);
}

TEST(Lifecycle, TerminatingIsIrreversible) {
  EXPECT_THROW(lifecycle_transition(Phase::Terminating, LifecycleEvent::MarkReady),
               IllegalTransition);
  EXPECT_THROW(
      lifecycle_transition(Phase::Terminating, LifecycleEvent::MarkTerminating),
      IllegalTransition);
}

TEST(Lifecycle, EveryIllegalPairThrows) {
  const LifecycleEvent events[] = {LifecycleEvent::MarkReady,
                                   LifecycleEvent::MarkTerminating,
                                   LifecycleEvent::Remove};
  const Phase phases[] = {Phase::Pending, Phase::Running, Phase::Terminating,
                          Phase::Removed};
  int legal = 0;
  for (Phase p : phases)
    for (LifecycleEvent e : events) {
      try {
        Phase q = lifecycle_transition(p, e);
        EXPECT_TRUE(legal_phase_step(p, q));
        ++legal;
      } catch (const IllegalTransition&) {
      }
    }
  EXPECT_EQ(legal, 4);  // exactly the four edges of the diagram
}

TEST(Lifecycle, StepPredicate) {
  EXPECT_TRUE(legal_phase_step(Phase::Pending, Phase::Pending));
  EXPECT_TRUE(legal_phase_step(Phase::Pending, Phase::Running));
  EXPECT_TRUE(legal_phase_step(Phase::Pending, Phase::Terminating));
  EXPECT_TRUE(legal_phase_step(Phase::Running, Phase::Terminating));
  EXPECT_TRUE(legal_phase_step(Phase::Terminating, Phase::Removed));
  EXPECT_FALSE(legal_phase_step(Phase::Terminating, Phase::Running));
  EXPECT_FALSE(legal_phase_step(Phase::Removed, Phase::Pending));
  EXPECT_FALSE(legal_phase_step(Phase::Running, Phase::Pending));
}

TEST(Merge, IntoEmptySlot) {
  PodRecord incoming{1, 7, 2, Phase::Pending, {0, 1}, false, false};
  PodRecord out = merge_record(std::nullopt, incoming);
  EXPECT_EQ(out, incoming);
}

TEST(Merge, TerminatingDominates) {
  PodRecord local{1, 7, std::nullopt, Phase::Terminating, {0, 1}, false, false};
  PodRecord incoming{1, 7, std::nullopt, Phase::Running, {0, 2}, false, false};
  PodRecord out = merge_record(local, incoming);
  EXPECT_EQ(out.phase, Phase::Terminating);
  EXPECT_EQ(out.version, (Version{0, 2}));  // attributes still adopted
}

TEST(Merge, DownstreamProgressAdopted) {
  PodRecord local{1, 7, 1, Phase::Pending, {0, 3}, false, false};
  PodRecord incoming{1, 7, 1, Phase::Running, {0, 7}, false, false};
  PodRecord out = merge_record(local, incoming);
  EXPECT_EQ(out.phase, Phase::Running);
  EXPECT_EQ(out.node, std::optional<NodeId>(1));
  EXPECT_EQ(out.version, (Version{0, 7}));
}

TEST(Merge, KeepsLocalBindingWhenIncomingUnbound) {
  PodRecord local{1, 7, 2, Phase::Pending, {0, 3}, false, false};
  PodRecord incoming{1, 7, std::nullopt, Phase::Pending, {0, 4}, false, false};
  PodRecord out = merge_record(local, incoming);
  EXPECT_EQ(out.node, std::optional<NodeId>(2));
}

TEST(Merge, MismatchedPodIdsThrow) {
  PodRecord local{1, 7, std::nullopt, Phase::Pending, {0, 1}, false, false};
  PodRecord incoming{2, 7, std::nullopt, Phase::Pending, {0, 1}, false, false};
  EXPECT_THROW(merge_record(local, incoming), PodIdMismatch);
}

TEST(Version, EqualityOnly) {
  EXPECT_EQ((Version{1, 2}), (Version{1, 2}));
  EXPECT_FALSE((Version{1, 2}) == (Version{2, 2}));
  EXPECT_FALSE((Version{1, 2}) == (Version{1, 3}));
}

}  // namespace
}  // namespace podchain
