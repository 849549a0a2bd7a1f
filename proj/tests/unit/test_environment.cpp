#include <gtest/gtest.h>

#include "auscultrl/auscultrl.hpp"

using namespace auscultrl;

namespace {

Examination exam_with_label(int label, double sigma = 0.0) {
    Examination e;
    e.id = "t";
    e.label = label;
    e.noise_sigma = sigma;
    for (std::size_t p = 0; p < 12; ++p)
        for (std::size_t i = 0; i < kFeatureCount; ++i) e.profiles[p][i] = 0.01 * static_cast<double>(p + i);
    return e;
}

} // namespace

TEST(RewardMatrix, AllPairsExact) {
    const double expected[3][3] = {{2.0, 0.0, -1.0}, {0.0, 2.0, -0.5}, {-1.0, -0.5, 2.0}};
    for (int a = 0; a < 3; ++a)
        for (int p = 0; p < 3; ++p) EXPECT_EQ(decision_reward(a, p), expected[a][p]) << a << "," << p;
    EXPECT_THROW(decision_reward(3, 0), RangeError);
    EXPECT_THROW(decision_reward(0, -1), RangeError);
}

TEST(Action, IndexMapping) {
    for (int p = 1; p <= 12; ++p) {
        const auto a = Action::auscultate(p);
        EXPECT_EQ(a.index(), p - 1);
        EXPECT_TRUE(a.is_auscultate());
        EXPECT_EQ(Action::from_index(a.index()).point(), p);
    }
    for (int l = 0; l < 3; ++l) {
        const auto a = Action::declare(l);
        EXPECT_EQ(a.index(), 12 + l);
        EXPECT_TRUE(a.is_declare());
        EXPECT_EQ(a.label(), l);
    }
    EXPECT_THROW(Action::auscultate(0), RangeError);
    EXPECT_THROW(Action::declare(3), RangeError);
    EXPECT_THROW(Action::from_index(15), RangeError);
}

TEST(Environment, ResetGivesZeroState) {
    AuscultationEnv env;
    const auto e = exam_with_label(0);
    const auto& s = env.reset(e);
    for (const auto& row : s.rows)
        for (double v : row) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(env.observation().size(), 108);
    EXPECT_FALSE(env.done());
}

TEST(Environment, AuscultateRecordsAndCharges) {
    AuscultationEnv env;
    const auto e = exam_with_label(2);
    Rng rng(1);
    env.reset(e);
    const auto o = env.step(Action::auscultate(3), rng);
    EXPECT_EQ(o.reward, -0.01);
    EXPECT_FALSE(o.done);
    EXPECT_EQ(o.next_state.count(3), 1.0);
    EXPECT_EQ(o.next_state.features(3), e.profile(3));
    const auto o2 = env.step(Action::auscultate(3), rng);
    EXPECT_EQ(o2.next_state.count(3), 2.0);
    EXPECT_EQ(o2.auscultations, 2);
}

TEST(Environment, DeclareEndsEpisodeWithMatrixReward) {
    for (int actual = 0; actual < 3; ++actual)
        for (int pred = 0; pred < 3; ++pred) {
            AuscultationEnv env;
            const auto e = exam_with_label(actual);
            Rng rng(1);
            env.reset(e);
            const auto o = env.step(Action::declare(pred), rng);
            EXPECT_TRUE(o.done);
            EXPECT_EQ(o.reward, decision_reward(actual, pred));
            EXPECT_EQ(o.declared_label, pred);
            EXPECT_THROW(env.step(Action::auscultate(1), rng), StateError);
        }
}

TEST(Environment, TwelfthAuscultationHitsLimit) {
    AuscultationEnv env;
    const auto e = exam_with_label(1);
    Rng rng(1);
    env.reset(e);
    for (int i = 0; i < 11; ++i) {
        const auto o = env.step(Action::auscultate(1 + i % 2), rng);
        EXPECT_FALSE(o.done);
        EXPECT_EQ(o.reward, -0.01);
    }
    const auto last = env.step(Action::auscultate(7), rng);
    EXPECT_TRUE(last.done);
    EXPECT_TRUE(last.limit_reached);
    EXPECT_FALSE(last.declared_label.has_value());
    EXPECT_DOUBLE_EQ(last.reward, -0.01 - 10.0);
    EXPECT_EQ(last.next_state.total_auscultations(), 12);
}

TEST(Environment, StepBeforeResetFails) {
    AuscultationEnv env;
    Rng rng(1);
    EXPECT_THROW(env.step(Action::auscultate(1), rng), StateError);
}

TEST(Environment, RepeatedAuscultationOverwritesWithFreshNoise) {
    AuscultationEnv env;
    const auto e = exam_with_label(0, 0.05);
    Rng rng(4);
    env.reset(e);
    const auto first = env.step(Action::auscultate(5), rng).next_state.features(5);
    const auto second = env.step(Action::auscultate(5), rng).next_state.features(5);
    EXPECT_FALSE(first == second);
}

TEST(Environment, ApplyMatchesStepForRecordedObservation) {
    const auto e = exam_with_label(2, 0.05);
    AuscultationEnv a, b;
    Rng rng(6);
    a.reset(e);
    b.reset(e);
    for (int p : {4, 9, 4, 12}) {
        const auto o = a.step(Action::auscultate(p), rng);
        const auto o2 = b.apply(Action::auscultate(p), o.next_state.features(p));
        EXPECT_EQ(o.next_state, o2.next_state);
        EXPECT_EQ(o.reward, o2.reward);
    }
}

TEST(StateEncoding, FlattenRoundTrip) {
    StateMatrix s;
    PhenomenaFeatures f;
    for (std::size_t i = 0; i < kFeatureCount; ++i) f[i] = 0.1 * static_cast<double>(i);
    record_observation(s, 2, f);
    record_observation(s, 2, f);
    record_observation(s, 11, f);
    const auto v = flatten_state(s);
    EXPECT_DOUBLE_EQ(v[1 * 9 + 8], 2.0 / 12.0);
    EXPECT_DOUBLE_EQ(v[1 * 9 + 3], 0.3);
    EXPECT_EQ(unflatten_state(v), s);
    EXPECT_THROW(unflatten_state(Eigen::VectorXd::Zero(10)), StructureError);
}

TEST(StateEncoding, RecordObservationValidates) {
    StateMatrix s;
    PhenomenaFeatures bad;
    bad[0] = 1.2;
    EXPECT_THROW(record_observation(s, 1, bad), RangeError);
    EXPECT_THROW(record_observation(s, 13, PhenomenaFeatures{}), RangeError);
}

TEST(Environment, LearnerInterface) {
    static_assert(QEnvironment<AuscultationEnv>);
    AuscultationEnv env;
    const auto e = exam_with_label(2);
    Rng rng(1);
    env.reset(e, rng);
    EXPECT_EQ(env.action_count(), 15);
    EXPECT_EQ(legal_count(env.legal_actions()), 15);
    const auto s = env.step_index(14, rng);
    EXPECT_TRUE(s.done);
    EXPECT_TRUE(s.correct);
    EXPECT_EQ(s.reward, 2.0);
}
