#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <serpent/arm_model.hpp>

#include "support.hpp"

using namespace serpent;

namespace
{
    DofVector with(std::size_t c, double v)
    {
        DofVector q{};
        q[c] = v;
        return q;
    }

    void expect_point(const Point3 &p, double x, double y, double z, double tol = 1e-9)
    {
        EXPECT_NEAR(p.x(), x, tol);
        EXPECT_NEAR(p.y(), y, tol);
        EXPECT_NEAR(p.z(), z, tol);
    }
}

TEST(JointLimits, DefaultsMatchArmSpecification)
{
    const JointLimits l;
    EXPECT_EQ(l[mast_rotation], (Range{-180, 180}));
    for (auto c : {stage1_pitch, stage2_pitch, stage3_pitch})
        EXPECT_EQ(l[c], (Range{0, 45}));
    EXPECT_EQ(l[stage4_pitch], (Range{-30, 30}));
    EXPECT_EQ(l[stage4_yaw], (Range{-15, 15}));
    EXPECT_EQ(l[stage5_pitch], (Range{-30, 30}));
    EXPECT_EQ(l[stage5_yaw], (Range{-30, 30}));
    EXPECT_EQ(l[wrist_roll], (Range{-180, 180}));
    EXPECT_EQ(l[wrist_pitch], (Range{-60, 60}));
}

TEST(ArmModel, ValidateRejectsBadGeometry)
{
    ArmModel m;
    EXPECT_NO_THROW(m.validate());
    m.stage4_segment_length = 0.0;
    EXPECT_THROW(m.validate(), Error);
    m = ArmModel{};
    m.stage5_coupling_count = 0;
    EXPECT_THROW(m.validate(), Error);
    m = ArmModel{};
    m.limits[wrist_pitch] = {10, 10};
    EXPECT_THROW(m.validate(), Error);
}

TEST(ExpandDofs, ZeroGivesEighteenZeros)
{
    const auto angles = expand_dofs(ArmModel{}, DofVector{});
    ASSERT_EQ(angles.size(), 18u);
    for (double a : angles)
        EXPECT_EQ(a, 0.0);
}

TEST(ExpandDofs, StageFourPitchIsReplicated)
{
    const auto angles = expand_dofs(ArmModel{}, with(stage4_pitch, 10.0));
    // layout: mast, a1..a3, (p4, y4) x3, (p5, y5) x3, roll, wrist pitch
    EXPECT_EQ(angles[4], 10.0);
    EXPECT_EQ(angles[6], 10.0);
    EXPECT_EQ(angles[8], 10.0);
    EXPECT_EQ(angles[5], 0.0);
}

TEST(ExpandDofs, StageFiveYawIsReplicatedAndNothingElseMoves)
{
    const auto angles = expand_dofs(ArmModel{}, with(stage5_yaw, -12.0));
    for (std::size_t k = 0; k < angles.size(); ++k)
    {
        const bool s5_yaw = k == 11 || k == 13 || k == 15;
        EXPECT_EQ(angles[k], s5_yaw ? -12.0 : 0.0) << "entry " << k;
    }
}

TEST(ExpandDofs, ClampedVectorsStayInsidePhysicalRanges)
{
    const ArmModel m;
    const auto ranges = expanded_limits(m);
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial)
    {
        DofVector q;
        for (auto &v : q)
            v = rng.uniform(-400.0, 400.0);
        const auto angles = expand_dofs(m, clamp(m, q));
        ASSERT_EQ(angles.size(), ranges.size());
        for (std::size_t k = 0; k < angles.size(); ++k)
            EXPECT_TRUE(ranges[k].contains(angles[k]));
    }
}

TEST(ForwardKinematics, StraightChainHangsFullLength)
{
    const ArmModel m;
    EXPECT_DOUBLE_EQ(m.total_length(), 56.5);
    expect_point(end_effector(m, DofVector{}), 0, 0, -56.5);
    expect_point(end_effector(m, with(mast_rotation, 90.0)), 0, 0, -56.5);
}

TEST(ForwardKinematics, MatchesFrozenOracleValues)
{
    // Frozen from tests/oracles/fk_oracle.py (4x4 homogeneous transforms).
    const ArmModel m;
    expect_point(end_effector(m, with(stage1_pitch, 45.0)), 30.759144981614824, 0.0, -43.759144981614824);
    DofVector mixed;
    mixed.deg = {30, 10, 20, 5, -12, 7, 25, -18, 90, 40};
    expect_point(end_effector(m, mixed), 16.277259455174608, 9.243016611667514, -49.756912794879788);
}

TEST(ForwardKinematics, PoseHasOnePointPerMemberBoundary)
{
    const ArmModel m;
    const ArmPose pose = forward_kinematics(m, DofVector{});
    ASSERT_EQ(pose.points.size(), 12u);
    expect_point(pose.points.front(), 0, 0, 0);
    expect_point(pose.points[1], 0, 0, -13);
    EXPECT_EQ(pose.end_effector(), end_effector(m, DofVector{}));
}

TEST(ForwardKinematics, RejectsOutOfLimitInput)
{
    const ArmModel m;
    try
    {
        (void)forward_kinematics(m, with(stage1_pitch, 50.0));
        FAIL() << "expected limit_violation";
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), ErrorCode::limit_violation);
    }
    EXPECT_THROW((void)end_effector(m, with(stage4_yaw, -15.5)), Error);
}

TEST(ForwardKinematics, RandomConfigurationsAgreeWithMatrixOracle)
{
    const ArmModel m;
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial)
    {
        const DofVector q = testing_support::random_in_limits(m, rng);
        const Point3 p = end_effector(m, q);
        const auto o = oracle::tip(m, q.deg);
        EXPECT_NEAR(p.x(), o.x, 1e-9);
        EXPECT_NEAR(p.y(), o.y, 1e-9);
        EXPECT_NEAR(p.z(), o.z, 1e-9);
    }
}

TEST(ForwardKinematics, NonDefaultGeometryAgreesWithOracle)
{
    ArmModel m;
    m.stage4_coupling_count = 5;
    m.stage4_segment_length = 0.75;
    m.stage5_coupling_count = 2;
    m.wrist_gripper_length = 2.25;
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial)
    {
        const DofVector q = testing_support::random_in_limits(m, rng);
        const auto pose = forward_kinematics(m, q);
        const auto pts = oracle::chain(m, q.deg);
        ASSERT_EQ(pose.points.size(), pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k)
            expect_point(pose.points[k], pts[k].x, pts[k].y, pts[k].z);
    }
}

TEST(ForwardKinematics, MastRotationIsEquivariant)
{
    const ArmModel m;
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial)
    {
        DofVector q = testing_support::random_in_limits(m, rng);
        const double theta = q[mast_rotation];
        q[mast_rotation] = 0.0;
        const Point3 base = end_effector(m, q);
        q[mast_rotation] = theta;
        const Point3 rotated = end_effector(m, q);
        const double a = theta * std::numbers::pi / 180.0;
        expect_point(rotated, std::cos(a) * base.x() - std::sin(a) * base.y(), std::sin(a) * base.x() + std::cos(a) * base.y(),
                     base.z());
    }
}

TEST(ForwardKinematics, SegmentLengthsAreConserved)
{
    const ArmModel m;
    const auto lengths = m.segment_lengths();
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto pose = forward_kinematics(m, testing_support::random_in_limits(m, rng));
        ASSERT_EQ(pose.points.size(), lengths.size() + 1);
        for (std::size_t k = 0; k < lengths.size(); ++k)
            EXPECT_NEAR((pose.points[k + 1] - pose.points[k]).norm(), lengths[k], 1e-9);
    }
}

TEST(Clamp, ClipsToLimits)
{
    const ArmModel m;
    EXPECT_EQ(clamp(m, with(stage1_pitch, 50.0))[stage1_pitch], 45.0);
    EXPECT_EQ(clamp(m, with(stage4_yaw, -20.0))[stage4_yaw], -15.0);
    DofVector inside;
    inside.deg = {10, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_EQ(clamp(m, inside), inside);
}

TEST(Clamp, IsAnIdempotentProjection)
{
    const ArmModel m;
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial)
    {
        DofVector q;
        for (auto &v : q)
            v = rng.uniform(-250.0, 250.0);
        const DofVector once = clamp(m, q);
        EXPECT_EQ(clamp(m, once), once);
        EXPECT_TRUE(m.limits.contains(once));
        EXPECT_EQ(once == q, m.limits.contains(q));
    }
}

TEST(ConstraintPenalties, StraightDownHasNoLowestPointViolation)
{
    const ArmModel m;
    const DofVector q{};
    const ConstraintWeights w{1.0, 5.0, 1.0};
    EXPECT_EQ(lowest_point_term(forward_kinematics(m, q)), 0.0);
    // Only the stage 1-3 lower stops (0 degrees) are within the margin.
    EXPECT_DOUBLE_EQ(constraint_penalties(m, q, forward_kinematics(m, q), w), 15.0);
}

TEST(ConstraintPenalties, HardStopMarginCountsDistanceInsideMargin)
{
    const ArmModel m;
    DofVector q;
    q.deg = {0, 45, 20, 20, 0, 0, 0, 0, 0, 0};
    const ConstraintWeights w{1.0, 5.0, 0.0};
    EXPECT_DOUBLE_EQ(constraint_penalties(m, q, forward_kinematics(m, q), w), 5.0);
    q[stage1_pitch] = 43.0;
    EXPECT_DOUBLE_EQ(hard_stop_term(m, q, 5.0), 3.0);
}

TEST(ConstraintPenalties, LowestPointMatchesOracleSum)
{
    const ArmModel m;
    DofVector q;
    q.deg = {0, 45, 45, 45, 30, 0, 30, 0, 0, 60};
    const auto pose = forward_kinematics(m, q);
    // Frozen from tests/oracles/fk_oracle.py lowest_point_sum.
    EXPECT_NEAR(lowest_point_term(pose), 21.351904143838464, 1e-9);
    const ConstraintWeights w{0.0, 5.0, 2.0};
    EXPECT_NEAR(constraint_penalties(m, q, pose, w), 2.0 * 21.351904143838464, 1e-9);
}

TEST(ConstraintPenalties, ZeroWeightsDisableEverything)
{
    const ArmModel m;
    DofVector q;
    q.deg = {0, 45, 45, 45, 30, 0, 30, 0, 0, 60};
    EXPECT_EQ(constraint_penalties(m, q, forward_kinematics(m, q), ConstraintWeights{}), 0.0);
}
