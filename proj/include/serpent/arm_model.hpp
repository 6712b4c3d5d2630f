#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace serpent
{
    using Point3 = Eigen::Vector3d;

    inline constexpr std::size_t dof_count = 10;

    /// Index of each independent joint parameter in a DofVector.
    /// Stages 4 and 5 are bent as a unit, so each contributes one pitch and one yaw.
    enum Dof : std::size_t
    {
        mast_rotation = 0,
        stage1_pitch,
        stage2_pitch,
        stage3_pitch,
        stage4_pitch,
        stage4_yaw,
        stage5_pitch,
        stage5_yaw,
        wrist_roll,
        wrist_pitch,
    };

    inline constexpr std::array<const char *, dof_count> dof_names = {
        "mast_rotation", "stage1_pitch", "stage2_pitch", "stage3_pitch", "stage4_pitch",
        "stage4_yaw", "stage5_pitch", "stage5_yaw", "wrist_roll", "wrist_pitch"};

    /// The evolved configuration, in degrees.
    struct DofVector
    {
        std::array<double, dof_count> deg{};

        double &operator[](std::size_t c) { return deg[c]; }
        double operator[](std::size_t c) const { return deg[c]; }
        auto begin() { return deg.begin(); }
        auto end() { return deg.end(); }
        auto begin() const { return deg.begin(); }
        auto end() const { return deg.end(); }

        bool operator==(const DofVector &) const = default;
    };

    /// Two-norm of the componentwise difference, in degrees.
    inline double joint_distance(const DofVector &a, const DofVector &b)
    {
        double sum = 0.0;
        for (std::size_t c = 0; c < dof_count; ++c)
        {
            const double d = a[c] - b[c];
            sum += d * d;
        }
        return std::sqrt(sum);
    }

    struct Range
    {
        double min;
        double max;

        bool contains(double v) const { return v >= min && v <= max; }
        double clamp(double v) const { return std::clamp(v, min, max); }
        bool operator==(const Range &) const = default;
    };

    struct JointLimits
    {
        std::array<Range, dof_count> range{{
            {-180.0, 180.0}, // mast rotation
            {0.0, 45.0},     // stage 1-3 hinges bend one way only
            {0.0, 45.0},
            {0.0, 45.0},
            {-30.0, 30.0}, // stage 4 pitch
            {-15.0, 15.0}, // stage 4 yaw
            {-30.0, 30.0}, // stage 5 pitch
            {-30.0, 30.0}, // stage 5 yaw
            {-180.0, 180.0}, // wrist roll
            {-60.0, 60.0},   // wrist pitch
        }};

        const Range &operator[](std::size_t c) const { return range[c]; }
        Range &operator[](std::size_t c) { return range[c]; }

        bool contains(const DofVector &q) const
        {
            for (std::size_t c = 0; c < dof_count; ++c)
                if (!range[c].contains(q[c]))
                    return false;
            return true;
        }

        bool operator==(const JointLimits &) const = default;
    };

    struct ArmModel
    {
        double mast_length = 13.0;
        double stage123_segment_length = 11.0;
        int stage4_coupling_count = 3;
        double stage4_segment_length = 1.5;
        int stage5_coupling_count = 3;
        double stage5_segment_length = 1.5;
        double wrist_gripper_length = 1.5;
        JointLimits limits;

        bool operator==(const ArmModel &) const = default;

        void validate() const
        {
            auto positive = [](double v, const char *name) {
                if (!(v > 0.0) || !std::isfinite(v))
                    throw Error(ErrorCode::config_error, std::string(name) + " must be a positive length");
            };
            positive(mast_length, "mast_length");
            positive(stage123_segment_length, "stage123_segment_length");
            positive(stage4_segment_length, "stage4_segment_length");
            positive(stage5_segment_length, "stage5_segment_length");
            positive(wrist_gripper_length, "wrist_gripper_length");
            if (stage4_coupling_count < 1 || stage5_coupling_count < 1)
                throw Error(ErrorCode::config_error, "coupling counts must be >= 1");
            for (std::size_t c = 0; c < dof_count; ++c)
                if (!(limits[c].min < limits[c].max))
                    throw Error(ErrorCode::config_error, std::string("limits for ") + dof_names[c] + " must satisfy min < max");
        }

        /// Lengths of the rigid members from base to gripper tip, in chain order.
        std::vector<double> segment_lengths() const
        {
            std::vector<double> out;
            out.push_back(mast_length);
            for (int s = 0; s < 3; ++s)
                out.push_back(stage123_segment_length);
            for (int s = 0; s < stage4_coupling_count; ++s)
                out.push_back(stage4_segment_length);
            for (int s = 0; s < stage5_coupling_count; ++s)
                out.push_back(stage5_segment_length);
            out.push_back(wrist_gripper_length);
            return out;
        }

        double total_length() const
        {
            double sum = 0.0;
            for (double l : segment_lengths())
                sum += l;
            return sum;
        }

        std::size_t physical_joint_count() const
        {
            return 1 + 3 + 2 * static_cast<std::size_t>(stage4_coupling_count) +
                   2 * static_cast<std::size_t>(stage5_coupling_count) + 2;
        }
    };

    struct ArmPose
    {
        /// Base origin, then the far end of every rigid member; the last point is the gripper tip.
        std::vector<Point3> points;

        const Point3 &end_effector() const { return points.back(); }
    };

    /// Per-physical-joint angles, with the stage-4/5 pitch and yaw replicated over every coupling:
    /// mast, stage 1-3 pitches, (pitch, yaw) per stage-4 coupling, (pitch, yaw) per stage-5 coupling,
    /// wrist roll, wrist pitch.
    inline std::vector<double> expand_dofs(const ArmModel &model, const DofVector &q)
    {
        std::vector<double> out;
        out.reserve(model.physical_joint_count());
        out.push_back(q[mast_rotation]);
        out.push_back(q[stage1_pitch]);
        out.push_back(q[stage2_pitch]);
        out.push_back(q[stage3_pitch]);
        for (int k = 0; k < model.stage4_coupling_count; ++k)
        {
            out.push_back(q[stage4_pitch]);
            out.push_back(q[stage4_yaw]);
        }
        for (int k = 0; k < model.stage5_coupling_count; ++k)
        {
            out.push_back(q[stage5_pitch]);
            out.push_back(q[stage5_yaw]);
        }
        out.push_back(q[wrist_roll]);
        out.push_back(q[wrist_pitch]);
        return out;
    }

    /// Physical range of every entry of expand_dofs, in the same order.
    inline std::vector<Range> expanded_limits(const ArmModel &model)
    {
        DofVector lo, hi;
        for (std::size_t c = 0; c < dof_count; ++c)
        {
            lo[c] = model.limits[c].min;
            hi[c] = model.limits[c].max;
        }
        const auto lows = expand_dofs(model, lo);
        const auto highs = expand_dofs(model, hi);
        std::vector<Range> out(lows.size());
        for (std::size_t k = 0; k < lows.size(); ++k)
            out[k] = {lows[k], highs[k]};
        return out;
    }

    inline DofVector clamp(const ArmModel &model, DofVector q)
    {
        for (std::size_t c = 0; c < dof_count; ++c)
            q[c] = model.limits[c].clamp(q[c]);
        return q;
    }

    namespace detail
    {
        inline double radians(double deg) { return deg * (std::numbers::pi / 180.0); }

        inline Eigen::Matrix3d about_z(double deg)
        {
            const double a = radians(deg), c = std::cos(a), s = std::sin(a);
            Eigen::Matrix3d r;
            r << c, -s, 0, s, c, 0, 0, 0, 1;
            return r;
        }

        /// Pitch about the local y-axis. Positive pitch swings the local -z axis toward +x.
        inline Eigen::Matrix3d pitch(double deg)
        {
            const double a = radians(deg), c = std::cos(a), s = std::sin(a);
            Eigen::Matrix3d r;
            r << c, 0, -s, 0, 1, 0, s, 0, c;
            return r;
        }

        /// Yaw about the local x-axis. Positive yaw swings the local -z axis toward +y.
        inline Eigen::Matrix3d yaw(double deg)
        {
            const double a = radians(deg), c = std::cos(a), s = std::sin(a);
            Eigen::Matrix3d r;
            r << 1, 0, 0, 0, c, -s, 0, s, c;
            return r;
        }

        inline void require_limits(const ArmModel &model, const DofVector &q)
        {
            for (std::size_t c = 0; c < dof_count; ++c)
                if (!model.limits[c].contains(q[c]))
                    throw Error(ErrorCode::limit_violation,
                                std::string(dof_names[c]) + " = " + std::to_string(q[c]) + " outside [" +
                                    std::to_string(model.limits[c].min) + ", " + std::to_string(model.limits[c].max) + "]");
        }

        /// Walks the chain, calling visit(point) at the base and after every member.
        template <typename Visit>
        void walk_chain(const ArmModel &model, const DofVector &q, Visit &&visit)
        {
            const Eigen::Vector3d down(0.0, 0.0, -1.0);
            Eigen::Matrix3d frame = about_z(q[mast_rotation]);
            Point3 p = Point3::Zero();
            visit(p);
            p += model.mast_length * (frame * down);
            visit(p);

            for (std::size_t s = 0; s < 3; ++s)
            {
                frame = frame * pitch(q[stage1_pitch + s]);
                p += model.stage123_segment_length * (frame * down);
                visit(p);
            }

            const Eigen::Matrix3d bend4 = pitch(q[stage4_pitch]) * yaw(q[stage4_yaw]);
            for (int k = 0; k < model.stage4_coupling_count; ++k)
            {
                frame = frame * bend4;
                p += model.stage4_segment_length * (frame * down);
                visit(p);
            }

            const Eigen::Matrix3d bend5 = pitch(q[stage5_pitch]) * yaw(q[stage5_yaw]);
            for (int k = 0; k < model.stage5_coupling_count; ++k)
            {
                frame = frame * bend5;
                p += model.stage5_segment_length * (frame * down);
                visit(p);
            }

            frame = frame * about_z(q[wrist_roll]) * pitch(q[wrist_pitch]);
            p += model.wrist_gripper_length * (frame * down);
            visit(p);
        }
    }

    /// Base frame: +z up, the unbent arm hangs along -z from the actuation package at the origin.
    /// Throws limit_violation for out-of-range input; call clamp() first if needed.
    inline ArmPose forward_kinematics(const ArmModel &model, const DofVector &q)
    {
        detail::require_limits(model, q);
        ArmPose pose;
        pose.points.reserve(model.segment_lengths().size() + 1);
        detail::walk_chain(model, q, [&](const Point3 &p) { pose.points.push_back(p); });
        return pose;
    }

    inline Point3 end_effector(const ArmModel &model, const DofVector &q)
    {
        detail::require_limits(model, q);
        Point3 last;
        detail::walk_chain(model, q, [&](const Point3 &p) { last = p; });
        return last;
    }

    /// Opt-in customer constraints. Zero weights disable a term.
    struct ConstraintWeights
    {
        double hard_stop = 0.0;      ///< per degree inside the margin
        double hard_stop_margin = 5.0; ///< degrees
        double lowest_point = 0.0;   ///< per foot a chain point sits below the gripper

        bool active() const { return hard_stop != 0.0 || lowest_point != 0.0; }
        bool operator==(const ConstraintWeights &) const = default;
    };

    /// Hard-stop proximity over the evolved DOFs (mast rotation included), in degrees.
    inline double hard_stop_term(const ArmModel &model, const DofVector &q, double margin)
    {
        double sum = 0.0;
        for (std::size_t c = 0; c < dof_count; ++c)
        {
            const double nearest = std::min(q[c] - model.limits[c].min, model.limits[c].max - q[c]);
            sum += std::max(0.0, margin - nearest);
        }
        return sum;
    }

    /// Sum over chain points of how far each sits below the end effector, in feet.
    inline double lowest_point_term(const ArmPose &pose)
    {
        const double z_ee = pose.end_effector().z();
        double sum = 0.0;
        for (const auto &p : pose.points)
            sum += std::max(0.0, z_ee - p.z());
        return sum;
    }

    inline double constraint_penalties(const ArmModel &model, const DofVector &q, const ArmPose &pose,
                                       const ConstraintWeights &weights)
    {
        double total = 0.0;
        if (weights.hard_stop != 0.0)
            total += weights.hard_stop * hard_stop_term(model, q, weights.hard_stop_margin);
        if (weights.lowest_point != 0.0)
            total += weights.lowest_point * lowest_point_term(pose);
        return total;
    }
}
