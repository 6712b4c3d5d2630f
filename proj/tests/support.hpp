#pragma once

// Test-only oracles. They share no code with the library paths they check.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <serpent/arm_model.hpp>
#include <serpent/config_table.hpp>
#include <serpent/rng.hpp>

namespace oracle
{
    using Mat4 = std::array<std::array<double, 4>, 4>;

    inline Mat4 identity()
    {
        Mat4 m{};
        for (int k = 0; k < 4; ++k)
            m[k][k] = 1.0;
        return m;
    }

    inline Mat4 mul(const Mat4 &a, const Mat4 &b)
    {
        Mat4 out{};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                for (int k = 0; k < 4; ++k)
                    out[r][c] += a[r][k] * b[k][c];
        return out;
    }

    inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }

    inline Mat4 rot_z(double deg)
    {
        Mat4 m = identity();
        m[0][0] = std::cos(rad(deg));
        m[0][1] = -std::sin(rad(deg));
        m[1][0] = std::sin(rad(deg));
        m[1][1] = std::cos(rad(deg));
        return m;
    }

    // Swings local -z toward +x for positive angles.
    inline Mat4 rot_pitch(double deg)
    {
        Mat4 m = identity();
        m[0][0] = std::cos(rad(deg));
        m[0][2] = -std::sin(rad(deg));
        m[2][0] = std::sin(rad(deg));
        m[2][2] = std::cos(rad(deg));
        return m;
    }

    // Swings local -z toward +y for positive angles.
    inline Mat4 rot_yaw(double deg)
    {
        Mat4 m = identity();
        m[1][1] = std::cos(rad(deg));
        m[1][2] = -std::sin(rad(deg));
        m[2][1] = std::sin(rad(deg));
        m[2][2] = std::cos(rad(deg));
        return m;
    }

    inline Mat4 drop(double length)
    {
        Mat4 m = identity();
        m[2][3] = -length;
        return m;
    }

    struct Vec3
    {
        double x, y, z;
    };

    /// Every chain point, base first.
    inline std::vector<Vec3> chain(const serpent::ArmModel &m, const std::array<double, 10> &q)
    {
        std::vector<Vec3> pts{{0, 0, 0}};
        auto record = [&](const Mat4 &t) { pts.push_back({t[0][3], t[1][3], t[2][3]}); };
        Mat4 t = mul(rot_z(q[0]), drop(m.mast_length));
        record(t);
        for (int s = 0; s < 3; ++s)
        {
            t = mul(mul(t, rot_pitch(q[1 + s])), drop(m.stage123_segment_length));
            record(t);
        }
        for (int k = 0; k < m.stage4_coupling_count; ++k)
        {
            t = mul(mul(mul(t, rot_pitch(q[4])), rot_yaw(q[5])), drop(m.stage4_segment_length));
            record(t);
        }
        for (int k = 0; k < m.stage5_coupling_count; ++k)
        {
            t = mul(mul(mul(t, rot_pitch(q[6])), rot_yaw(q[7])), drop(m.stage5_segment_length));
            record(t);
        }
        t = mul(mul(mul(t, rot_z(q[8])), rot_pitch(q[9])), drop(m.wrist_gripper_length));
        record(t);
        return pts;
    }

    inline Vec3 tip(const serpent::ArmModel &m, const std::array<double, 10> &q) { return chain(m, q).back(); }

    /// Brute-force neighbor penalty: scan the 3x3 block around (i, j) and keep the offsets the mode admits.
    /// mode 0: diagonals only, 1: edge-adjacent only, 2: all eight.
    inline double penalty(const serpent::ConfigTable &t, int i, int j, int mode)
    {
        double sum = 0.0;
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
            {
                if (di == 0 && dj == 0)
                    continue;
                const bool diagonal = di != 0 && dj != 0;
                if ((mode == 0 && !diagonal) || (mode == 1 && diagonal))
                    continue;
                const int k = i + di, m = j + dj;
                if (k < 0 || m < 0 || k >= t.spec.nr || m >= t.spec.nz)
                    continue;
                const auto &a = t.entries[static_cast<std::size_t>(j * t.spec.nr + i)];
                const auto &b = t.entries[static_cast<std::size_t>(m * t.spec.nr + k)];
                double sq = 0.0;
                for (int c = 0; c < 10; ++c)
                    sq += (a.deg[c] - b.deg[c]) * (a.deg[c] - b.deg[c]);
                sum += std::sqrt(sq);
            }
        return sum;
    }

    inline double total_penalty(const serpent::ConfigTable &t, int mode)
    {
        double sum = 0.0;
        for (int j = 0; j < t.spec.nz; ++j)
            for (int i = 0; i < t.spec.nr; ++i)
                sum += penalty(t, i, j, mode);
        return sum;
    }
}

namespace testing_support
{
    inline serpent::DofVector random_in_limits(const serpent::ArmModel &m, serpent::Rng &rng)
    {
        serpent::DofVector q;
        for (std::size_t c = 0; c < serpent::dof_count; ++c)
            q[c] = rng.uniform(m.limits[c].min, m.limits[c].max);
        return q;
    }

    /// A table filled with random in-limit entries (flags all converged).
    inline serpent::ConfigTable random_table(const serpent::ArmModel &m, serpent::GridSpec spec, std::uint64_t seed)
    {
        serpent::ConfigTable t(spec, serpent::model_fingerprint(m));
        serpent::Rng rng(seed);
        for (auto &q : t.entries)
            q = random_in_limits(m, rng);
        std::fill(t.converged.begin(), t.converged.end(), 1);
        return t;
    }

    /// A small grid inside the reachable band of the default arm.
    inline serpent::GridSpec small_grid(int nr = 5, int nz = 4)
    {
        serpent::GridSpec g;
        g.r0 = 6.0;
        g.z0 = -50.0;
        g.nr = nr;
        g.nz = nz;
        return g;
    }
}
