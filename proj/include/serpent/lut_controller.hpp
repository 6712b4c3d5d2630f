#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "arm_model.hpp"
#include "config_table.hpp"
#include "errors.hpp"
#include "workspace.hpp"

namespace serpent
{
    /// Bilinear blend inside cell (i, j) at fractions (u, v), clamped to limits.
    /// Weights are (1-u)(1-v), u(1-v), (1-u)v, uv on corners (i,j), (i+1,j), (i,j+1), (i+1,j+1),
    /// evaluated as nested std::lerp so corners come back exactly, shared edges agree bit for
    /// bit and no component leaves the range of its corners.
    inline DofVector interpolate_in_cell(const ConfigTable &table, const ArmModel &model, int i, int j, double u, double v)
    {
        const auto &spec = table.spec;
        const int i1 = std::min(i + 1, spec.nr - 1);
        const int j1 = std::min(j + 1, spec.nz - 1);
        const std::array<int, 4> ci{i, i1, i, i1};
        const std::array<int, 4> cj{j, j, j1, j1};
        for (int k = 0; k < 4; ++k)
            if (!table.converged_at(ci[k], cj[k]))
                throw Error(ErrorCode::unconverged_cell, "corner (" + std::to_string(ci[k]) + ", " + std::to_string(cj[k]) +
                                                             ") of cell (" + std::to_string(i) + ", " + std::to_string(j) +
                                                             ") is not converged");
        DofVector q;
        for (std::size_t c = 0; c < dof_count; ++c)
        {
            const double lo = std::lerp(table.at(ci[0], cj[0])[c], table.at(ci[1], cj[1])[c], u);
            const double hi = std::lerp(table.at(ci[2], cj[2])[c], table.at(ci[3], cj[3])[c], u);
            q[c] = std::lerp(lo, hi, v);
        }
        return clamp(model, q);
    }

    inline DofVector interpolate(const ConfigTable &table, const ArmModel &model, double r, double z)
    {
        const CellCoord cell = containing_cell(table.spec, r, z);
        return interpolate_in_cell(table, model, cell.i, cell.j, cell.u, cell.v);
    }

    /// Table configuration for a 3-D target: interpolated in the plane, mast rotated to the target's bearing.
    inline DofVector ik_lookup(const ConfigTable &table, const ArmModel &model, const Point3 &p)
    {
        const CylTarget t = decompose(p);
        DofVector q = interpolate(table, model, t.r, t.z);
        q[mast_rotation] = t.theta;
        return q;
    }

    /// Signed difference b - a on the shortest arc, in (-180, 180].
    inline double angle_delta(double a, double b)
    {
        double d = std::fmod(b - a, 360.0);
        if (d > 180.0)
            d -= 360.0;
        else if (d <= -180.0)
            d += 360.0;
        return d;
    }

    struct TrajectorySample
    {
        Point3 target;
        CylTarget cyl;
        DofVector config;
        Point3 achieved;
        double deviation = 0.0;  ///< feet
        DofVector delta;         ///< degrees from the previous sample (zero for the first)
        double max_delta = 0.0;  ///< largest |delta| component
        bool rate_flag = false;  ///< max_delta exceeds the joint-rate limit
    };

    struct Trajectory
    {
        std::vector<TrajectorySample> samples;
        double step = 0.0;
        double max_joint_rate = 0.0;

        std::size_t rate_violations() const
        {
            return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto &s) { return s.rate_flag; }));
        }

        double max_deviation() const
        {
            double m = 0.0;
            for (const auto &s : samples)
                m = std::max(m, s.deviation);
            return m;
        }

        double max_joint_delta() const
        {
            double m = 0.0;
            for (const auto &s : samples)
                m = std::max(m, s.max_delta);
            return m;
        }
    };

    /// Straight-line sampling between consecutive waypoints at arc-length intervals <= step.
    /// Zero-length segments add no samples.
    inline std::vector<Point3> sample_path(const std::vector<Point3> &waypoints, double step)
    {
        std::vector<Point3> out;
        if (waypoints.empty())
            return out;
        out.push_back(waypoints.front());
        for (std::size_t k = 1; k < waypoints.size(); ++k)
        {
            const Point3 a = waypoints[k - 1], b = waypoints[k];
            const double len = (b - a).norm();
            if (len == 0.0)
                continue;
            const auto n = static_cast<std::size_t>(std::ceil(len / step));
            for (std::size_t s = 1; s <= n; ++s)
                out.push_back(s == n ? b : Point3(a + (b - a) * (static_cast<double>(s) / static_cast<double>(n))));
        }
        return out;
    }

    /// Looks up every sample, recomputes the achieved position by forward kinematics and flags
    /// (does not re-time) samples whose joint change exceeds max_joint_rate degrees.
    /// The mast delta is taken on the shortest arc.
    inline Trajectory plan_trajectory(const ConfigTable &table, const ArmModel &model, const std::vector<Point3> &waypoints, double step,
                                      double max_joint_rate)
    {
        if (waypoints.size() < 2)
            throw Error(ErrorCode::invalid_argument, "a trajectory needs at least two waypoints");
        if (!(step > 0.0))
            throw Error(ErrorCode::invalid_argument, "step must be positive");
        if (!(max_joint_rate > 0.0))
            throw Error(ErrorCode::invalid_argument, "max_joint_rate must be positive");

        Trajectory traj;
        traj.step = step;
        traj.max_joint_rate = max_joint_rate;
        const auto points = sample_path(waypoints, step);
        traj.samples.reserve(points.size());
        for (std::size_t k = 0; k < points.size(); ++k)
        {
            TrajectorySample s;
            s.target = points[k];
            s.cyl = decompose(s.target);
            try
            {
                s.config = ik_lookup(table, model, s.target);
            }
            catch (const Error &e)
            {
                throw Error(e.code(), "sample " + std::to_string(k) + ": " + e.detail(), k);
            }
            s.achieved = end_effector(model, s.config);
            s.deviation = (s.achieved - s.target).norm();
            if (!traj.samples.empty())
            {
                const DofVector &prev = traj.samples.back().config;
                for (std::size_t c = 0; c < dof_count; ++c)
                    s.delta[c] = c == mast_rotation ? angle_delta(prev[c], s.config[c]) : s.config[c] - prev[c];
                for (double d : s.delta)
                    s.max_delta = std::max(s.max_delta, std::abs(d));
                s.rate_flag = s.max_delta > max_joint_rate;
            }
            traj.samples.push_back(s);
        }
        return traj;
    }

    inline std::string trajectory_csv(const Trajectory &t)
    {
        std::string out = "index,target_x,target_y,target_z,r,z,theta";
        for (const char *name : dof_names)
            out += std::string(",") + name;
        out += ",achieved_x,achieved_y,achieved_z,deviation,max_joint_delta,rate_flag\n";
        char buf[64];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        };
        for (std::size_t k = 0; k < t.samples.size(); ++k)
        {
            const auto &s = t.samples[k];
            out += std::to_string(k);
            num(s.target.x());
            num(s.target.y());
            num(s.target.z());
            num(s.cyl.r);
            num(s.cyl.z);
            num(s.cyl.theta);
            for (double q : s.config)
                num(q);
            num(s.achieved.x());
            num(s.achieved.y());
            num(s.achieved.z());
            num(s.deviation);
            num(s.max_delta);
            out += s.rate_flag ? ",1\n" : ",0\n";
        }
        return out;
    }

    /// Waypoints: one `x,y,z` per line in feet. Blank lines, `#` comments and an
    /// `x,y,z` header are skipped.
    inline std::vector<Point3> parse_waypoints(const std::string &text)
    {
        std::vector<Point3> out;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#')
                continue;
            if (line.compare(first, 1, "x") == 0)
                continue;
            double x, y, z;
            char c1, c2;
            std::istringstream ls(line);
            if (!(ls >> x >> c1 >> y >> c2 >> z) || c1 != ',' || c2 != ',')
                throw Error(ErrorCode::file_error, "waypoints line " + std::to_string(lineno) + ": expected x,y,z");
            out.emplace_back(x, y, z);
        }
        return out;
    }

    inline std::vector<Point3> load_waypoints(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::file_error, "cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_waypoints(buf.str());
    }

    /// Hazards for the componentwise interpolation: cells with all corners converged whose
    /// wrist-roll values span more than 180 degrees. Empty when the table is usable as is.
    inline std::vector<std::string> validate_table(const ConfigTable &t)
    {
        std::vector<std::string> issues;
        const auto &spec = t.spec;
        if (t.entries.size() != spec.size() || t.residual.size() != spec.size() || t.converged.size() != spec.size())
        {
            issues.push_back("entry count does not match the grid");
            return issues;
        }
        for (int j = 0; j + 1 < spec.nz; ++j)
            for (int i = 0; i + 1 < spec.nr; ++i)
            {
                if (!t.converged_at(i, j) || !t.converged_at(i + 1, j) || !t.converged_at(i, j + 1) || !t.converged_at(i + 1, j + 1))
                    continue;
                const double rolls[4] = {t.at(i, j)[wrist_roll], t.at(i + 1, j)[wrist_roll], t.at(i, j + 1)[wrist_roll],
                                         t.at(i + 1, j + 1)[wrist_roll]};
                const auto [lo, hi] = std::minmax_element(std::begin(rolls), std::end(rolls));
                if (*hi - *lo > 180.0)
                {
                    char buf[160];
                    std::snprintf(buf, sizeof buf, "cell (%d, %d): wrist roll spans %.3f degrees across its corners", i, j, *hi - *lo);
                    issues.emplace_back(buf);
                }
            }
        return issues;
    }
}
