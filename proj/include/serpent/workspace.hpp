#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "arm_model.hpp"
#include "errors.hpp"

namespace serpent
{
    /// Tank enclosure. Used for rendering and containment checks, not during solving.
    struct TankModel
    {
        double radius = 21.0;
        double wall_height = 28.0;
        double base_z = -57.0; ///< tank floor, relative to the arm base

        void validate() const
        {
            if (!(radius > 0.0) || !(wall_height > 0.0))
                throw Error(ErrorCode::config_error, "tank radius and wall_height must be positive");
        }

        bool contains(const Point3 &p) const
        {
            return std::hypot(p.x(), p.y()) <= radius && p.z() >= base_z && p.z() <= base_z + wall_height;
        }

        bool operator==(const TankModel &) const = default;
    };

    /// Regular grid over the (r, z) half-plane. Node (i, j) sits at (r0 + i dr, z0 + j dz).
    struct GridSpec
    {
        double r0 = 1.0;
        double z0 = -56.0;
        double dr = 1.0;
        double dz = 1.0;
        int nr = 21;
        int nz = 28;

        void validate() const
        {
            if (!(dr > 0.0) || !(dz > 0.0))
                throw Error(ErrorCode::config_error, "grid spacing must be positive");
            if (nr < 1 || nz < 1)
                throw Error(ErrorCode::config_error, "grid counts must be positive");
        }

        std::size_t size() const { return static_cast<std::size_t>(nr) * static_cast<std::size_t>(nz); }

        /// Row-major: i (radial) varies fastest.
        std::size_t index(int i, int j) const
        {
            return static_cast<std::size_t>(j) * static_cast<std::size_t>(nr) + static_cast<std::size_t>(i);
        }

        bool in_grid(int i, int j) const { return i >= 0 && i < nr && j >= 0 && j < nz; }

        double r_max() const { return r0 + (nr - 1) * dr; }
        double z_max() const { return z0 + (nz - 1) * dz; }

        bool operator==(const GridSpec &) const = default;
    };

    /// A 3-D target expressed as a point in the solving plane plus a mast rotation.
    struct CylTarget
    {
        double r;
        double z;
        double theta; ///< degrees, in (-180, 180]
    };

    struct PlanePoint
    {
        double r;
        double z;
    };

    inline CylTarget decompose(const Point3 &p)
    {
        const double r = std::hypot(p.x(), p.y());
        if (r == 0.0)
            return {0.0, p.z(), 0.0};
        double theta = std::atan2(p.y(), p.x()) * (180.0 / std::numbers::pi);
        if (theta <= -180.0)
            theta += 360.0;
        return {r, p.z(), theta};
    }

    inline Point3 recompose(const CylTarget &t)
    {
        const double a = t.theta * (std::numbers::pi / 180.0);
        return {t.r * std::cos(a), t.r * std::sin(a), t.z};
    }

    inline PlanePoint grid_point_position(const GridSpec &spec, int i, int j)
    {
        if (!spec.in_grid(i, j))
            throw Error(ErrorCode::index_out_of_grid,
                        "(" + std::to_string(i) + ", " + std::to_string(j) + ") outside " +
                            std::to_string(spec.nr) + "x" + std::to_string(spec.nz) + " grid");
        return {spec.r0 + i * spec.dr, spec.z0 + j * spec.dz};
    }

    struct CellCoord
    {
        int i;
        int j;
        double u; ///< fraction along r within the cell
        double v; ///< fraction along z within the cell

        bool operator==(const CellCoord &) const = default;
    };

    namespace detail
    {
        /// Splits a grid coordinate t (in units of spacing) into a cell index in [0, n-2]
        /// and a fraction. Values within 1e-12 of a node snap onto it; a node starts
        /// the cell above it except on the far boundary, where the fraction is 1.
        inline bool split_axis(double t, int n, int &cell, double &frac)
        {
            constexpr double snap = 1e-12;
            const double nearest = std::round(t);
            if (std::abs(t - nearest) <= snap * std::max(1.0, std::abs(t)))
                t = nearest;
            if (t < 0.0 || t > n - 1)
                return false;
            if (n == 1)
            {
                cell = 0;
                frac = 0.0;
                return true;
            }
            cell = std::min(static_cast<int>(std::floor(t)), n - 2);
            frac = t - cell;
            return true;
        }
    }

    inline CellCoord containing_cell(const GridSpec &spec, double r, double z)
    {
        CellCoord out{};
        if (!std::isfinite(r) || !std::isfinite(z) ||
            !detail::split_axis((r - spec.r0) / spec.dr, spec.nr, out.i, out.u) ||
            !detail::split_axis((z - spec.z0) / spec.dz, spec.nz, out.j, out.v))
            throw Error(ErrorCode::out_of_workspace,
                        "(r=" + std::to_string(r) + ", z=" + std::to_string(z) + ") outside grid r in [" +
                            std::to_string(spec.r0) + ", " + std::to_string(spec.r_max()) + "], z in [" +
                            std::to_string(spec.z0) + ", " + std::to_string(spec.z_max()) + "]");
        return out;
    }
}
