#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "arm_model.hpp"
#include "config_table.hpp"
#include "model_io.hpp"
#include "rng.hpp"
#include "workspace.hpp"

namespace serpent
{
    struct EsParams
    {
        std::array<double, dof_count> sigma_init = filled(10.0); ///< degrees
        std::array<double, dof_count> decay = filled(0.95);
        double tolerance = 1.0 / 12.0;                           ///< feet (one inch)
        std::int64_t max_evals = 50'000;                         ///< per point
        int fail_reset_threshold = 200;                          ///< consecutive failures of one component
        int max_resets = 5;                                      ///< resets before giving up on a point
        int sweep_passes = 100;                                  ///< grid passes; later passes revisit unconverged nodes
        std::uint64_t seed = 1;
        ConstraintWeights constraints;

        static constexpr std::array<double, dof_count> filled(double v)
        {
            std::array<double, dof_count> a{};
            a.fill(v);
            return a;
        }

        void validate() const
        {
            for (std::size_t c = 0; c < dof_count; ++c)
            {
                if (!(sigma_init[c] > 0.0))
                    throw Error(ErrorCode::config_error, "sigma_init must be > 0");
                if (!(decay[c] > 0.0 && decay[c] < 1.0))
                    throw Error(ErrorCode::config_error, "decay must lie in (0, 1)");
            }
            if (!(tolerance > 0.0))
                throw Error(ErrorCode::config_error, "tolerance must be > 0");
            if (max_evals < 0 || fail_reset_threshold < 1 || max_resets < 0 || sweep_passes < 1)
                throw Error(ErrorCode::config_error, "max_evals, fail_reset_threshold and max_resets must be non-negative");
        }

        bool operator==(const EsParams &) const = default;
    };

    inline ordered_json to_json(const EsParams &p)
    {
        return {{"sigma_init", p.sigma_init},
                {"decay", p.decay},
                {"tolerance", p.tolerance},
                {"max_evals", p.max_evals},
                {"fail_reset_threshold", p.fail_reset_threshold},
                {"max_resets", p.max_resets},
                {"sweep_passes", p.sweep_passes},
                {"seed", p.seed},
                {"constraints",
                 {{"hard_stop", p.constraints.hard_stop},
                  {"hard_stop_margin", p.constraints.hard_stop_margin},
                  {"lowest_point", p.constraints.lowest_point}}}};
    }

    namespace detail
    {
        inline void read_per_dof(const ordered_json &j, const char *key, std::array<double, dof_count> &out)
        {
            if (!j.contains(key))
                return;
            if (j[key].is_number())
                out.fill(j[key].get<double>());
            else
                out = j[key].get<std::array<double, dof_count>>();
        }
    }

    inline EsParams es_params_from_json(const ordered_json &j, EsParams p = {})
    {
        detail::read_per_dof(j, "sigma_init", p.sigma_init);
        detail::read_per_dof(j, "decay", p.decay);
        p.tolerance = j.value("tolerance", p.tolerance);
        p.max_evals = j.value("max_evals", p.max_evals);
        p.fail_reset_threshold = j.value("fail_reset_threshold", p.fail_reset_threshold);
        p.max_resets = j.value("max_resets", p.max_resets);
        p.sweep_passes = j.value("sweep_passes", p.sweep_passes);
        p.seed = j.value("seed", p.seed);
        if (j.contains("constraints"))
        {
            const auto &c = j["constraints"];
            p.constraints.hard_stop = c.value("hard_stop", p.constraints.hard_stop);
            p.constraints.hard_stop_margin = c.value("hard_stop_margin", p.constraints.hard_stop_margin);
            p.constraints.lowest_point = c.value("lowest_point", p.constraints.lowest_point);
        }
        p.validate();
        return p;
    }

    /// Per-component annealing bookkeeping.
    /// Between resets, sigma[c] == sigma_init[c] * decay[c]^positive[c].
    struct AnnealState
    {
        std::array<double, dof_count> sigma_init{};
        std::array<double, dof_count> decay{};
        std::array<double, dof_count> sigma{};
        std::array<int, dof_count> positive{};
        std::array<int, dof_count> failures{};
        int resets = 0;

        AnnealState() = default;

        explicit AnnealState(const EsParams &p) : sigma_init(p.sigma_init), decay(p.decay), sigma(p.sigma_init) {}

        void accept(std::size_t c)
        {
            ++positive[c];
            failures[c] = 0;
            sigma[c] = sigma_init[c] * std::pow(decay[c], positive[c]);
        }

        /// Records a rejected proposal; returns true when it triggered a variance reset.
        bool reject(std::size_t c, int fail_reset_threshold)
        {
            if (++failures[c] < fail_reset_threshold)
                return false;
            failures[c] = 0;
            positive[c] = 0;
            sigma[c] = sigma_init[c];
            ++resets;
            return true;
        }
    };

    struct SolveResult
    {
        DofVector config;
        double residual = 0.0; ///< feet
        std::int64_t evals = 0;
        bool converged = false;
        bool gave_up = false;
    };

    /// Components mutated while solving in the fixed plane, base first; the mast rotation is excluded.
    inline constexpr std::array<std::size_t, dof_count - 1> plane_components = {
        stage1_pitch, stage2_pitch, stage3_pitch, stage4_pitch, stage4_yaw,
        stage5_pitch, stage5_yaw, wrist_roll, wrist_pitch};

    /// Distance from the end effector (mast rotation forced to 0) to (r, 0, z).
    inline double distance_fitness(const ArmModel &model, const DofVector &q, PlanePoint target)
    {
        DofVector in_plane = q;
        in_plane[mast_rotation] = 0.0;
        return (end_effector(model, in_plane) - Point3(target.r, 0.0, target.z)).norm();
    }

    /// Gaussian perturbation of component c (mean 0, std sigma[c]), clamped to limits.
    inline DofVector mutate_component(const ArmModel &model, const DofVector &q, std::size_t c, const AnnealState &state, Rng &rng)
    {
        DofVector out = q;
        out[c] = model.limits[c].clamp(q[c] + state.sigma[c] * rng.gaussian());
        return out;
    }

    inline DofVector random_config(const ArmModel &model, Rng &rng)
    {
        DofVector q;
        for (std::size_t c = 0; c < dof_count; ++c)
            q[c] = rng.uniform(model.limits[c].min, model.limits[c].max);
        return q;
    }

    enum class LoopStop
    {
        done,
        budget,
        gave_up,
    };

    struct LoopResult
    {
        LoopStop stop = LoopStop::done;
        std::int64_t evals = 0;
        std::int64_t accepted = 0;
    };

    /// Component-sequential (1+1) search shared by the point solver and coevolution.
    ///
    /// `evaluate(candidate)` returns a Score, `better(candidate_score, current_score)` is the
    /// acceptance rule and `done(score)` the success test. Each cycle proposes one mutation per
    /// component in order. An acceptance decays that component's sigma; `fail_reset_threshold`
    /// consecutive rejections of one component reset its sigma, and the search gives up once
    /// `max_resets` resets have happened. `on_accept(c, q, score)` observes every acceptance.
    template <typename Score, typename Evaluate, typename Better, typename Done, typename OnAccept>
    LoopResult anneal_search(const ArmModel &model, DofVector &q, Score &score, std::span<const std::size_t> components,
                             const EsParams &params, AnnealState &state, Rng &rng, Evaluate &&evaluate, Better &&better,
                             Done &&done, OnAccept &&on_accept)
    {
        LoopResult out;
        if (done(score))
            return out;
        if (components.empty())
        {
            out.stop = LoopStop::gave_up;
            return out;
        }
        for (;;)
        {
            for (std::size_t c : components)
            {
                if (out.evals >= params.max_evals)
                {
                    out.stop = LoopStop::budget;
                    return out;
                }
                DofVector candidate = mutate_component(model, q, c, state, rng);
                Score s = evaluate(candidate);
                ++out.evals;
                if (better(s, score))
                {
                    q = candidate;
                    score = s;
                    state.accept(c);
                    ++out.accepted;
                    on_accept(c, q, score);
                    if (done(score))
                        return out;
                }
                else if (state.reject(c, params.fail_reset_threshold) && state.resets >= params.max_resets)
                {
                    out.stop = LoopStop::gave_up;
                    return out;
                }
            }
        }
    }

    struct EsScore
    {
        double objective;
        double residual;
    };

    /// Observer hook for tests: called on every accepted mutation with (component, config, residual).
    using AcceptObserver = std::function<void(std::size_t, const DofVector &, double)>;

    inline EsScore es_score(const ArmModel &model, const DofVector &q, PlanePoint target, const ConstraintWeights &w)
    {
        DofVector in_plane = q;
        in_plane[mast_rotation] = 0.0;
        if (!w.active())
        {
            const double d = (end_effector(model, in_plane) - Point3(target.r, 0.0, target.z)).norm();
            return {d, d};
        }
        const ArmPose pose = forward_kinematics(model, in_plane);
        const double d = (pose.end_effector() - Point3(target.r, 0.0, target.z)).norm();
        return {d + constraint_penalties(model, in_plane, pose, w), d};
    }

    /// (1+1)-ES for one grid target. The mast rotation of `init` is kept as is and not mutated.
    /// Non-convergence is reported in the result, never thrown.
    inline SolveResult solve_point(const ArmModel &model, PlanePoint target, const DofVector &init, const EsParams &params, Rng &rng,
                                   const AcceptObserver &observer = {})
    {
        SolveResult out;
        out.config = init;
        EsScore score = es_score(model, init, target, params.constraints);
        AnnealState state(params);
        const auto loop = anneal_search(
            model, out.config, score, std::span<const std::size_t>(plane_components), params, state, rng,
            [&](const DofVector &cand) { return es_score(model, cand, target, params.constraints); },
            [](const EsScore &cand, const EsScore &cur) { return cand.objective < cur.objective; },
            [&](const EsScore &s) { return s.residual <= params.tolerance; },
            [&](std::size_t c, const DofVector &q, const EsScore &s) {
                if (observer)
                    observer(c, q, s.residual);
            });
        out.residual = score.residual;
        out.evals = loop.evals;
        out.converged = out.residual <= params.tolerance;
        out.gave_up = loop.stop == LoopStop::gave_up;
        return out;
    }

    enum class SweepOrder
    {
        row_serpentine,         ///< rows of constant z from the bottom; r alternates direction per row
        row_serpentine_reverse, ///< the same path walked backwards
        column_serpentine,      ///< columns of constant r from the axis outward; z alternates per column
    };

    inline const char *to_string(SweepOrder o)
    {
        switch (o)
        {
        case SweepOrder::row_serpentine: return "row_serpentine";
        case SweepOrder::row_serpentine_reverse: return "row_serpentine_reverse";
        case SweepOrder::column_serpentine: return "column_serpentine";
        }
        return "row_serpentine";
    }

    struct GridIndex
    {
        int i;
        int j;
    };

    inline std::vector<GridIndex> traversal(const GridSpec &spec, SweepOrder order)
    {
        std::vector<GridIndex> out;
        out.reserve(spec.size());
        if (order == SweepOrder::column_serpentine)
        {
            for (int i = 0; i < spec.nr; ++i)
                for (int k = 0; k < spec.nz; ++k)
                    out.push_back({i, (i % 2 == 0) ? k : spec.nz - 1 - k});
            return out;
        }
        for (int j = 0; j < spec.nz; ++j)
            for (int k = 0; k < spec.nr; ++k)
                out.push_back({(j % 2 == 0) ? k : spec.nr - 1 - k, j});
        if (order == SweepOrder::row_serpentine_reverse)
            std::reverse(out.begin(), out.end());
        return out;
    }

    struct SweepSummary
    {
        std::size_t points = 0;
        std::size_t converged = 0;
        std::int64_t evals = 0;
        double mean_residual = 0.0;
        double max_residual = 0.0;
    };

    inline SweepSummary summarize(const ConfigTable &t)
    {
        SweepSummary s;
        s.points = t.entries.size();
        s.converged = t.converged_count();
        for (double r : t.residual)
        {
            s.mean_residual += r;
            s.max_residual = std::max(s.max_residual, r);
        }
        if (s.points)
            s.mean_residual /= static_cast<double>(s.points);
        return s;
    }

    /// Solves every grid node, in up to `sweep_passes` passes. Every attempt at a node draws
    /// from its own substream keyed by (pass, row-major index), so results do not depend on
    /// thread scheduling. `max_evals` bounds the evaluations a node receives over all passes.
    ///
    /// First pass, warm start: a node starts from the previously solved node when that one
    /// converged, otherwise from a converged, already solved 4-neighbor, otherwise from the
    /// previous node regardless; the first node starts from a random configuration.
    /// First pass, cold start: every node starts from a random in-limit configuration and nodes
    /// are solved in parallel.
    /// Later passes revisit the nodes that gave up, in traversal order, starting from a
    /// converged 4-neighbor when one exists (random otherwise), or from the node's own
    /// configuration when warm start is off. A node whose budget is spent is not revisited.
    inline ConfigTable sweep_grid(const ArmModel &model, const GridSpec &spec, const EsParams &params,
                                  SweepOrder order = SweepOrder::row_serpentine, bool warm_start = true,
                                  unsigned threads = 0)
    {
        model.validate();
        spec.validate();
        params.validate();
        ConfigTable table(spec, model_fingerprint(model));
        std::vector<std::uint8_t> solved(spec.size(), 0);
        std::vector<std::int64_t> used(spec.size(), 0);
        std::int64_t total_evals = 0;

        auto converged_neighbor = [&](GridIndex g) -> const DofVector * {
            constexpr int di[4] = {-1, 1, 0, 0};
            constexpr int dj[4] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k)
            {
                const int ni = g.i + di[k], nj = g.j + dj[k];
                if (spec.in_grid(ni, nj) && solved[spec.index(ni, nj)] && table.converged[spec.index(ni, nj)])
                    return &table.entries[spec.index(ni, nj)];
            }
            return nullptr;
        };

        // Returns evaluations spent.
        auto solve_at = [&](GridIndex g, const DofVector *warm, int pass) {
            const std::size_t idx = spec.index(g.i, g.j);
            Rng rng = Rng::substream(params.seed, static_cast<std::uint64_t>(pass) * spec.size() + idx);
            DofVector init = warm ? *warm : random_config(model, rng);
            init[mast_rotation] = 0.0;
            EsParams budgeted = params;
            budgeted.max_evals = params.max_evals - used[idx];
            const SolveResult res = solve_point(model, grid_point_position(spec, g.i, g.j), init, budgeted, rng);
            used[idx] += res.evals;
            const bool keep = !solved[idx] || res.converged;
            if (keep)
            {
                table.entries[idx] = res.config;
                table.residual[idx] = res.residual;
                table.converged[idx] = res.converged ? 1 : 0;
            }
            solved[idx] = 1;
            return res.evals;
        };

        const auto path = traversal(spec, order);
        if (warm_start)
        {
            const GridIndex *prev = nullptr;
            for (const auto &g : path)
            {
                const DofVector *warm = nullptr;
                if (prev)
                {
                    const std::size_t pidx = spec.index(prev->i, prev->j);
                    warm = &table.entries[pidx];
                    if (!table.converged[pidx])
                        if (const DofVector *n = converged_neighbor(g))
                            warm = n;
                }
                total_evals += solve_at(g, warm, 0);
                prev = &g;
            }
        }
        else
        {
            const unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
            std::vector<std::int64_t> evals(n, 0);
            {
                std::vector<std::jthread> pool;
                for (unsigned t = 0; t < n; ++t)
                    pool.emplace_back([&, t] {
                        for (std::size_t k = t; k < path.size(); k += n)
                            evals[t] += solve_at(path[k], nullptr, 0);
                    });
            }
            for (auto e : evals)
                total_evals += e;
        }

        int passes_run = 1;
        for (int pass = 1; pass < params.sweep_passes; ++pass)
        {
            bool attempted = false;
            for (const auto &g : path)
            {
                const std::size_t idx = spec.index(g.i, g.j);
                if (table.converged[idx] || used[idx] >= params.max_evals)
                    continue;
                const DofVector *warm = warm_start ? converged_neighbor(g) : &table.entries[idx];
                total_evals += solve_at(g, warm, pass);
                attempted = true;
            }
            if (!attempted)
                break;
            ++passes_run;
        }

        table.provenance.seed = params.seed;
        table.provenance.params = {{"arm", to_json(model)}, {"es", to_json(params)}, {"order", to_string(order)}, {"warm_start", warm_start}};
        table.provenance.history.push_back({{"stage", "sweep"},
                                            {"passes", passes_run},
                                            {"converged", table.converged_count()},
                                            {"points", table.entries.size()},
                                            {"evals", total_evals}});
        return table;
    }
}
