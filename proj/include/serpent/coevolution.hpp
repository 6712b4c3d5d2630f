#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "arm_model.hpp"
#include "config_table.hpp"
#include "es_solver.hpp"
#include "workspace.hpp"

namespace serpent
{
    enum class Neighborhood
    {
        eq1_diagonal, ///< (i±1, j±1): the four diagonal neighbors
        von_neumann,  ///< the four edge-adjacent neighbors
        moore,        ///< all eight
    };

    enum class CoevoMethod
    {
        strict,      ///< penalty must drop, residual may not grow
        coupled,     ///< residual and penalty must both drop
        alternating, ///< penalty passes and distance passes take turns
    };

    enum class Objective
    {
        penalty,
        distance,
    };

    /// Offsets in raster order (j outer, i inner), which fixes the summation order of penalties.
    inline std::span<const std::array<int, 2>> neighbor_offsets(Neighborhood n)
    {
        static constexpr std::array<std::array<int, 2>, 4> diagonal{{{-1, -1}, {1, -1}, {-1, 1}, {1, 1}}};
        static constexpr std::array<std::array<int, 2>, 4> axis{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};
        static constexpr std::array<std::array<int, 2>, 8> all{
            {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};
        switch (n)
        {
        case Neighborhood::eq1_diagonal: return diagonal;
        case Neighborhood::von_neumann: return axis;
        case Neighborhood::moore: return all;
        }
        return axis;
    }

    inline const char *to_string(Neighborhood n)
    {
        switch (n)
        {
        case Neighborhood::eq1_diagonal: return "eq1_diagonal";
        case Neighborhood::von_neumann: return "von_neumann";
        case Neighborhood::moore: return "moore";
        }
        return "von_neumann";
    }

    inline const char *to_string(CoevoMethod m)
    {
        switch (m)
        {
        case CoevoMethod::strict: return "strict";
        case CoevoMethod::coupled: return "coupled";
        case CoevoMethod::alternating: return "alternating";
        }
        return "alternating";
    }

    inline const char *to_string(Objective o) { return o == Objective::penalty ? "penalty" : "distance"; }

    inline Neighborhood parse_neighborhood(const std::string &s)
    {
        if (s == "eq1_diagonal")
            return Neighborhood::eq1_diagonal;
        if (s == "von_neumann")
            return Neighborhood::von_neumann;
        if (s == "moore")
            return Neighborhood::moore;
        throw Error(ErrorCode::config_error, "unknown neighborhood '" + s + "'");
    }

    inline CoevoMethod parse_method(const std::string &s)
    {
        if (s == "strict")
            return CoevoMethod::strict;
        if (s == "coupled")
            return CoevoMethod::coupled;
        if (s == "alternating")
            return CoevoMethod::alternating;
        throw Error(ErrorCode::config_error, "unknown coevolution method '" + s + "'");
    }

    /// Neighbor penalty of a candidate configuration placed at (i, j), in degrees.
    inline double penalty_of(const ConfigTable &table, int i, int j, const DofVector &q, Neighborhood n)
    {
        double sum = 0.0;
        for (const auto &[di, dj] : neighbor_offsets(n))
            if (table.spec.in_grid(i + di, j + dj))
                sum += joint_distance(q, table.at(i + di, j + dj));
        return sum;
    }

    /// Sum of joint-space two-norm distances from entry (i, j) to its in-grid neighbors.
    inline double penalty(const ConfigTable &table, int i, int j, Neighborhood n)
    {
        if (!table.spec.in_grid(i, j))
            throw Error(ErrorCode::index_out_of_grid, "(" + std::to_string(i) + ", " + std::to_string(j) + ")");
        return penalty_of(table, i, j, table.at(i, j), n);
    }

    /// Sum of penalty over every node. Each neighbor pair is counted from both ends.
    inline double total_penalty(const ConfigTable &table, Neighborhood n)
    {
        double sum = 0.0;
        for (int j = 0; j < table.spec.nz; ++j)
            for (int i = 0; i < table.spec.nr; ++i)
                sum += penalty(table, i, j, n);
        return sum;
    }

    struct CoevoParams
    {
        CoevoMethod method = CoevoMethod::alternating;
        Neighborhood neighborhood = Neighborhood::von_neumann;
        int passes = 10;
        double relax_bound = 1.0 / 12.0; ///< feet; residual ceiling during alternating penalty passes
        /// Distance passes stop refining a node once its residual is at or below this fraction of the tolerance.
        double polish_fraction = 0.1;
        /// Mutation mechanics. max_evals is the budget per node per pass; sweep_passes is unused.
        EsParams es = default_es();

        static EsParams default_es()
        {
            EsParams p;
            p.sigma_init = EsParams::filled(2.0);
            p.max_evals = 3'000;
            return p;
        }

        void validate() const
        {
            es.validate();
            if (passes < 1)
                throw Error(ErrorCode::config_error, "passes must be >= 1");
            if (!(relax_bound >= es.tolerance))
                throw Error(ErrorCode::config_error, "relax_bound must be >= tolerance");
            if (!(polish_fraction > 0.0 && polish_fraction <= 1.0))
                throw Error(ErrorCode::config_error, "polish_fraction must lie in (0, 1]");
        }
    };

    inline ordered_json to_json(const CoevoParams &p)
    {
        return {{"method", to_string(p.method)},
                {"neighborhood", to_string(p.neighborhood)},
                {"passes", p.passes},
                {"relax_bound", p.relax_bound},
                {"polish_fraction", p.polish_fraction},
                {"es", to_json(p.es)}};
    }

    inline CoevoParams coevo_params_from_json(const ordered_json &j, CoevoParams p = {})
    {
        if (j.contains("method"))
            p.method = parse_method(j["method"].get<std::string>());
        if (j.contains("neighborhood"))
            p.neighborhood = parse_neighborhood(j["neighborhood"].get<std::string>());
        p.passes = j.value("passes", p.passes);
        p.relax_bound = j.value("relax_bound", p.relax_bound);
        p.polish_fraction = j.value("polish_fraction", p.polish_fraction);
        if (j.contains("es"))
            p.es = es_params_from_json(j["es"], p.es);
        p.validate();
        return p;
    }

    enum class PointStatus
    {
        improved, ///< at least one mutation accepted
        stalled,  ///< nothing accepted: already done or budget spent
        gave_up,  ///< nothing accepted and the reset allowance ran out
    };

    struct PointOutcome
    {
        DofVector entry;
        double residual = 0.0;
        double penalty = 0.0;
        PointStatus status = PointStatus::stalled;
        std::int64_t evals = 0;
        std::int64_t accepted = 0;
    };

    struct CoevoScore
    {
        double residual;
        double penalty;
    };

    /// Observer hook for tests: (component, entry, residual, penalty) on every acceptance.
    using CoevoObserver = std::function<void(std::size_t, const DofVector &, double, double)>;

    /// Refines entry (i, j) against its neighbors under one method's acceptance rule.
    /// Neighbors are read, never written. `objective` selects the pass type for the
    /// alternating method and is ignored by the others.
    ///
    /// In an alternating penalty pass a candidate must keep its residual within
    /// max(relax_bound, current residual), so nodes outside the tolerance can still be
    /// smoothed as long as they do not drift further from their target.
    inline PointOutcome coevolve_point(const ArmModel &model, const ConfigTable &table, int i, int j, const CoevoParams &params,
                                       Objective objective, Rng &rng, const CoevoObserver &observer = {})
    {
        const PlanePoint target = grid_point_position(table.spec, i, j);
        const Neighborhood nb = params.neighborhood;
        const double tol = params.es.tolerance;

        PointOutcome out;
        out.entry = table.at(i, j);
        CoevoScore score{distance_fitness(model, out.entry, target), penalty_of(table, i, j, out.entry, nb)};

        auto evaluate = [&](const DofVector &q) {
            return CoevoScore{distance_fitness(model, q, target), penalty_of(table, i, j, q, nb)};
        };

        const bool distance_only = params.method == CoevoMethod::alternating && objective == Objective::distance;
        const double ceiling = std::max(params.relax_bound, score.residual);

        auto better = [&](const CoevoScore &cand, const CoevoScore &cur) {
            switch (params.method)
            {
            case CoevoMethod::strict: return cand.penalty < cur.penalty && cand.residual <= cur.residual;
            case CoevoMethod::coupled: return cand.penalty < cur.penalty && cand.residual < cur.residual;
            case CoevoMethod::alternating:
                if (distance_only)
                    return cand.residual < cur.residual;
                return cand.penalty < cur.penalty && cand.residual <= ceiling;
            }
            return false;
        };

        auto done = [&](const CoevoScore &s) {
            if (distance_only)
                return s.residual <= params.polish_fraction * tol;
            return s.penalty == 0.0 && s.residual == 0.0;
        };

        AnnealState state(params.es);
        const auto loop = anneal_search(model, out.entry, score, std::span<const std::size_t>(plane_components), params.es, state,
                                        rng, evaluate, better, done, [&](std::size_t c, const DofVector &q, const CoevoScore &s) {
                                            if (observer)
                                                observer(c, q, s.residual, s.penalty);
                                        });
        out.residual = score.residual;
        out.penalty = score.penalty;
        out.evals = loop.evals;
        out.accepted = loop.accepted;
        if (loop.accepted > 0)
            out.status = PointStatus::improved;
        else if (loop.stop == LoopStop::gave_up)
            out.status = PointStatus::gave_up;
        else
            out.status = PointStatus::stalled;
        return out;
    }

    struct PassRecord
    {
        int pass = 0;
        Objective objective = Objective::penalty;
        double total_penalty = 0.0;
        double mean_penalty = 0.0;
        double mean_residual = 0.0;
        double max_residual = 0.0;
        std::size_t converged = 0;
        std::size_t points_updated = 0;
        std::size_t points_given_up = 0;
    };

    struct CoevoHistory
    {
        PassRecord baseline; ///< the input table, before any pass (pass 0)
        std::vector<PassRecord> passes;
    };

    inline PassRecord measure(const ConfigTable &t, Neighborhood n, double tolerance)
    {
        PassRecord r;
        r.total_penalty = total_penalty(t, n);
        r.mean_penalty = t.entries.empty() ? 0.0 : r.total_penalty / static_cast<double>(t.entries.size());
        for (std::size_t k = 0; k < t.residual.size(); ++k)
        {
            r.mean_residual += t.residual[k];
            r.max_residual = std::max(r.max_residual, t.residual[k]);
            r.converged += t.residual[k] <= tolerance;
        }
        if (!t.residual.empty())
            r.mean_residual /= static_cast<double>(t.residual.size());
        return r;
    }

    /// Objective of pass p (0-based) under the alternating method; the last pass is always a distance pass.
    inline Objective alternating_objective(int p, int passes)
    {
        return ((passes - 1 - p) % 2 == 0) ? Objective::distance : Objective::penalty;
    }

    /// Runs `passes` Gauss-Seidel sweeps over the grid in row-serpentine order; each node is
    /// refined in place with the current values of its neighbors. Every node gets a fresh
    /// anneal state (and so a fresh give-up allowance) on every pass.
    inline ConfigTable coevolve(const ConfigTable &input, const ArmModel &model, const CoevoParams &params, CoevoHistory *history = nullptr)
    {
        params.validate();
        if (!fingerprint_matches(input, model))
            throw Error(ErrorCode::model_mismatch,
                        "table fingerprint " + input.model_fingerprint + " does not match model " + model_fingerprint(model));

        ConfigTable table = input;
        const double tol = params.es.tolerance;
        CoevoHistory local;
        local.baseline = measure(table, params.neighborhood, tol);

        const auto path = traversal(table.spec, SweepOrder::row_serpentine);
        for (int p = 0; p < params.passes; ++p)
        {
            const Objective objective =
                params.method == CoevoMethod::alternating ? alternating_objective(p, params.passes) : Objective::penalty;
            std::size_t updated = 0, given_up = 0;
            for (const auto &g : path)
            {
                const std::size_t idx = table.spec.index(g.i, g.j);
                Rng rng = Rng::substream(params.es.seed ^ splitmix64(0xc0e7 + static_cast<std::uint64_t>(p)), idx);
                const PointOutcome o = coevolve_point(model, table, g.i, g.j, params, objective, rng);
                table.entries[idx] = o.entry;
                table.residual[idx] = o.residual;
                table.converged[idx] = o.residual <= tol ? 1 : 0;
                updated += o.status == PointStatus::improved;
                given_up += o.status == PointStatus::gave_up;
            }
            PassRecord rec = measure(table, params.neighborhood, tol);
            rec.pass = p + 1;
            rec.objective = objective;
            rec.points_updated = updated;
            rec.points_given_up = given_up;
            local.passes.push_back(rec);
        }

        table.provenance.history.push_back({{"stage", "coevolve"},
                                            {"params", to_json(params)},
                                            {"baseline_total_penalty", local.baseline.total_penalty},
                                            {"final_total_penalty", local.passes.back().total_penalty},
                                            {"converged", table.converged_count()}});
        if (history)
            *history = std::move(local);
        return table;
    }

    inline std::string history_csv(const CoevoHistory &h)
    {
        std::string out = "pass,objective,total_penalty,mean_penalty,mean_residual,max_residual,converged,points_updated,points_given_up\n";
        auto row = [&](const PassRecord &r, const char *objective) {
            char buf[512];
            std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,%zu,%zu,%zu\n", r.pass, objective, r.total_penalty,
                          r.mean_penalty, r.mean_residual, r.max_residual, r.converged, r.points_updated, r.points_given_up);
            out += buf;
        };
        row(h.baseline, "baseline");
        for (const auto &r : h.passes)
            row(r, to_string(r.objective));
        return out;
    }

    struct SmoothnessReport
    {
        double max_neighbor_distance = 0.0;  ///< degrees, over unordered in-grid neighbor pairs
        double mean_neighbor_distance = 0.0; ///< degrees
        std::size_t neighbor_pairs = 0;
        double total_penalty = 0.0;
        double mean_penalty = 0.0;
        /// Residual counts, in inches: [0,.25) [.25,.5) [.5,.75) [.75,1] (1,12] (12,inf)
        std::array<std::size_t, 6> residual_histogram{};
        std::size_t unconverged = 0;
        double max_residual = 0.0;
    };

    inline constexpr std::array<double, 5> residual_histogram_edges_inches = {0.25, 0.5, 0.75, 1.0, 12.0};

    inline SmoothnessReport smoothness_report(const ConfigTable &t, Neighborhood n)
    {
        SmoothnessReport rep;
        const auto &spec = t.spec;
        double sum = 0.0;
        for (int j = 0; j < spec.nz; ++j)
            for (int i = 0; i < spec.nr; ++i)
                for (const auto &[di, dj] : neighbor_offsets(n))
                {
                    const int k = i + di, m = j + dj;
                    // Count each unordered pair once: from its lexicographically smaller row-major end.
                    if (!spec.in_grid(k, m) || spec.index(k, m) < spec.index(i, j))
                        continue;
                    const double d = joint_distance(t.at(i, j), t.at(k, m));
                    rep.max_neighbor_distance = std::max(rep.max_neighbor_distance, d);
                    sum += d;
                    ++rep.neighbor_pairs;
                }
        rep.mean_neighbor_distance = rep.neighbor_pairs ? sum / static_cast<double>(rep.neighbor_pairs) : 0.0;
        rep.total_penalty = total_penalty(t, n);
        rep.mean_penalty = t.entries.empty() ? 0.0 : rep.total_penalty / static_cast<double>(t.entries.size());
        for (std::size_t k = 0; k < t.residual.size(); ++k)
        {
            const double inches = t.residual[k] * 12.0;
            std::size_t bin = 0;
            while (bin < residual_histogram_edges_inches.size() &&
                   (bin < 3 ? inches >= residual_histogram_edges_inches[bin] : inches > residual_histogram_edges_inches[bin]))
                ++bin;
            ++rep.residual_histogram[bin];
            rep.unconverged += t.converged[k] == 0;
            rep.max_residual = std::max(rep.max_residual, t.residual[k]);
        }
        return rep;
    }
}
