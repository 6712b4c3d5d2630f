#pragma once

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coevolution.hpp"
#include "config_table.hpp"
#include "es_solver.hpp"
#include "lut_controller.hpp"
#include "run_config.hpp"
#include "teleop.hpp"

namespace serpent::cli
{
    enum ExitCode : int
    {
        ok = 0,
        usage_error = 1,
        runtime_failure = 2,
    };

    /// Parsed command line. Optional numeric overrides replace values from the config file.
    struct RunConfig
    {
        std::string model_path;
        std::string grid_path;
        std::string table_path;
        std::string out_path;
        std::string history_path;
        std::string export_path;
        std::string waypoints_path;
        std::optional<std::uint64_t> seed;
        std::optional<double> sigma_init;
        std::optional<double> decay;
        std::optional<double> tolerance_inches;
        std::optional<std::int64_t> max_evals;
        std::optional<int> sweep_passes;
        std::optional<std::string> method;
        std::optional<std::string> neighborhood;
        std::optional<int> passes;
        std::optional<double> relax_inches;
        std::string order = "row_serpentine";
        bool cold_start = false;
        double step = 0.25;
        double max_joint_rate = 0.0;
        int port = 8765;
        std::string host = "127.0.0.1";
    };

    inline void write_file(const std::string &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out || !(out << text) || !out.flush())
            throw Error(ErrorCode::file_error, "cannot write " + path);
    }

    inline SweepOrder parse_order(const std::string &s)
    {
        if (s == "row_serpentine")
            return SweepOrder::row_serpentine;
        if (s == "row_serpentine_reverse")
            return SweepOrder::row_serpentine_reverse;
        if (s == "column_serpentine")
            return SweepOrder::column_serpentine;
        throw Error(ErrorCode::config_error, "unknown order '" + s + "'");
    }

    /// Config file (or $SERPENT_CONFIG, or built-in defaults), then --grid, then flag overrides.
    inline ModelConfig resolve_config(const RunConfig &rc)
    {
        std::string path = rc.model_path;
        if (path.empty())
            if (const char *env = std::getenv(config_env_var); env && *env)
                path = env;
        ModelConfig c = path.empty() ? ModelConfig{} : load_config(path);
        if (!rc.grid_path.empty())
        {
            const ordered_json doc = read_json_file(rc.grid_path);
            detail::check_against(config_schema(), doc, "");
            if (doc.contains("grid"))
                c.grid = grid_from_json(doc["grid"], c.grid);
            if (doc.contains("tank"))
                c.tank = tank_from_json(doc["tank"], c.tank);
        }

        auto apply = [&](EsParams &p) {
            if (rc.seed)
                p.seed = *rc.seed;
            if (rc.sigma_init)
                p.sigma_init.fill(*rc.sigma_init);
            if (rc.decay)
                p.decay.fill(*rc.decay);
            if (rc.tolerance_inches)
                p.tolerance = *rc.tolerance_inches / 12.0;
            if (rc.max_evals)
                p.max_evals = *rc.max_evals;
            p.validate();
        };
        apply(c.es);
        apply(c.coevo.es);
        if (rc.sweep_passes)
            c.es.sweep_passes = *rc.sweep_passes;
        if (rc.method)
            c.coevo.method = parse_method(*rc.method);
        if (rc.neighborhood)
            c.coevo.neighborhood = parse_neighborhood(*rc.neighborhood);
        if (rc.passes)
            c.coevo.passes = *rc.passes;
        if (rc.relax_inches)
            c.coevo.relax_bound = *rc.relax_inches / 12.0;
        else if (rc.tolerance_inches)
            c.coevo.relax_bound = std::max(c.coevo.relax_bound, c.coevo.es.tolerance);
        c.es.validate();
        c.coevo.validate();
        return c;
    }

    inline ConfigTable load_checked_table(const std::string &path, const ArmModel &model, std::ostream &err)
    {
        ConfigTable t = load_table(path);
        if (!fingerprint_matches(t, model))
            err << "warning: " << path << " was built for model " << t.model_fingerprint << ", current model is "
                << model_fingerprint(model) << "\n";
        return t;
    }

    inline int cmd_learn(const RunConfig &rc, std::ostream &out, std::ostream &)
    {
        const ModelConfig c = resolve_config(rc);
        const auto t0 = std::chrono::steady_clock::now();
        const ConfigTable table = sweep_grid(c.arm, c.grid, c.es, parse_order(rc.order), !rc.cold_start);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_table(table, rc.out_path);

        std::size_t within_reach = 0;
        double conv_mean = 0.0, conv_max = 0.0;
        for (int j = 0; j < c.grid.nz; ++j)
            for (int i = 0; i < c.grid.nr; ++i)
            {
                const auto rz = grid_point_position(c.grid, i, j);
                within_reach += std::hypot(rz.r, rz.z) <= c.arm.total_length();
                if (table.converged_at(i, j))
                {
                    conv_mean += table.residual_at(i, j);
                    conv_max = std::max(conv_max, table.residual_at(i, j));
                }
            }
        const auto converged = table.converged_count();
        if (converged)
            conv_mean /= static_cast<double>(converged);
        const auto s = summarize(table);
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "learn: %zu/%zu points converged (%zu within max reach %.2f ft)\n"
                      "  converged residual: mean %.4f in, max %.4f in\n"
                      "  all residuals: mean %.4f ft, max %.4f ft\n"
                      "  evaluations: %lld, wall time %.2f s\n"
                      "  table: %s\n",
                      converged, s.points, within_reach, c.arm.total_length(), conv_mean * 12.0, conv_max * 12.0, s.mean_residual,
                      s.max_residual, static_cast<long long>(table.provenance.history.back().value("evals", 0LL)), seconds,
                      rc.out_path.c_str());
        out << buf;
        if (converged < s.points)
            out << "warning: " << (s.points - converged) << " points did not reach the tolerance\n";
        return ok;
    }

    inline int cmd_coevolve(const RunConfig &rc, std::ostream &out, std::ostream &err)
    {
        const ModelConfig c = resolve_config(rc);
        const ConfigTable input = load_checked_table(rc.table_path, c.arm, err);
        CoevoHistory history;
        const ConfigTable result = coevolve(input, c.arm, c.coevo, &history);
        save_table(result, rc.out_path);
        const std::string history_path = rc.history_path.empty() ? rc.out_path + ".history.csv" : rc.history_path;
        write_file(history_path, history_csv(history));

        char buf[256];
        std::snprintf(buf, sizeof buf, "coevolve (%s, %s, %d passes): mean penalty %.4f -> %.4f deg, converged %zu -> %zu\n",
                      to_string(c.coevo.method), to_string(c.coevo.neighborhood), c.coevo.passes, history.baseline.mean_penalty,
                      history.passes.back().mean_penalty, input.converged_count(), result.converged_count());
        out << buf << "  table: " << rc.out_path << "\n  history: " << history_path << "\n";
        return ok;
    }

    inline int cmd_eval(const RunConfig &rc, std::ostream &out, std::ostream &err)
    {
        const ModelConfig c = resolve_config(rc);
        const ConfigTable table = load_checked_table(rc.table_path, c.arm, err);
        const auto rep = smoothness_report(table, c.coevo.neighborhood);
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "grid %dx%d, neighborhood %s\n"
                      "neighbor distance: max %.6f deg, mean %.6f deg over %zu pairs\n"
                      "penalty: total %.6f deg, mean per point %.6f deg\n"
                      "unconverged: %zu of %zu, max residual %.6f ft\n",
                      table.spec.nr, table.spec.nz, to_string(c.coevo.neighborhood), rep.max_neighbor_distance, rep.mean_neighbor_distance,
                      rep.neighbor_pairs, rep.total_penalty, rep.mean_penalty, rep.unconverged, table.entries.size(), rep.max_residual);
        out << buf << "residual histogram (inches):\n";
        const char *labels[6] = {"[0, 0.25)", "[0.25, 0.5)", "[0.5, 0.75)", "[0.75, 1]", "(1, 12]", "> 12"};
        for (std::size_t b = 0; b < rep.residual_histogram.size(); ++b)
            out << "  " << labels[b] << ": " << rep.residual_histogram[b] << "\n";
        const auto issues = validate_table(table);
        if (issues.empty())
            out << "validation: ok\n";
        else
        {
            out << "validation: FAILED (" << issues.size() << " issues)\n";
            for (const auto &issue : issues)
                out << "  " << issue << "\n";
        }
        if (!rc.export_path.empty())
        {
            std::string csv = "i,j,r,z,residual,converged,penalty\n";
            for (int j = 0; j < table.spec.nz; ++j)
                for (int i = 0; i < table.spec.nr; ++i)
                {
                    const auto rz = grid_point_position(table.spec, i, j);
                    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%d,%.17g\n", i, j, rz.r, rz.z, table.residual_at(i, j),
                                  table.converged_at(i, j) ? 1 : 0, penalty(table, i, j, c.coevo.neighborhood));
                    csv += buf;
                }
            write_file(rc.export_path, csv);
            out << "export: " << rc.export_path << "\n";
        }
        return ok;
    }

    inline int cmd_traj(const RunConfig &rc, std::ostream &out, std::ostream &err)
    {
        const ModelConfig c = resolve_config(rc);
        const ConfigTable table = load_checked_table(rc.table_path, c.arm, err);
        require_matching_model(table, c.arm);
        for (const auto &issue : validate_table(table))
            err << "warning: " << issue << "\n";
        const auto waypoints = load_waypoints(rc.waypoints_path);
        if (waypoints.size() < 2)
            throw Error(ErrorCode::invalid_argument, rc.waypoints_path + ": need at least two waypoints");
        for (std::size_t k = 0; k < waypoints.size(); ++k)
        {
            const auto &w = waypoints[k];
            const CylTarget t = decompose(w);
            const bool in_grid = t.r >= table.spec.r0 && t.r <= table.spec.r_max() && t.z >= table.spec.z0 && t.z <= table.spec.z_max();
            if (!c.tank.contains(w) || !in_grid)
            {
                char buf[200];
                std::snprintf(buf, sizeof buf, "waypoint %zu (%.4f, %.4f, %.4f) lies outside the workspace", k, w.x(), w.y(), w.z());
                throw Error(ErrorCode::out_of_workspace, buf);
            }
        }
        const Trajectory traj = plan_trajectory(table, c.arm, waypoints, rc.step, rc.max_joint_rate);
        write_file(rc.out_path, trajectory_csv(traj));
        char buf[256];
        std::snprintf(buf, sizeof buf, "traj: %zu samples, max deviation %.4f in, max joint delta %.4f deg, %zu rate violations\n",
                      traj.samples.size(), traj.max_deviation() * 12.0, traj.max_joint_delta(), traj.rate_violations());
        out << buf << "  trajectory: " << rc.out_path << "\n";
        return ok;
    }

    namespace detail
    {
        inline std::atomic<teleop::Server *> active_server{nullptr};
        inline std::atomic<bool> interrupted{false};

        inline void on_signal(int) { interrupted = true; }
    }

    inline int cmd_serve(const RunConfig &rc, std::ostream &out, std::ostream &err)
    {
        const ModelConfig c = resolve_config(rc);
        auto controller = std::make_shared<teleop::Controller>();
        controller->model = c.arm;
        controller->table = load_checked_table(rc.table_path, c.arm, err);
        require_matching_model(controller->table, c.arm);
        for (const auto &issue : validate_table(controller->table))
            err << "warning: " << issue << "\n";

        teleop::Server server(controller);
        server.listen(rc.port, rc.host);
        out << "serving on " << rc.host << ":" << server.port() << " (newline-delimited JSON)\n" << std::flush;
        detail::interrupted = false;
        std::signal(SIGINT, detail::on_signal);
        std::signal(SIGTERM, detail::on_signal);
        std::jthread watcher([&](std::stop_token st) {
            while (!st.stop_requested() && !detail::interrupted)
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
        });
        server.serve();
        return ok;
    }

    /// Full command-line entry point. Returns the process exit code.
    inline int run(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
    {
        CLI::App app{"Learn, smooth and serve look-up-table inverse kinematics for a serpentine manipulator"};
        app.require_subcommand(1);
        RunConfig rc;

        auto common = [&](CLI::App *cmd) {
            cmd->add_option("--model", rc.model_path, "Arm/tank/grid config file (default: $SERPENT_CONFIG, else built-in)");
            cmd->add_option("--grid", rc.grid_path, "Config file whose grid/tank sections override the model file");
        };
        auto es_flags = [&](CLI::App *cmd) {
            cmd->add_option("--seed", rc.seed, "Master random seed");
            cmd->add_option("--sigma-init", rc.sigma_init, "Initial mutation std, degrees (all components)")->check(CLI::PositiveNumber);
            cmd->add_option("--decay", rc.decay, "Per-acceptance sigma decay factor in (0, 1)")->check(CLI::Range(0.0, 1.0));
            cmd->add_option("--tolerance-inches", rc.tolerance_inches, "Target tolerance")->check(CLI::PositiveNumber);
            cmd->add_option("--max-evals", rc.max_evals, "Evaluation budget per point")->check(CLI::NonNegativeNumber);
        };
        auto coevo_flags = [&](CLI::App *cmd) {
            cmd->add_option("--method", rc.method, "strict | coupled | alternating")
                ->check(CLI::IsMember({"strict", "coupled", "alternating"}));
            cmd->add_option("--neighborhood", rc.neighborhood, "eq1_diagonal | von_neumann | moore")
                ->check(CLI::IsMember({"eq1_diagonal", "von_neumann", "moore"}));
        };

        auto *learn = app.add_subcommand("learn", "Solve every grid point with the evolution strategy and write the table");
        common(learn);
        es_flags(learn);
        learn->add_option("--out", rc.out_path, "Output table file")->required();
        learn->add_option("--sweep-passes", rc.sweep_passes, "Grid passes (later passes retry unconverged points)")->check(CLI::PositiveNumber);
        learn->add_option("--order", rc.order, "Traversal order")
            ->check(CLI::IsMember({"row_serpentine", "row_serpentine_reverse", "column_serpentine"}));
        learn->add_flag("--cold-start", rc.cold_start, "Start every point from a random configuration");

        auto *coevo = app.add_subcommand("coevolve", "Smooth a table by cooperative coevolution");
        common(coevo);
        es_flags(coevo);
        coevo_flags(coevo);
        coevo->add_option("--table", rc.table_path, "Input table")->required()->check(CLI::ExistingFile);
        coevo->add_option("--out", rc.out_path, "Output table file")->required();
        coevo->add_option("--history", rc.history_path, "Per-pass history CSV (default: <out>.history.csv)");
        coevo->add_option("--passes", rc.passes, "Number of passes")->check(CLI::PositiveNumber);
        coevo->add_option("--relax-inches", rc.relax_inches, "Residual ceiling during alternating penalty passes")->check(CLI::PositiveNumber);

        auto *eval = app.add_subcommand("eval", "Report table smoothness and residuals");
        common(eval);
        coevo_flags(eval);
        eval->add_option("--table", rc.table_path, "Table file")->required()->check(CLI::ExistingFile);
        eval->add_option("--export", rc.export_path, "Per-point CSV export");

        auto *traj = app.add_subcommand("traj", "Plan a straight-line trajectory through waypoints");
        common(traj);
        traj->add_option("--table", rc.table_path, "Table file")->required()->check(CLI::ExistingFile);
        traj->add_option("--waypoints", rc.waypoints_path, "Waypoint file, one x,y,z per line (feet)")->required()->check(CLI::ExistingFile);
        traj->add_option("--step", rc.step, "Sample spacing, feet")->check(CLI::PositiveNumber);
        traj->add_option("--max-joint-rate", rc.max_joint_rate, "Joint change per sample that gets flagged, degrees")
            ->required()
            ->check(CLI::PositiveNumber);
        traj->add_option("--out", rc.out_path, "Trajectory CSV")->required();

        auto *serve = app.add_subcommand("serve", "Run the teleoperation service");
        common(serve);
        serve->add_option("--table", rc.table_path, "Table file")->required();
        serve->add_option("--port", rc.port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
        serve->add_option("--host", rc.host, "Bind address");

        auto *defaults = app.add_subcommand("defaults", "Print the default configuration file");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp &e)
        {
            out << app.help();
            return ok;
        }
        catch (const CLI::ParseError &e)
        {
            err << "error: " << e.what() << "\n";
            return usage_error;
        }

        try
        {
            if (*learn)
                return cmd_learn(rc, out, err);
            if (*coevo)
                return cmd_coevolve(rc, out, err);
            if (*eval)
                return cmd_eval(rc, out, err);
            if (*traj)
                return cmd_traj(rc, out, err);
            if (*serve)
                return cmd_serve(rc, out, err);
            if (*defaults)
            {
                out << to_json(ModelConfig{}).dump(2) << "\n";
                return ok;
            }
        }
        catch (const Error &e)
        {
            err << "error: " << e.what() << "\n";
            return (e.code() == ErrorCode::config_error || e.code() == ErrorCode::invalid_argument) ? usage_error : runtime_failure;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << "\n";
            return runtime_failure;
        }
        return usage_error;
    }
}
