#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arm_model.hpp"
#include "errors.hpp"
#include "model_io.hpp"
#include "workspace.hpp"

namespace serpent
{
    struct Provenance
    {
        std::uint64_t seed = 0;
        ordered_json params = ordered_json::object();
        /// One entry per stage that produced or modified the table (sweep, coevolution passes, ...).
        ordered_json history = ordered_json::array();

        bool operator==(const Provenance &) const = default;
    };

    /// The learned inverse-kinematics look-up table: one configuration per grid node.
    struct ConfigTable
    {
        GridSpec spec;
        std::string model_fingerprint;
        std::vector<DofVector> entries;
        std::vector<double> residual;
        std::vector<std::uint8_t> converged;
        Provenance provenance;

        ConfigTable() = default;

        ConfigTable(const GridSpec &grid, std::string fingerprint)
            : spec(grid), model_fingerprint(std::move(fingerprint)),
              entries(grid.size()), residual(grid.size(), 0.0), converged(grid.size(), 0)
        {
        }

        DofVector &at(int i, int j) { return entries[spec.index(i, j)]; }
        const DofVector &at(int i, int j) const { return entries[spec.index(i, j)]; }
        double residual_at(int i, int j) const { return residual[spec.index(i, j)]; }
        bool converged_at(int i, int j) const { return converged[spec.index(i, j)] != 0; }

        std::size_t converged_count() const
        {
            std::size_t n = 0;
            for (auto f : converged)
                n += f != 0;
            return n;
        }

        bool operator==(const ConfigTable &) const = default;
    };

    inline constexpr const char *table_format = "serpent-config-table";
    inline constexpr int table_version = 1;

    /// Field order is fixed so table files diff cleanly. Doubles are written with
    /// round-trip precision, so load(save(t)) == t.
    inline ordered_json to_json(const ConfigTable &t)
    {
        ordered_json j;
        j["format"] = table_format;
        j["version"] = table_version;
        j["model_fingerprint"] = t.model_fingerprint;
        j["grid"] = to_json(t.spec);
        ordered_json entries = ordered_json::array();
        for (const auto &q : t.entries)
            entries.push_back(q.deg);
        j["entries"] = std::move(entries);
        j["residuals"] = t.residual;
        j["converged"] = t.converged;
        j["provenance"] = {{"seed", t.provenance.seed}, {"params", t.provenance.params}, {"history", t.provenance.history}};
        return j;
    }

    inline ConfigTable table_from_json(const ordered_json &j)
    {
        if (!j.is_object() || j.value("format", std::string{}) != table_format)
            throw Error(ErrorCode::version_mismatch, "not a configuration table document");
        if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != table_version)
            throw Error(ErrorCode::version_mismatch, "unsupported table version");
        try
        {
            ConfigTable t;
            t.spec = grid_from_json(j.at("grid"));
            t.model_fingerprint = j.at("model_fingerprint").get<std::string>();
            const auto &entries = j.at("entries");
            for (const auto &e : entries)
            {
                DofVector q;
                q.deg = e.get<std::array<double, dof_count>>();
                t.entries.push_back(q);
            }
            t.residual = j.at("residuals").get<std::vector<double>>();
            t.converged = j.at("converged").get<std::vector<std::uint8_t>>();
            const auto &prov = j.at("provenance");
            t.provenance.seed = prov.at("seed").get<std::uint64_t>();
            t.provenance.params = prov.at("params");
            t.provenance.history = prov.at("history");
            const auto n = t.spec.size();
            if (t.entries.size() != n || t.residual.size() != n || t.converged.size() != n)
                throw Error(ErrorCode::file_error, "entry count does not match grid size");
            return t;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw Error(ErrorCode::file_error, std::string("malformed table: ") + e.what());
        }
    }

    inline std::string serialize_table(const ConfigTable &t) { return to_json(t).dump(1) + "\n"; }

    inline void save_table(const ConfigTable &t, const std::string &path)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::file_error, "cannot open " + path + " for writing");
        out << serialize_table(t);
        if (!out.flush())
            throw Error(ErrorCode::file_error, "write failed: " + path);
    }

    inline ConfigTable parse_table(const std::string &text)
    {
        ordered_json j;
        try
        {
            j = ordered_json::parse(text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw Error(ErrorCode::file_error, std::string("unreadable table: ") + e.what());
        }
        return table_from_json(j);
    }

    inline ConfigTable load_table(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error(ErrorCode::file_error, "cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_table(buf.str());
    }

    inline bool fingerprint_matches(const ConfigTable &t, const ArmModel &model)
    {
        return t.model_fingerprint == model_fingerprint(model);
    }

    /// For consumers that are about to drive the arm with the table.
    inline void require_matching_model(const ConfigTable &t, const ArmModel &model)
    {
        if (!fingerprint_matches(t, model))
            throw Error(ErrorCode::fingerprint_mismatch,
                        "table built for model " + t.model_fingerprint + ", supplied model is " + model_fingerprint(model));
    }
}
