#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "arm_model.hpp"
#include "coevolution.hpp"
#include "es_solver.hpp"
#include "model_io.hpp"
#include "workspace.hpp"

namespace serpent
{
    /// Environment variable naming the config file used when --model is not given.
    inline constexpr const char *config_env_var = "SERPENT_CONFIG";

    /// Everything the config file can carry. Sections and keys are all optional;
    /// missing values keep their defaults.
    struct ModelConfig
    {
        ArmModel arm;
        TankModel tank;
        GridSpec grid;
        EsParams es;
        CoevoParams coevo;
    };

    inline ordered_json to_json(const ModelConfig &c)
    {
        return {{"arm", to_json(c.arm)},
                {"tank", to_json(c.tank)},
                {"grid", to_json(c.grid)},
                {"es", to_json(c.es)},
                {"coevolution", to_json(c.coevo)}};
    }

    inline const ordered_json &config_schema()
    {
        static const ordered_json schema = to_json(ModelConfig{});
        return schema;
    }

    namespace detail
    {
        inline void check_against(const ordered_json &schema, const ordered_json &doc, const std::string &path)
        {
            auto fail = [&](const std::string &what) { throw Error(ErrorCode::config_error, (path.empty() ? "<root>" : path) + ": " + what); };
            if (schema.is_object())
            {
                if (!doc.is_object())
                    fail("expected a section");
                for (const auto &[key, value] : doc.items())
                {
                    if (!schema.contains(key))
                        throw Error(ErrorCode::config_error, (path.empty() ? key : path + "." + key) + ": unknown key");
                    check_against(schema[key], value, path.empty() ? key : path + "." + key);
                }
                return;
            }
            if (schema.is_array())
            {
                // Per-DOF arrays may be given as one number applied to every component.
                if (doc.is_number() && schema.size() == dof_count)
                    return;
                if (!doc.is_array() || doc.size() != schema.size())
                    fail("expected an array of " + std::to_string(schema.size()) + " values");
                for (std::size_t k = 0; k < doc.size(); ++k)
                    check_against(schema[k], doc[k], path + "[" + std::to_string(k) + "]");
                return;
            }
            if (schema.is_number_integer())
            {
                if (!doc.is_number_integer())
                    fail("expected an integer");
                return;
            }
            if (schema.is_number())
            {
                if (!doc.is_number())
                    fail("expected a number");
                return;
            }
            if (schema.is_string() && !doc.is_string())
                fail("expected a string");
            if (schema.is_boolean() && !doc.is_boolean())
                fail("expected true or false");
        }
    }

    /// Validates the document against the default configuration's shape, then reads it.
    inline ModelConfig config_from_json(const ordered_json &doc)
    {
        detail::check_against(config_schema(), doc, "");
        ModelConfig c;
        try
        {
            if (doc.contains("arm"))
                c.arm = arm_from_json(doc["arm"]);
            if (doc.contains("tank"))
                c.tank = tank_from_json(doc["tank"]);
            if (doc.contains("grid"))
                c.grid = grid_from_json(doc["grid"]);
            if (doc.contains("es"))
                c.es = es_params_from_json(doc["es"]);
            if (doc.contains("coevolution"))
                c.coevo = coevo_params_from_json(doc["coevolution"]);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw Error(ErrorCode::config_error, e.what());
        }
        return c;
    }

    inline ordered_json read_json_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::config_error, "cannot open config " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        try
        {
            return ordered_json::parse(buf.str());
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw Error(ErrorCode::config_error, path + ": " + e.what());
        }
    }

    inline ModelConfig load_config(const std::string &path) { return config_from_json(read_json_file(path)); }
}
