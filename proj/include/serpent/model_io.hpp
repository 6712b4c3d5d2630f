#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "arm_model.hpp"
#include "workspace.hpp"

namespace serpent
{
    using ordered_json = nlohmann::ordered_json;

    inline ordered_json to_json(const JointLimits &limits)
    {
        ordered_json j = ordered_json::object();
        for (std::size_t c = 0; c < dof_count; ++c)
            j[dof_names[c]] = ordered_json::array({limits[c].min, limits[c].max});
        return j;
    }

    inline ordered_json to_json(const ArmModel &m)
    {
        ordered_json j;
        j["mast_length"] = m.mast_length;
        j["stage123_segment_length"] = m.stage123_segment_length;
        j["stage4"] = {{"coupling_count", m.stage4_coupling_count}, {"segment_length", m.stage4_segment_length}};
        j["stage5"] = {{"coupling_count", m.stage5_coupling_count}, {"segment_length", m.stage5_segment_length}};
        j["wrist_gripper_length"] = m.wrist_gripper_length;
        j["limits"] = to_json(m.limits);
        return j;
    }

    inline ordered_json to_json(const TankModel &t)
    {
        return {{"radius", t.radius}, {"wall_height", t.wall_height}, {"base_z", t.base_z}};
    }

    inline ordered_json to_json(const GridSpec &g)
    {
        return {{"r0", g.r0}, {"z0", g.z0}, {"dr", g.dr}, {"dz", g.dz}, {"nr", g.nr}, {"nz", g.nz}};
    }

    // The readers below assume the document already passed schema validation
    // (see run_config.hpp); they only fill in what is present.

    inline JointLimits limits_from_json(const ordered_json &j, JointLimits out = {})
    {
        for (std::size_t c = 0; c < dof_count; ++c)
            if (j.contains(dof_names[c]))
            {
                const auto &pair = j.at(dof_names[c]);
                if (!pair.is_array() || pair.size() != 2)
                    throw Error(ErrorCode::config_error, std::string("limits.") + dof_names[c] + " must be [min, max]");
                out[c] = {pair[0].get<double>(), pair[1].get<double>()};
            }
        return out;
    }

    inline ArmModel arm_from_json(const ordered_json &j, ArmModel m = {})
    {
        m.mast_length = j.value("mast_length", m.mast_length);
        m.stage123_segment_length = j.value("stage123_segment_length", m.stage123_segment_length);
        if (j.contains("stage4"))
        {
            m.stage4_coupling_count = j["stage4"].value("coupling_count", m.stage4_coupling_count);
            m.stage4_segment_length = j["stage4"].value("segment_length", m.stage4_segment_length);
        }
        if (j.contains("stage5"))
        {
            m.stage5_coupling_count = j["stage5"].value("coupling_count", m.stage5_coupling_count);
            m.stage5_segment_length = j["stage5"].value("segment_length", m.stage5_segment_length);
        }
        m.wrist_gripper_length = j.value("wrist_gripper_length", m.wrist_gripper_length);
        if (j.contains("limits"))
            m.limits = limits_from_json(j["limits"], m.limits);
        m.validate();
        return m;
    }

    inline TankModel tank_from_json(const ordered_json &j, TankModel t = {})
    {
        t.radius = j.value("radius", t.radius);
        t.wall_height = j.value("wall_height", t.wall_height);
        t.base_z = j.value("base_z", t.base_z);
        t.validate();
        return t;
    }

    inline GridSpec grid_from_json(const ordered_json &j, GridSpec g = {})
    {
        g.r0 = j.value("r0", g.r0);
        g.z0 = j.value("z0", g.z0);
        g.dr = j.value("dr", g.dr);
        g.dz = j.value("dz", g.dz);
        g.nr = j.value("nr", g.nr);
        g.nz = j.value("nz", g.nz);
        g.validate();
        return g;
    }

    /// FNV-1a over the canonical serialization of the model, as 16 hex digits.
    /// Formatting differences in the source file do not change it.
    inline std::string model_fingerprint(const ArmModel &m)
    {
        const std::string canonical = to_json(m).dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : canonical)
        {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
}
