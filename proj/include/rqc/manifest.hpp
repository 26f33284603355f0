#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "version.hpp"

namespace rqc {

// Provenance record written next to every emitted dataset.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string version = kVersion;
    double wall_seconds = 0.0;
    double max_quad_error = 0.0;
    double mode_delta = 0.0;
    int modes_used = 0;
    unsigned threads = 1;
    std::vector<std::string> outputs;

    std::string to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["version"] = version;
        j["wall_seconds"] = wall_seconds;
        j["tolerances"]["max_quad_error"] = max_quad_error;
        j["tolerances"]["mode_delta"] = mode_delta;
        j["tolerances"]["modes_used"] = modes_used;
        j["threads"] = threads;
        j["outputs"] = outputs;
        // angle conventions behind every d_theta / d_phi column
        j["conventions"]["theta"] = "polar angle of the normalized Bloch direction";
        j["conventions"]["phi_wrap"] = "(-pi, pi]";
        j["conventions"]["north_pole"] = "excited state";
        return j.dump(2) + "\n";
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        out << to_json();
    }
};

}  // namespace rqc
