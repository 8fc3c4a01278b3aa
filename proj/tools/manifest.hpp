#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spe::cli {

/// Record of one invocation. Digests cover exact file bytes.
struct RunManifest {
    std::vector<std::string> command_line;
    std::map<std::string, uint64_t> seeds;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;

    void add_input(const std::filesystem::path& p) { inputs.push_back(p); }
    void add_output(const std::filesystem::path& p) { outputs.push_back(p); }

    /// Digests every listed file now and writes JSON to path.
    void write(const std::filesystem::path& path) const;
};

inline constexpr const char* tool_version = "spe 1.0.0";

}  // namespace spe::cli
