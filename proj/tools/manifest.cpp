#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include "json.hpp"
#include "spe/io.hpp"
#include "spe/report.hpp"

namespace spe::cli {

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json digests(const std::vector<std::filesystem::path>& files) {
    auto arr = nlohmann::json::array();
    for (const auto& f : files) {
        arr.push_back({{"path", f.string()}, {"sha256", sha256_hex(read_file(f))}});
    }
    return arr;
}

}  // namespace

void RunManifest::write(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["tool"] = tool_version;
    j["command_line"] = command_line;
    j["seeds"] = seeds;
    j["inputs"] = digests(inputs);
    j["outputs"] = digests(outputs);
    j["timestamp"] = utc_timestamp();
    write_file(path, j.dump(2) + "\n");
}

}  // namespace spe::cli
