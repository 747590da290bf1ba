#include "mobkit/manifest.hpp"

#include "mobkit/csv.hpp"

#include <json.hpp>

#include <cstdio>

namespace mobkit {

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest_file(const std::string& path)
{
    return fnv1a_hex(read_file(path));
}

std::string RunManifest::to_json() const
{
    nlohmann::json j;
    j["command_line"] = command_line;
    j["tool_version"] = tool_version;
    j["config_digest"] = config_digest;
    j["input_digests"] = input_digests;
    if (rng_seed) {
        j["rng_seed"] = *rng_seed;
    }
    if (!notes.empty()) j["notes"] = notes;
    return j.dump(2) + "\n";
}

} // namespace mobkit
