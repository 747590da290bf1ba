#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace mobkit {

/// Reproducibility record written next to every command's outputs.
/// Reruns with equal config and input digests produce byte-identical
/// outputs. Execution-neutral flags (--threads) are stripped from the
/// recorded command line so they cannot perturb any output byte.
struct RunManifest {
    std::string command_line;
    std::string tool_version;
    std::string config_digest;
    std::map<std::string, std::string> input_digests; // path -> digest
    std::optional<std::uint64_t> rng_seed;
    std::map<std::string, std::string> notes; // e.g. rows removed by the cut

    std::string to_json() const;
};

/// 64-bit FNV-1a of a byte string, as fixed-width hex.
std::string fnv1a_hex(const std::string& bytes);

std::string digest_file(const std::string& path);

} // namespace mobkit
