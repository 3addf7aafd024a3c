#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "netmpc/synthesis.hpp"

namespace netmpc {

// Hash of every input the offline moments depend on (model matrices, horizon,
// channels, saturator). u_max, Sigma_x0 and stability settings are excluded.
std::uint64_t moments_hash(const SystemModel& model, const ChannelSpec& sensor,
                           const ChannelSpec& control, const SaturatorSpec& sat);

std::string hash_hex(std::uint64_t h);

// Flat text format; values are written as hex floats so a round trip is exact
// and repeated runs produce identical bytes.
void write_moments(std::ostream& os, const OfflineMoments& m);
OfflineMoments read_moments(std::istream& is);  // throws InvalidArgument
void save_moments(const std::string& path, const OfflineMoments& m);
OfflineMoments load_moments(const std::string& path);

// Human-readable summary for `netmpc inspect`.
void describe_moments(std::ostream& os, const OfflineMoments& m);

}  // namespace netmpc
