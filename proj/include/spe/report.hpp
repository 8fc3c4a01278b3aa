#pragma once

#include <span>
#include <string>
#include <string_view>

#include "spe/backbone.hpp"
#include "spe/spade_sim.hpp"

namespace spe {

/// Per-layer report, one row per layer plus a totals row. Reals are %.8e.
std::string report_csv(std::string_view network, std::span<const LayerReport> reports);
std::string report_json(std::string_view network, std::span<const LayerReport> reports);

/// Per-layer cycle breakdown plus the overlapped network total.
std::string cycles_csv(const SpeedupReport& rep, const AcceleratorConfig& cfg);
std::string cycles_json(const SpeedupReport& rep, const AcceleratorConfig& cfg);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace spe
