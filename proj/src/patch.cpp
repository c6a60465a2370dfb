#include "acqlayout/patch.hpp"

namespace acqlayout {

std::string_view to_string(Sensor s) { return s == Sensor::S1 ? "S1" : "S2"; }

std::optional<Sensor> parse_sensor(std::string_view s) {
  if (s == "S1") return Sensor::S1;
  if (s == "S2") return Sensor::S2;
  return std::nullopt;
}

std::string to_string(const PatchKey& key) {
  return key.tile_id + "/" + std::to_string(key.row) + "/" + std::to_string(key.col);
}

}  // namespace acqlayout
