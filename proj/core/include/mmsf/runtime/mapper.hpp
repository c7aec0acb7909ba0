#pragma once

#include <string_view>

#include "mmsf/mml/model.hpp"
#include "mmsf/mml/payload.hpp"

namespace mmsf::runtime {

// Known kinds: "passthrough", "agents-to-grid" (encoded agent list to
// occupancy grid), "grid-to-fields" (geometry grid to drug-source field).
bool is_known_mapper_kind(std::string_view kind);

// Pure. Throws mml::TypeError when the payload does not match the mapper's
// declared input or the result does not match its declared output.
mml::Payload apply_mapper(const mml::MapperSpec& mapper, const mml::Payload& payload);

}  // namespace mmsf::runtime
