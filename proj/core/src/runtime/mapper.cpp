#include "mmsf/runtime/mapper.hpp"

#include "mmsf/solvers/solvers.hpp"

namespace mmsf::runtime {

bool is_known_mapper_kind(std::string_view kind) {
  return kind == "passthrough" || kind == "agents-to-grid" || kind == "grid-to-fields";
}

mml::Payload apply_mapper(const mml::MapperSpec& mapper, const mml::Payload& payload) {
  if (!mml::compatible(payload.type(), mapper.in)) {
    throw mml::TypeError("mapper '" + mapper.id + "' expects " + mml::to_string(mapper.in) + ", got " +
                         mml::to_string(payload.type()));
  }
  mml::Payload out;
  if (mapper.kind == "passthrough") {
    out = payload;
  } else if (mapper.kind == "agents-to-grid") {
    auto grid = solvers::rasterize_agent_list(payload.ints());
    out = mml::Payload::i64_grid(grid.nx, grid.ny, std::move(grid.codes));
  } else if (mapper.kind == "grid-to-fields") {
    const auto& d = payload.dims();
    solvers::GeometryGrid geometry{static_cast<int>(d.at(0)), static_cast<int>(d.at(1)), payload.ints()};
    auto field = solvers::geometry_to_source_field(geometry, 1.0);
    out = mml::Payload::f64_grid(field.nx, field.ny, std::move(field.values));
  } else {
    throw Error("mapper '" + mapper.id + "' has unknown kind '" + mapper.kind + "'");
  }
  if (!mml::compatible(out.type(), mapper.out)) {
    throw mml::TypeError("mapper '" + mapper.id + "' produced " + mml::to_string(out.type()) + ", declared " +
                         mml::to_string(mapper.out));
  }
  return out;
}

}  // namespace mmsf::runtime
