#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mmsf/mml/model.hpp"

namespace mmsf::mml {

// Parses the xMML-like dialect:
//
//   <model name="...">
//     <submodel id dt total_time [dx] [extent] impl>
//       <port name direction operator kind [dims]/>
//     </submodel>
//     <mapper id kind in out [in_dims] [out_dims]/>
//     <conduit id from="A.p" to="B.q" [via="m"] [transport="inproc|tcp|relayed"]/>
//   </model>
//
// Times are seconds and lengths meters, written as plain decimal literals.
// Grid dims are written "NXxNY". Either a fully resolved model comes back or
// SyntaxError / SchemaError / ReferenceError is thrown.
ModelDescription parse_xmml(std::string_view text);
ModelDescription load_xmml(const std::filesystem::path& path);

// Canonical serialization; parse_xmml(serialize_xmml(m)) == m.
std::string serialize_xmml(const ModelDescription& model);

// Shortest decimal that reads back to the same double.
std::string format_number(double value);

}  // namespace mmsf::mml
