#include "mmsf/mml/xmml.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "xml.hpp"

namespace mmsf::mml {

namespace {

const std::string& require(const xml::Element& el, std::string_view key) {
  if (const auto* v = el.attribute(key)) return *v;
  throw SchemaError("line " + std::to_string(el.line) + ": <" + el.name +
                    "> is missing required attribute '" + std::string(key) + "'");
}

void reject_unknown(const xml::Element& el, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : el.attributes) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) {
      throw SchemaError("line " + std::to_string(el.line) + ": unknown attribute '" + k +
                        "' on <" + el.name + ">");
    }
  }
}

double parse_quantity(const xml::Element& el, std::string_view key, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc{} || p != last || !std::isfinite(value)) {
    throw SchemaError("line " + std::to_string(el.line) + ": attribute '" + std::string(key) +
                      "' must be a plain decimal literal in SI units, got '" + text + "'");
  }
  return value;
}

std::vector<std::int64_t> parse_dims(const xml::Element& el, const std::string& text) {
  std::vector<std::int64_t> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('x', start);
    if (end == std::string::npos) end = text.size();
    std::int64_t d = 0;
    auto [p, ec] = std::from_chars(text.data() + start, text.data() + end, d);
    if (ec != std::errc{} || p != text.data() + end || d <= 0) {
      throw SchemaError("line " + std::to_string(el.line) + ": bad dims '" + text + "'");
    }
    dims.push_back(d);
    start = end + 1;
  }
  return dims;
}

PayloadType parse_type(const xml::Element& el, std::string_view kind_key,
                       std::string_view dims_key) {
  const auto& kind_text = require(el, kind_key);
  auto kind = payload_kind_from_string(kind_text);
  if (!kind) {
    throw SchemaError("line " + std::to_string(el.line) + ": unknown payload kind '" + kind_text + "'");
  }
  PayloadType type{*kind, {}};
  if (const auto* dims = el.attribute(dims_key)) {
    if (!is_grid(*kind)) {
      throw SchemaError("line " + std::to_string(el.line) + ": dims given for non-grid kind '" +
                        kind_text + "'");
    }
    type.dims = parse_dims(el, *dims);
  }
  return type;
}

Endpoint parse_endpoint(const xml::Element& el, std::string_view key) {
  const auto& text = require(el, key);
  auto dot = text.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == text.size()) {
    throw SchemaError("line " + std::to_string(el.line) + ": conduit endpoint '" + text +
                      "' must be written submodel.port");
  }
  return {text.substr(0, dot), text.substr(dot + 1)};
}

SubmodelSpec parse_submodel(const xml::Element& el) {
  reject_unknown(el, {"id", "dt", "total_time", "dx", "extent", "impl"});
  SubmodelSpec sm;
  sm.id = require(el, "id");
  sm.scale.dt = parse_quantity(el, "dt", require(el, "dt"));
  sm.scale.total_time = parse_quantity(el, "total_time", require(el, "total_time"));
  if (const auto* dx = el.attribute("dx")) sm.scale.dx = parse_quantity(el, "dx", *dx);
  if (const auto* ext = el.attribute("extent")) sm.scale.extent = parse_quantity(el, "extent", *ext);
  sm.implementation_key = require(el, "impl");
  for (const auto& child : el.children) {
    if (child.name != "port") {
      throw SchemaError("line " + std::to_string(child.line) + ": unexpected <" + child.name +
                        "> inside <submodel>");
    }
    reject_unknown(child, {"name", "direction", "operator", "kind", "dims"});
    PortSpec port;
    port.name = require(child, "name");
    const auto& dir = require(child, "direction");
    if (dir == "in") port.direction = PortDirection::kIn;
    else if (dir == "out") port.direction = PortDirection::kOut;
    else throw SchemaError("line " + std::to_string(child.line) + ": direction must be in|out");
    const auto& op = require(child, "operator");
    auto phase = operator_phase_from_string(op);
    if (!phase) {
      throw SchemaError("line " + std::to_string(child.line) + ": unknown operator '" + op + "'");
    }
    port.binding = *phase;
    port.type = parse_type(child, "kind", "dims");
    sm.ports.push_back(std::move(port));
  }
  return sm;
}

MapperSpec parse_mapper(const xml::Element& el) {
  reject_unknown(el, {"id", "kind", "in", "out", "in_dims", "out_dims"});
  MapperSpec m;
  m.id = require(el, "id");
  m.kind = require(el, "kind");
  m.in = parse_type(el, "in", "in_dims");
  m.out = parse_type(el, "out", "out_dims");
  return m;
}

ConduitSpec parse_conduit(const xml::Element& el) {
  reject_unknown(el, {"id", "from", "to", "via", "transport"});
  ConduitSpec c;
  c.id = require(el, "id");
  c.from = parse_endpoint(el, "from");
  c.to = parse_endpoint(el, "to");
  if (const auto* via = el.attribute("via")) c.via = *via;
  if (const auto* t = el.attribute("transport")) {
    auto hint = transport_hint_from_string(*t);
    if (!hint) {
      throw SchemaError("line " + std::to_string(el.line) + ": transport must be inproc|tcp|relayed");
    }
    c.transport = *hint;
  }
  return c;
}

void resolve_references(const ModelDescription& model) {
  for (const auto& c : model.conduits) {
    auto check = [&](const Endpoint& ep) {
      const auto* sm = model.find_submodel(ep.submodel);
      if (!sm) {
        throw ReferenceError("conduit '" + c.id + "' references unknown submodel '" + ep.submodel + "'");
      }
      if (!sm->find_port(ep.port)) {
        throw ReferenceError("conduit '" + c.id + "' references unknown port '" + to_string(ep) + "'");
      }
    };
    check(c.from);
    check(c.to);
    if (c.via && !model.find_mapper(*c.via)) {
      throw ReferenceError("conduit '" + c.id + "' references unknown mapper '" + *c.via + "'");
    }
  }
}

}  // namespace

ModelDescription parse_xmml(std::string_view text) {
  xml::Element root = xml::parse(text);
  if (root.name != "model") {
    throw SchemaError("line " + std::to_string(root.line) + ": root element must be <model>");
  }
  reject_unknown(root, {"name"});
  ModelDescription model;
  model.name = require(root, "name");
  for (const auto& child : root.children) {
    if (child.name == "submodel") model.submodels.push_back(parse_submodel(child));
    else if (child.name == "mapper") model.mappers.push_back(parse_mapper(child));
    else if (child.name == "conduit") model.conduits.push_back(parse_conduit(child));
    else {
      throw SchemaError("line " + std::to_string(child.line) + ": unexpected element <" +
                        child.name + ">");
    }
  }
  resolve_references(model);
  return model;
}

ModelDescription load_xmml(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_xmml(ss.str());
}

std::string format_number(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

namespace {

std::string dims_text(const std::vector<std::int64_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::string attr(std::string_view key, std::string_view value) {
  return " " + std::string(key) + "=\"" + xml::escape(value) + "\"";
}

}  // namespace

std::string serialize_xmml(const ModelDescription& model) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<model" + attr("name", model.name) + ">\n";
  for (const auto& sm : model.submodels) {
    out += "  <submodel" + attr("id", sm.id) + attr("dt", format_number(sm.scale.dt)) +
           attr("total_time", format_number(sm.scale.total_time));
    if (sm.scale.dx) out += attr("dx", format_number(*sm.scale.dx));
    if (sm.scale.extent) out += attr("extent", format_number(*sm.scale.extent));
    out += attr("impl", sm.implementation_key);
    if (sm.ports.empty()) {
      out += "/>\n";
      continue;
    }
    out += ">\n";
    for (const auto& p : sm.ports) {
      out += "    <port" + attr("name", p.name) + attr("direction", to_string(p.direction)) +
             attr("operator", to_string(p.binding)) + attr("kind", to_string(p.type.kind));
      if (!p.type.dims.empty()) out += attr("dims", dims_text(p.type.dims));
      out += "/>\n";
    }
    out += "  </submodel>\n";
  }
  for (const auto& m : model.mappers) {
    out += "  <mapper" + attr("id", m.id) + attr("kind", m.kind) + attr("in", to_string(m.in.kind)) +
           attr("out", to_string(m.out.kind));
    if (!m.in.dims.empty()) out += attr("in_dims", dims_text(m.in.dims));
    if (!m.out.dims.empty()) out += attr("out_dims", dims_text(m.out.dims));
    out += "/>\n";
  }
  for (const auto& c : model.conduits) {
    out += "  <conduit" + attr("id", c.id) + attr("from", to_string(c.from)) + attr("to", to_string(c.to));
    if (c.via) out += attr("via", *c.via);
    if (c.transport != TransportHint::kInproc) out += attr("transport", to_string(c.transport));
    out += "/>\n";
  }
  out += "</model>\n";
  return out;
}

}  // namespace mmsf::mml
