#include <algorithm>

#include "mmsf/mml/analysis.hpp"
#include "mmsf/mml/xmml.hpp"

namespace mmsf::mml {

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string emit_ssm(const ModelDescription& model) {
  std::vector<const SubmodelSpec*> nodes;
  for (const auto& s : model.submodels) nodes.push_back(&s);
  std::sort(nodes.begin(), nodes.end(), [](auto* x, auto* y) { return x->id < y->id; });
  std::vector<const ConduitSpec*> edges;
  for (const auto& c : model.conduits) edges.push_back(&c);
  std::sort(edges.begin(), edges.end(), [](auto* x, auto* y) { return x->id < y->id; });

  std::string out = "digraph " + dot_quote(model.name) + " {\n";
  out += "  rankdir=LR;\n  node [shape=box];\n";
  for (const auto* s : nodes) {
    std::string label = s->id + "\\ndt=" + format_number(s->scale.dt) + " s\\nT=" +
                        format_number(s->scale.total_time) + " s";
    if (s->scale.dx) label += "\\ndx=" + format_number(*s->scale.dx) + " m";
    if (s->scale.extent) label += "\\nL=" + format_number(*s->scale.extent) + " m";
    out += "  " + dot_quote(s->id) + " [label=\"" + label + "\"];\n";
  }
  for (const auto* c : edges) {
    std::string label = c->id;
    if (c->via) label += " via " + *c->via;
    out += "  " + dot_quote(c->from.submodel) + " -> " + dot_quote(c->to.submodel) + " [label=" +
           dot_quote(label) + "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace mmsf::mml
