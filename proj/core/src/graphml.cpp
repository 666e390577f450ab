#include "cpsec/graphml.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "xml.hpp"

namespace cpsec {

namespace {

constexpr std::string_view kNamespace = "http://graphml.graphdrawing.org/xmlns";

std::string trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return std::string(s);
}

/// Raw character data of a <data> element, kept verbatim so values round-trip.
std::string raw_text(const xml::Element& e) {
  std::string out;
  for (const auto& t : e.texts) out += t;
  return out;
}

struct KeyInfo {
  std::string name;
  std::string domain;  // node, edge, all, graph ...
  std::optional<std::string> default_value;
};

struct GraphmlDocument {
  std::map<std::string, KeyInfo> keys;  // by key id
  const xml::Element* graph = nullptr;
  bool undirected = false;
  int graph_line = 0;
};

GraphmlDocument read_document(const xml::Element& root, std::vector<Diagnostic>& diagnostics) {
  if (root.name != "graphml") throw ParseError("root element is <" + root.name + ">, expected <graphml>", root.line);
  GraphmlDocument doc;
  for (const auto* key : root.children_named("key")) {
    const auto* id = key->attribute("id");
    if (!id) throw ParseError("<key> without id", key->line);
    KeyInfo info;
    const auto* name = key->attribute("attr.name");
    info.name = name ? *name : *id;
    const auto* domain = key->attribute("for");
    info.domain = domain ? *domain : "all";
    if (const auto* def = key->child("default")) info.default_value = raw_text(*def);
    doc.keys[*id] = std::move(info);
  }
  const auto graphs = root.children_named("graph");
  if (graphs.size() > 1)
    diagnostics.push_back({Severity::warning, "extra-graph", "only the first <graph> is read", {},
                           graphs[1]->line});
  if (!graphs.empty()) {
    doc.graph = graphs.front();
    doc.graph_line = doc.graph->line;
    const auto* edgedefault = doc.graph->attribute("edgedefault");
    doc.undirected = edgedefault && *edgedefault == "undirected";
  }
  return doc;
}

/// Data values of one node/edge keyed by resolved key name. Unknown names are
/// reported once per document.
class DataReader {
 public:
  DataReader(const GraphmlDocument& doc, std::set<std::string> known, std::vector<Diagnostic>& diagnostics)
      : doc_(doc), known_(std::move(known)), diagnostics_(diagnostics) {}

  std::map<std::string, std::string> read(const xml::Element& element, std::string_view domain) {
    std::map<std::string, std::string> values;
    for (const auto& [id, info] : doc_.keys) {
      if (info.default_value && (info.domain == domain || info.domain == "all") && known_.contains(info.name))
        values[info.name] = *info.default_value;
    }
    for (const auto* data : element.children_named("data")) {
      const auto* key = data->attribute("key");
      if (!key) throw ParseError("<data> without key", data->line);
      auto it = doc_.keys.find(*key);
      const std::string name = it == doc_.keys.end() ? *key : it->second.name;
      if (!known_.contains(name)) {
        if (reported_.insert(name).second)
          diagnostics_.push_back({Severity::warning, "unknown-key",
                                  "ignoring unknown GraphML key \"" + name + "\"", {name}, data->line});
        continue;
      }
      values[name] = raw_text(*data);
    }
    for (const auto& child : element.children) {
      if (child.name == "data") continue;
      if (reported_.insert("<" + child.name + ">").second)
        diagnostics_.push_back({Severity::warning, "unsupported-element",
                                "ignoring nested <" + child.name + "> element", {}, child.line});
    }
    return values;
  }

 private:
  const GraphmlDocument& doc_;
  std::set<std::string> known_;
  std::vector<Diagnostic>& diagnostics_;
  std::set<std::string> reported_;
};

std::string required_attribute(const xml::Element& e, std::string_view name) {
  const auto* value = e.attribute(name);
  if (!value) throw ParseError("<" + e.name + "> without " + std::string(name), e.line);
  return *value;
}

std::string edge_id(const xml::Element& e, std::size_t index) {
  const auto* id = e.attribute("id");
  return id ? *id : "e" + std::to_string(index);
}

void throw_if_errors(std::vector<Diagnostic> validation, std::vector<Diagnostic>& diagnostics) {
  if (has_errors(validation)) {
    diagnostics.insert(diagnostics.end(), validation.begin(), validation.end());
    throw ValidationError(std::move(diagnostics));
  }
  diagnostics.insert(diagnostics.end(), validation.begin(), validation.end());
}

void write_header(std::ostringstream& out) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"" << kNamespace << "\">\n";
}

void write_key(std::ostringstream& out, std::string_view name, std::string_view domain,
               std::string_view type, std::optional<std::string_view> default_value = {}) {
  out << "  <key id=\"" << name << "\" for=\"" << domain << "\" attr.name=\"" << name
      << "\" attr.type=\"" << type << "\"";
  if (!default_value) {
    out << "/>\n";
    return;
  }
  out << ">\n    <default>" << *default_value << "</default>\n  </key>\n";
}

void write_data(std::ostringstream& out, std::string_view key, std::string_view value) {
  out << "      <data key=\"" << key << "\">" << xml::escape(value) << "</data>\n";
}

}  // namespace

std::string encode_attributes(const AttributeMap& attributes) {
  std::string out;
  auto append_escaped = [&](std::string_view s) {
    for (char c : s) {
      if (c == '\\' || c == ';' || c == '=') out.push_back('\\');
      out.push_back(c);
    }
  };
  bool first = true;
  for (const auto& [key, value] : attributes) {
    if (!first) out.push_back(';');
    first = false;
    append_escaped(key);
    out.push_back('=');
    append_escaped(value);
  }
  return out;
}

AttributeMap decode_attributes(std::string_view encoded) {
  AttributeMap out;
  if (encoded.empty()) return out;
  std::string key, value;
  bool in_value = false;
  auto flush = [&] {
    if (!in_value) {
      if (key.empty()) return;  // tolerate a trailing ';'
      throw ParseError("attribute entry \"" + key + "\" has no '='");
    }
    if (!out.emplace(key, value).second) throw ParseError("duplicate attribute key \"" + key + "\"");
    key.clear();
    value.clear();
    in_value = false;
  };
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    char c = encoded[i];
    if (c == '\\' && i + 1 < encoded.size()) {
      (in_value ? value : key).push_back(encoded[++i]);
    } else if (c == ';') {
      flush();
    } else if (c == '=' && !in_value) {
      in_value = true;
    } else {
      (in_value ? value : key).push_back(c);
    }
  }
  flush();
  return out;
}

Parsed<SystemTopology> parse_topology_graphml(std::string_view document) {
  const xml::Element root = xml::parse(document);
  std::vector<Diagnostic> diagnostics;
  GraphmlDocument doc = read_document(root, diagnostics);
  Parsed<SystemTopology> result;
  if (!doc.graph) {
    result.diagnostics = std::move(diagnostics);
    return result;
  }
  if (doc.undirected)
    diagnostics.push_back({Severity::warning, "undirected-graph",
                           "edgedefault=\"undirected\" ignored; topology edges are directed", {},
                           doc.graph_line});

  DataReader reader(doc, {"name", "attrs", "entry_point"}, diagnostics);
  auto& topology = result.value;
  for (const auto* node : doc.graph->children_named("node")) {
    ComponentNode n;
    n.id = required_attribute(*node, "id");
    auto data = reader.read(*node, "node");
    n.name = data.contains("name") ? data["name"] : n.id;
    try {
      n.attributes = decode_attributes(data["attrs"]);
    } catch (const ParseError& e) {
      throw ParseError("node \"" + n.id + "\": " + e.what(), node->line);
    }
    if (auto it = data.find("entry_point"); it != data.end()) {
      const std::string flag = trim(it->second);
      if (flag == "true" || flag == "1") {
        n.entry_point = true;
      } else if (flag != "false" && flag != "0" && !flag.empty()) {
        throw ValidationError({{Severity::error, "bad-boolean",
                                "node \"" + n.id + "\": entry_point must be true or false", {n.id},
                                node->line}});
      }
    }
    topology.nodes.push_back(std::move(n));
  }
  std::size_t index = 0;
  for (const auto* edge : doc.graph->children_named("edge")) {
    ChannelEdge e;
    e.id = edge_id(*edge, index++);
    e.source = required_attribute(*edge, "source");
    e.target = required_attribute(*edge, "target");
    auto data = reader.read(*edge, "edge");
    try {
      e.attributes = decode_attributes(data["attrs"]);
    } catch (const ParseError& err) {
      throw ParseError("edge \"" + e.id + "\": " + err.what(), edge->line);
    }
    topology.edges.push_back(std::move(e));
  }
  throw_if_errors(validate(topology), diagnostics);
  result.diagnostics = std::move(diagnostics);
  return result;
}

Parsed<Specification> parse_spec_graphml(std::string_view document) {
  const xml::Element root = xml::parse(document);
  std::vector<Diagnostic> diagnostics;
  GraphmlDocument doc = read_document(root, diagnostics);
  Parsed<Specification> result;
  if (!doc.graph) {
    result.diagnostics = std::move(diagnostics);
    return result;
  }

  DataReader reader(doc, {"label", "level", "description", "component_id"}, diagnostics);
  auto& spec = result.value;
  std::vector<Diagnostic> level_errors;
  for (const auto* node : doc.graph->children_named("node")) {
    SpecNode n;
    n.id = required_attribute(*node, "id");
    auto data = reader.read(*node, "node");
    n.label = data.contains("label") ? data["label"] : n.id;
    n.description = data["description"];
    if (auto it = data.find("component_id"); it != data.end()) n.component_id = it->second;
    auto level_it = data.find("level");
    if (level_it == data.end()) {
      level_errors.push_back({Severity::error, "missing-level", "node \"" + n.id + "\" has no level",
                              {n.id}, node->line});
    } else if (auto level = parse_spec_level(trim(level_it->second))) {
      n.level = *level;
    } else {
      level_errors.push_back({Severity::error, "unknown-level",
                              "node \"" + n.id + "\" has unknown level \"" + level_it->second + "\"",
                              {n.id}, node->line});
    }
    spec.nodes.push_back(std::move(n));
  }
  if (!level_errors.empty()) {
    diagnostics.insert(diagnostics.end(), level_errors.begin(), level_errors.end());
    throw ValidationError(std::move(diagnostics));
  }
  for (const auto* edge : doc.graph->children_named("edge")) {
    reader.read(*edge, "edge");
    spec.edges.push_back({required_attribute(*edge, "source"), required_attribute(*edge, "target")});
  }
  throw_if_errors(validate(spec), diagnostics);
  result.diagnostics = std::move(diagnostics);
  return result;
}

std::string serialize_graphml(const SystemTopology& topology) {
  std::ostringstream out;
  write_header(out);
  write_key(out, "name", "node", "string");
  write_key(out, "attrs", "all", "string");
  write_key(out, "entry_point", "node", "boolean", "false");
  out << "  <graph id=\"topology\" edgedefault=\"directed\">\n";
  for (const auto& node : topology.nodes) {
    out << "    <node id=\"" << xml::escape(node.id) << "\">\n";
    write_data(out, "name", node.name);
    if (!node.attributes.empty()) write_data(out, "attrs", encode_attributes(node.attributes));
    if (node.entry_point) write_data(out, "entry_point", "true");
    out << "    </node>\n";
  }
  for (const auto& edge : topology.edges) {
    out << "    <edge id=\"" << xml::escape(edge.id) << "\" source=\"" << xml::escape(edge.source)
        << "\" target=\"" << xml::escape(edge.target) << "\"";
    if (edge.attributes.empty()) {
      out << "/>\n";
      continue;
    }
    out << ">\n";
    write_data(out, "attrs", encode_attributes(edge.attributes));
    out << "    </edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

std::string serialize_graphml(const Specification& spec) {
  std::ostringstream out;
  write_header(out);
  write_key(out, "label", "node", "string");
  write_key(out, "level", "node", "string");
  write_key(out, "description", "node", "string");
  write_key(out, "component_id", "node", "string");
  out << "  <graph id=\"specification\" edgedefault=\"directed\">\n";
  for (const auto& node : spec.nodes) {
    out << "    <node id=\"" << xml::escape(node.id) << "\">\n";
    write_data(out, "label", node.label);
    write_data(out, "level", to_string(node.level));
    if (!node.description.empty()) write_data(out, "description", node.description);
    if (node.component_id) write_data(out, "component_id", *node.component_id);
    out << "    </node>\n";
  }
  for (const auto& edge : spec.edges) {
    out << "    <edge source=\"" << xml::escape(edge.parent) << "\" target=\"" << xml::escape(edge.child)
        << "\"/>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

}  // namespace cpsec
