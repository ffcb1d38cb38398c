#include "roadvec/geojson.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

namespace roadvec::geojson {

std::string material_name(graph::Material m) {
  switch (m) {
    case graph::Material::processed: return "processed";
    case graph::Material::gravel: return "gravel";
    case graph::Material::sand: return "sand";
    default: return "unknown";
  }
}

graph::Material material_from_name(const std::string& s) {
  if (s == "unknown") return graph::Material::unknown;
  if (s == "processed") return graph::Material::processed;
  if (s == "gravel") return graph::Material::gravel;
  if (s == "sand") return graph::Material::sand;
  throw parse_error("unknown material '" + s + "'");
}

std::string provenance_name(graph::Provenance p) {
  switch (p) {
    case graph::Provenance::collapsed: return "collapsed";
    case graph::Provenance::circle: return "circle";
    case graph::Provenance::lane_duplicate: return "lane_duplicate";
    default: return "traced";
  }
}

graph::Provenance provenance_from_name(const std::string& s) {
  if (s == "traced") return graph::Provenance::traced;
  if (s == "collapsed") return graph::Provenance::collapsed;
  if (s == "circle") return graph::Provenance::circle;
  if (s == "lane_duplicate") return graph::Provenance::lane_duplicate;
  throw parse_error("unknown provenance '" + s + "'");
}

void write_network(const graph::RoadGraph& g, const std::string& path) {
  nlohmann::json root;
  root["type"] = "FeatureCollection";
  root["features"] = nlohmann::json::array();
  for (const auto& [id, e] : g.edges) {
    nlohmann::json f;
    f["type"] = "Feature";
    f["geometry"]["type"] = "LineString";
    auto& coords = f["geometry"]["coordinates"];
    coords = nlohmann::json::array();
    for (const geom::Point& p : e.geometry)
      coords.push_back(nlohmann::json::array({p.x, p.y}));
    f["properties"]["id"] = id;
    f["properties"]["material"] = material_name(e.attrs.material);
    f["properties"]["double_lane"] = e.attrs.double_lane;
    f["properties"]["provenance"] = provenance_name(e.attrs.provenance);
    if (e.attrs.mean_width) f["properties"]["mean_width"] = *e.attrs.mean_width;
    root["features"].push_back(std::move(f));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << root.dump(2) << '\n';
  if (!out) throw io_error("write failed for " + path);
}

namespace {

[[noreturn]] void fail_at_byte(const std::string& path,
                               const std::string& text, size_t byte,
                               const std::string& what) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw parse_error(path + ":" + std::to_string(line) + ":" +
                    std::to_string(col) + ": " + what);
}

[[noreturn]] void fail_feature(const std::string& path, size_t index,
                               const std::string& what) {
  throw parse_error(path + ": feature " + std::to_string(index) + ": " + what);
}

}  // namespace

graph::RoadGraph read_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail_at_byte(path, text, e.byte > 0 ? e.byte - 1 : 0, e.what());
  }

  if (!root.is_object() || root.value("type", "") != "FeatureCollection")
    throw parse_error(path + ": root must be a FeatureCollection");
  if (!root.contains("features") || !root["features"].is_array())
    throw parse_error(path + ": missing features array");

  graph::RoadGraph g;
  struct PointKey {
    double x, y;
    bool operator<(const PointKey& o) const {
      return x < o.x || (x == o.x && y < o.y);
    }
  };
  std::map<PointKey, graph::NodeId> node_at;
  auto node_for = [&](geom::Point p) {
    const PointKey k{p.x, p.y};
    auto it = node_at.find(k);
    if (it != node_at.end()) return it->second;
    const graph::NodeId id = g.add_node(p);
    node_at.emplace(k, id);
    return id;
  };

  std::set<graph::EdgeId> seen;
  const auto& features = root["features"];
  for (size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (!f.is_object() || f.value("type", "") != "Feature")
      fail_feature(path, i, "not a Feature object");
    if (!f.contains("geometry") || !f["geometry"].is_object())
      fail_feature(path, i, "missing geometry");
    const auto& geo = f["geometry"];
    const std::string gtype = geo.value("type", "");
    if (gtype != "LineString")
      fail_feature(path, i, "only LineString geometry is accepted, got '" +
                                gtype + "'");
    if (!geo.contains("coordinates") || !geo["coordinates"].is_array())
      fail_feature(path, i, "missing coordinates");

    geom::Polyline line;
    for (const auto& c : geo["coordinates"]) {
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() ||
          !c[1].is_number())
        fail_feature(path, i, "coordinates must be [x,y] number pairs");
      line.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    if (line.size() < 2)
      fail_feature(path, i, "LineString needs at least 2 positions");
    try {
      geom::validate_polyline(line);
    } catch (const std::exception& e) {
      fail_feature(path, i, e.what());
    }

    if (!f.contains("properties") || !f["properties"].is_object())
      fail_feature(path, i, "missing properties");
    const auto& props = f["properties"];
    graph::EdgeAttrs attrs;
    graph::EdgeId id = -1;
    try {
      if (!props.contains("id") || !props["id"].is_number_integer())
        throw parse_error("integer id property required");
      id = props["id"].get<graph::EdgeId>();
      if (id < 0) throw parse_error("edge id must be >= 0");
      attrs.material = material_from_name(props.value("material", "unknown"));
      attrs.provenance =
          provenance_from_name(props.value("provenance", "traced"));
      if (props.contains("double_lane")) {
        if (!props["double_lane"].is_boolean())
          throw parse_error("double_lane must be boolean");
        attrs.double_lane = props["double_lane"].get<bool>();
      }
      if (props.contains("mean_width")) {
        if (!props["mean_width"].is_number())
          throw parse_error("mean_width must be a number");
        attrs.mean_width = props["mean_width"].get<double>();
      }
    } catch (const std::exception& e) {
      fail_feature(path, i, e.what());
    }
    if (!seen.insert(id).second)
      fail_feature(path, i, "duplicate edge id " + std::to_string(id));

    const graph::NodeId a = node_for(line.front());
    const graph::NodeId b = node_for(line.back());
    g.edges[id] = graph::Edge{a, b, std::move(line), attrs};
    g.next_edge = std::max(g.next_edge, id + 1);
  }
  return g;
}

}  // namespace roadvec::geojson
