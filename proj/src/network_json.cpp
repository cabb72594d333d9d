#include "brakke/network_json.hpp"

#include <fstream>

namespace brakke {

using nlohmann::json;

namespace {

json point_json(const Vec2& p) { return json::array({p.x(), p.y()}); }

Vec2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw GeometryError("point must be a [x, y] array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

std::string id_from(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw GeometryError("id must be a string or an integer");
}

json constraint_json(const EndpointConstraint& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FreeEnd>) return "free";
        if constexpr (std::is_same_v<T, FixedBoundary>) return {{"fixed", v.id}};
        if constexpr (std::is_same_v<T, JunctionEnd>) return {{"junction", v.id}};
        if constexpr (std::is_same_v<T, MovingBoundary>) return {{"moving", v.id}};
      },
      c);
}

EndpointConstraint constraint_from(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "free") return FreeEnd{};
    throw GeometryError("unknown endpoint constraint '" + j.get<std::string>() + "'");
  }
  if (j.is_object() && j.size() == 1) {
    if (j.contains("fixed")) return FixedBoundary{id_from(j["fixed"])};
    if (j.contains("junction")) return JunctionEnd{id_from(j["junction"])};
    if (j.contains("moving")) return MovingBoundary{id_from(j["moving"])};
  }
  throw GeometryError("malformed endpoint constraint: " + j.dump());
}

}  // namespace

json network_to_json(const Network& network) {
  json curves = json::array();
  for (const auto& c : network.curves) {
    json verts = json::array();
    for (const auto& v : c.vertices) verts.push_back(point_json(v));
    json jc = {{"vertices", verts},
               {"multiplicity", c.multiplicity},
               {"start", constraint_json(c.start)},
               {"end", constraint_json(c.end)}};
    if (c.closed) jc["closed"] = true;
    curves.push_back(std::move(jc));
  }
  json bps = json::array();
  for (const auto& b : network.boundary_points) {
    if (const auto* p = std::get_if<Vec2>(&b.where)) {
      bps.push_back({{"id", b.id}, {"point", point_json(*p)}});
    } else {
      json traj = json::array();
      for (const auto& s : std::get<BoundaryTrajectory>(b.where).samples()) {
        traj.push_back({s.t, s.x.x(), s.x.y()});
      }
      bps.push_back({{"id", b.id}, {"trajectory", traj}});
    }
  }
  json js = json::array();
  for (const auto& j : network.junctions) js.push_back({{"id", j.id}, {"point", point_json(j.point)}});
  return {{"curves", curves}, {"boundary_points", bps}, {"junctions", js}};
}

Network network_from_json(const json& j) {
  Network n;
  try {
    for (const auto& jc : j.value("curves", json::array())) {
      DiscreteCurve c;
      for (const auto& v : jc.at("vertices")) c.vertices.push_back(point_from(v));
      c.multiplicity = jc.value("multiplicity", 1);
      c.start = jc.contains("start") ? constraint_from(jc["start"]) : EndpointConstraint{FreeEnd{}};
      c.end = jc.contains("end") ? constraint_from(jc["end"]) : EndpointConstraint{FreeEnd{}};
      c.closed = jc.value("closed", false);
      n.curves.push_back(std::move(c));
    }
    for (const auto& jb : j.value("boundary_points", json::array())) {
      BoundaryPoint b;
      b.id = id_from(jb.at("id"));
      if (jb.contains("point")) {
        b.where = point_from(jb["point"]);
      } else if (jb.contains("trajectory")) {
        std::vector<BoundaryTrajectory::Sample> samples;
        for (const auto& s : jb["trajectory"]) {
          if (!s.is_array() || s.size() != 3) throw GeometryError("trajectory samples must be [t, x, y]");
          samples.push_back({s[0].get<double>(), Vec2(s[1].get<double>(), s[2].get<double>())});
        }
        b.where = BoundaryTrajectory(std::move(samples));
      } else {
        throw GeometryError("boundary point '" + b.id + "' needs a point or a trajectory");
      }
      n.boundary_points.push_back(std::move(b));
    }
    for (const auto& jj : j.value("junctions", json::array())) {
      n.junctions.push_back({id_from(jj.at("id")), point_from(jj.at("point"))});
    }
  } catch (const json::exception& e) {
    throw GeometryError(std::string("malformed network JSON: ") + e.what());
  }
  return n;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GeometryError("cannot open network file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw GeometryError("cannot parse " + path.string() + ": " + e.what());
  }
  return network_from_json(j);
}

void save_network(const std::filesystem::path& path, const Network& network) {
  std::ofstream out(path);
  if (!out) throw GeometryError("cannot write network file " + path.string());
  out << network_to_json(network).dump(1) << '\n';
}

}  // namespace brakke
