#pragma once

// Network JSON format:
//   { "curves": [ { "vertices": [[x,y],...], "multiplicity": 1,
//                   "start": <constraint>, "end": <constraint>, "closed": false } ],
//     "boundary_points": [ {"id": "A", "point": [x,y]} | {"id": "G", "trajectory": [[t,x,y],...]} ],
//     "junctions": [ {"id": "P", "point": [x,y]} ] }
// where <constraint> is {"fixed": id}, {"junction": id}, {"moving": id} or "free".
// Ids may be strings or integers; they are read back as strings.

#include "brakke/geometry.hpp"

#include <json.hpp>

#include <filesystem>

namespace brakke {

nlohmann::json network_to_json(const Network& network);
Network network_from_json(const nlohmann::json& j);

Network load_network(const std::filesystem::path& path);
void save_network(const std::filesystem::path& path, const Network& network);

}  // namespace brakke
