#pragma once

#include <string>

#include "mapcull/graph.hpp"

namespace mapcull {

// Single JSON document with top-level node/edge arrays; floats written with
// 17 significant digits so load(save(g)) == g bit-for-bit. A sidecar
// "<path>.meta" records descriptor_dim, knn_k and the generator seed.
void save_graph(const MapGraph& graph, const std::string& path);
MapGraph load_graph(const std::string& path);

}  // namespace mapcull
