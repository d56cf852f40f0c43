#ifndef MPATH_STORE_GRAPH_HPP_
#define MPATH_STORE_GRAPH_HPP_

#include <string>

#include "mpath/store/store.hpp"

namespace mpath::store {

/// Graphviz rendering of the system. Module nodes are filled with the color of
/// the task they were last trained on; every path is a chain of edges in its
/// task color. Published multipath structures (connectors, router and the
/// edges feeding them) are drawn with bold black edges.
std::string export_graph(const SystemStore& store);

}  // namespace mpath::store

#endif  // MPATH_STORE_GRAPH_HPP_
