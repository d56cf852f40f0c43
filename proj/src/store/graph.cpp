#include "mpath/store/graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace mpath::store {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string export_graph(const SystemStore& store) {
  std::map<std::string, std::string> color;
  const auto tasks = store.task_ids();
  for (std::size_t i = 0; i < tasks.size(); ++i) color[tasks[i]] = kPalette[i % std::size(kPalette)];
  auto task_color = [&](const std::string& task) {
    auto it = color.find(task);
    return it == color.end() ? std::string("#000000") : it->second;
  };

  std::ostringstream os;
  os << "digraph system {\n";
  os << "  rankdir=BT;\n";
  os << "  node [style=filled, fontname=\"Helvetica\", fontsize=10];\n";

  const auto paths = store.path_ids();
  const auto models = store.model_ids();
  std::set<std::string> highlighted_paths;
  for (const auto& mid : models) {
    const PublishedModel& m = store.model(mid);
    highlighted_paths.insert(m.main_path_id);
    highlighted_paths.insert(m.support_path_ids.begin(), m.support_path_ids.end());
  }

  std::set<std::string> used_modules;
  for (const auto& pid : paths)
    for (const auto& mid : store.path(pid).module_ids) used_modules.insert(mid);
  for (const auto& id : store.module_ids()) {
    const ModuleDef& m = store.module(id);
    if (m.kind == ModuleKind::connector || m.kind == ModuleKind::router) continue;
    if (!used_modules.count(id)) continue;
    const char* shape = m.kind == ModuleKind::head ? "box" : "ellipse";
    os << "  " << quoted(id) << " [shape=" << shape << ", fillcolor=" << quoted(task_color(m.last_trained_task))
       << ", label=" << quoted(id) << "];\n";
  }

  for (const auto& pid : paths) {
    const PathSpec& p = store.path(pid);
    const std::string c = task_color(p.task_id);
    const bool hl = highlighted_paths.count(pid) != 0;
    const std::string input = "input:" + pid;
    // Input nodes carry the task name only for paths used by a multipath model.
    os << "  " << quoted(input) << " [shape=plaintext, style=\"\", label=" << quoted(hl ? p.task_id : "") << "];\n";
    std::string prev = input;
    for (const auto& mid : p.module_ids) {
      os << "  " << quoted(prev) << " -> " << quoted(mid) << " [color=" << quoted(c) << "];\n";
      prev = mid;
    }
  }

  for (const auto& id : models) {
    const PublishedModel& m = store.model(id);
    const std::string agg = "aggregate:" + m.model_id;
    os << "  " << quoted(agg) << " [shape=box, fillcolor=" << quoted(task_color(m.task_id))
       << ", label=" << quoted(m.task_id + " multipath") << ", penwidth=2];\n";
    const std::string main_head = store.path(m.main_path_id).module_ids.back();
    os << "  " << quoted(main_head) << " -> " << quoted(agg) << " [color=black, penwidth=2.5];\n";
    for (std::size_t i = 0; i < m.support_path_ids.size(); ++i) {
      const std::string& conn = m.connector_ids[i];
      const std::string head = store.path(m.support_path_ids[i]).module_ids.back();
      os << "  " << quoted(conn) << " [shape=diamond, fillcolor=" << quoted(task_color(m.task_id)) << "];\n";
      os << "  " << quoted(head) << " -> " << quoted(conn) << " [color=black, penwidth=2.5];\n";
      os << "  " << quoted(conn) << " -> " << quoted(agg) << " [color=black, penwidth=2.5];\n";
    }
    if (m.router_id) {
      os << "  " << quoted(*m.router_id) << " [shape=hexagon, fillcolor=" << quoted(task_color(m.task_id)) << "];\n";
      os << "  " << quoted(main_head) << " -> " << quoted(*m.router_id) << " [color=black, penwidth=2.5];\n";
      os << "  " << quoted(*m.router_id) << " -> " << quoted(agg) << " [color=black, penwidth=2.5, style=dashed];\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace mpath::store
