#include "erc/chart.hpp"

#include "erc/tape.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace erc {

void PsppGraph::add_entity(const std::string& name, EntityCategory cat) {
  const std::string canon = canonicalize(name);
  auto [it, inserted] = entities.emplace(canon, cat);
  if (!inserted && it->second != cat)
    throw ContractError("graph: entity " + canon + " registered with two categories");
}

void PsppGraph::set_score(const std::string& a, const std::string& b, double p) {
  if (p <= 0.0 || p >= 1.0)
    throw ContractError("graph: relation scores must lie strictly in (0,1)");
  auto ca = entities.find(canonicalize(a));
  auto cb = entities.find(canonicalize(b));
  if (ca == entities.end() || cb == entities.end())
    throw ContractError("graph: scoring a pair with unknown entity");
  const bool ps = (ca->second == EntityCategory::Process && cb->second == EntityCategory::Structure) ||
                  (ca->second == EntityCategory::Structure && cb->second == EntityCategory::Process);
  const bool sp = (ca->second == EntityCategory::Structure && cb->second == EntityCategory::Property) ||
                  (ca->second == EntityCategory::Property && cb->second == EntityCategory::Structure);
  if (!ps && !sp)
    throw ContractError("graph: only process<->structure and structure<->property pairs carry scores");
  scores[make_pair_key(a, b)] = p;
}

double PsppGraph::score(const std::string& a, const std::string& b) const {
  auto it = scores.find(make_pair_key(a, b));
  return it == scores.end() ? 0.0 : it->second;
}

std::vector<std::string> PsppGraph::of_category(EntityCategory cat) const {
  std::vector<std::string> out;
  for (const auto& [name, c] : entities)
    if (c == cat) out.push_back(name);
  return out;  // std::map iteration is already sorted
}

double structure_capacity(const PsppGraph& graph, const std::string& entity,
                          const std::vector<std::string>& target_properties) {
  const std::string canon = canonicalize(entity);
  auto it = graph.entities.find(canon);
  if (it == graph.entities.end() || it->second != EntityCategory::Structure)
    throw ContractError("structure_capacity: " + entity + " is not a structure");
  double process_arm = 0.0;
  for (const std::string& p : graph.of_category(EntityCategory::Process))
    process_arm += graph.score(canon, p);
  double property_arm = 0.0;
  for (const std::string& p : target_properties) property_arm += graph.score(canon, p);
  return std::min(process_arm, property_arm);
}

double process_capacity(const PsppGraph& graph, const std::string& entity,
                        const std::vector<std::string>& selected_structures) {
  const std::string canon = canonicalize(entity);
  auto it = graph.entities.find(canon);
  if (it == graph.entities.end() || it->second != EntityCategory::Process)
    throw ContractError("process_capacity: " + entity + " is not a process");
  double total = 0.0;
  for (const std::string& s : selected_structures) total += graph.score(canon, s);
  return total;
}

namespace {

// descending capacity, ascending name on ties
std::vector<std::pair<std::string, double>> top_by_capacity(
    std::vector<std::pair<std::string, double>> scored, int limit) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > limit) scored.resize(static_cast<std::size_t>(limit));
  return scored;
}

std::string representative_of(const PsppGraph& graph, const std::string& a,
                              const std::string& b) {
  auto it = graph.representative_sentences.find(make_pair_key(a, b));
  if (it == graph.representative_sentences.end() || it->second.empty()) return "";
  std::string out;
  for (const std::string& tok : it->second) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace

Chart build_chart(const PsppGraph& graph, const std::vector<std::string>& target_properties,
                  const BuildChartOptions& opts) {
  if (opts.num_processes < 1 || opts.num_structures < 1)
    throw ContractError("build_chart: n and m must be at least 1");
  Chart chart;
  for (const std::string& p : target_properties) {
    const std::string canon = canonicalize(p);
    auto it = graph.entities.find(canon);
    if (it == graph.entities.end() || it->second != EntityCategory::Property)
      throw ContractError("build_chart: target " + p + " is not a property");
    chart.target_properties.push_back(canon);
  }

  std::vector<std::pair<std::string, double>> structure_scores;
  for (const std::string& s : graph.of_category(EntityCategory::Structure))
    structure_scores.emplace_back(s, structure_capacity(graph, s, chart.target_properties));
  auto structures = top_by_capacity(std::move(structure_scores), opts.num_structures);
  chart.shortfall = static_cast<int>(structures.size()) < opts.num_structures;

  std::vector<std::string> selected;
  for (const auto& [name, cap] : structures) {
    selected.push_back(name);
    chart.structures.push_back({name, "structure", cap});
  }
  const std::vector<std::string> process_targets =
      opts.all_structures ? graph.of_category(EntityCategory::Structure) : selected;

  std::vector<std::pair<std::string, double>> process_scores;
  for (const std::string& p : graph.of_category(EntityCategory::Process))
    process_scores.emplace_back(p, process_capacity(graph, p, process_targets));
  auto processes = top_by_capacity(std::move(process_scores), opts.num_processes);
  chart.shortfall = chart.shortfall || static_cast<int>(processes.size()) < opts.num_processes;
  for (const auto& [name, cap] : processes) chart.processes.push_back({name, "process", cap});

  for (const Chart::Node& p : chart.processes)
    for (const Chart::Node& s : chart.structures)
      if (graph.scores.count(make_pair_key(p.name, s.name)) > 0)
        chart.edges.push_back({p.name, s.name, graph.score(p.name, s.name),
                               representative_of(graph, p.name, s.name)});
  for (const Chart::Node& s : chart.structures)
    for (const std::string& prop : chart.target_properties)
      if (graph.scores.count(make_pair_key(s.name, prop)) > 0)
        chart.edges.push_back({s.name, prop, graph.score(s.name, prop),
                               representative_of(graph, s.name, prop)});
  return chart;
}

std::string chart_to_json(const Chart& chart) {
  nlohmann::json j;
  j["target_properties"] = chart.target_properties;
  auto node_to_json = [](const Chart::Node& n) {
    return nlohmann::json{{"name", n.name}, {"category", n.category}, {"capacity", n.capacity}};
  };
  j["processes"] = nlohmann::json::array();
  for (const auto& n : chart.processes) j["processes"].push_back(node_to_json(n));
  j["structures"] = nlohmann::json::array();
  for (const auto& n : chart.structures) j["structures"].push_back(node_to_json(n));
  j["edges"] = nlohmann::json::array();
  for (const auto& e : chart.edges)
    j["edges"].push_back({{"from", e.from},
                          {"to", e.to},
                          {"score", e.score},
                          {"representative_sentence", e.representative_sentence}});
  j["shortfall"] = chart.shortfall;
  return j.dump(2);
}

Chart chart_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Chart chart;
  chart.target_properties = j.at("target_properties").get<std::vector<std::string>>();
  auto node_from = [](const nlohmann::json& n) {
    return Chart::Node{n.at("name").get<std::string>(), n.at("category").get<std::string>(),
                       n.at("capacity").get<double>()};
  };
  for (const auto& n : j.at("processes")) chart.processes.push_back(node_from(n));
  for (const auto& n : j.at("structures")) chart.structures.push_back(node_from(n));
  for (const auto& e : j.at("edges"))
    chart.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                           e.at("score").get<double>(),
                           e.at("representative_sentence").get<std::string>()});
  chart.shortfall = j.at("shortfall").get<bool>();
  return chart;
}

std::string chart_to_dot(const Chart& chart) {
  std::ostringstream os;
  os << "digraph pspp {\n  rankdir=LR;\n  node [shape=box];\n";
  os << "  { rank=same;";
  for (const auto& n : chart.processes) os << " \"" << n.name << "\";";
  os << " }\n  { rank=same;";
  for (const auto& n : chart.structures) os << " \"" << n.name << "\";";
  os << " }\n  { rank=same;";
  for (const auto& p : chart.target_properties) os << " \"" << p << "\";";
  os << " }\n";
  for (const auto& e : chart.edges) {
    os << "  \"" << e.from << "\" -> \"" << e.to << "\" [label=\"";
    os.precision(3);
    os << e.score << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace erc
