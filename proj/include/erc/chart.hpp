#pragma once

#include "erc/weak_supervision.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace erc {

// Completed PSPP knowledge graph: typed entities plus pairwise relation
// probabilities on process<->structure and structure<->property pairs.
struct PsppGraph {
  std::map<std::string, EntityCategory> entities;
  std::map<PairKey, double> scores;
  std::map<PairKey, std::vector<std::string>> representative_sentences;

  void add_entity(const std::string& name, EntityCategory cat);
  void set_score(const std::string& a, const std::string& b, double p);
  double score(const std::string& a, const std::string& b) const;  // 0 when absent
  std::vector<std::string> of_category(EntityCategory cat) const;
};

// min over the process arm (all processes) and the property arm (targets)
double structure_capacity(const PsppGraph& graph, const std::string& entity,
                          const std::vector<std::string>& target_properties);

// sum of scores into the selected structures
double process_capacity(const PsppGraph& graph, const std::string& entity,
                        const std::vector<std::string>& selected_structures);

struct Chart {
  struct Node {
    std::string name;
    std::string category;
    double capacity = 0.0;
    bool operator==(const Node&) const = default;
  };
  struct Edge {
    std::string from;
    std::string to;
    double score = 0.0;
    std::string representative_sentence;
    bool operator==(const Edge&) const = default;
  };
  std::vector<std::string> target_properties;
  std::vector<Node> processes;
  std::vector<Node> structures;
  std::vector<Edge> edges;
  bool shortfall = false;  // fewer entities than requested

  bool operator==(const Chart&) const = default;
};

struct BuildChartOptions {
  int num_processes = 1;       // n
  int num_structures = 1;      // m
  bool all_structures = false; // process capacity over every structure instead
                               // of the selected ones
};

// Greedy: pick the m highest-capacity structures, then the n highest-capacity
// processes against them. Ties break lexicographically by entity name.
Chart build_chart(const PsppGraph& graph, const std::vector<std::string>& target_properties,
                  const BuildChartOptions& opts);

std::string chart_to_json(const Chart& chart);
Chart chart_from_json(const std::string& text);
std::string chart_to_dot(const Chart& chart);

}  // namespace erc
