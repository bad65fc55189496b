#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netalloc/allocate.hpp"
#include "netalloc/dynamics.hpp"
#include "netalloc/graph.hpp"

namespace netalloc {

// All reals in CSV output carry 12 significant digits.
std::string format_real(double v);

// Node-parameter file: rows `label,beta_lo,beta_hi,delta_lo,delta_hi`,
// `#` comments. Every graph node must appear exactly once.
std::vector<NodeBounds> load_params_file(const std::string& path,
                                         const WeightedDigraph& g);

// Sampled cost curves: rows `label,rate,cost`. Returns per-label samples in
// file order.
std::map<std::string, std::vector<std::pair<double, double>>>
load_cost_samples(const std::string& path);

// Default cost model with optional per-node sampled overrides, fitted via
// fit_posynomial (vaccination curves in beta, antidote curves in t=1-delta).
CostModel build_cost_model(
    const WeightedDigraph& g, const std::vector<NodeBounds>& bounds,
    const std::map<std::string, std::vector<std::pair<double, double>>>& vax_samples,
    const std::map<std::string, std::vector<std::pair<double, double>>>& antidote_samples);

void write_allocation_csv(const std::string& path, const WeightedDigraph& g,
                          const Allocation& a);
void write_scatter_files(const std::string& dir, const WeightedDigraph& g,
                         const Allocation& a);
void write_trajectory_csv(const std::string& path, const WeightedDigraph& g,
                          const Trajectory& t);

// summary.json payload for an allocation run.
std::string allocation_summary_json(const Allocation& a, const std::string& kind,
                                    std::optional<double> eps_bar,
                                    std::optional<double> budget);

// Reproducibility manifest: resolved inputs (path + content hash),
// tolerances, seed, versions.
struct ManifestEntry {
    std::string key;
    std::string value;
};
std::string manifest_json(const std::string& command,
                          const std::vector<ManifestEntry>& entries,
                          const std::vector<std::string>& input_files);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace netalloc
