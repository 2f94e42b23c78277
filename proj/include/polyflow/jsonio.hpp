#pragma once

#include <string>
#include <vector>

#include "polyflow/dataset.hpp"
#include "polyflow/grid.hpp"
#include "polyflow/mlp.hpp"
#include "polyflow/pwl.hpp"
#include "polyflow/scenario.hpp"

namespace polyflow::io {

grid::RadialNetwork load_network(const std::string& path);
void save_network(const grid::RadialNetwork& net, const std::string& path);

scen::Scenario load_scenario(const std::string& path);
void save_scenario(const scen::Scenario& sc, const std::string& path);

nn::MlpParams load_mlp(const std::string& path);
void save_mlp(const nn::MlpParams& p, const std::string& path);

void save_dataset_csv(const std::vector<data::Sample>& samples, const std::string& path);
std::vector<data::Sample> load_dataset_csv(const std::string& path);

data::DomainBox load_domain_box(const std::string& path);
void save_domain_box(const data::DomainBox& box, const std::string& path);

// Region files always carry raw-frame geometry.
struct RegionRecord {
  std::string pattern;
  pwl::Polytope poly;
  Vec affine_w;
  double affine_b = 0.0;
  long sample_count = 0;
  int rows_removed = -1;  // -1 when the region has not been simplified
  Vec witness;            // empty when unknown
};

std::vector<RegionRecord> load_regions(const std::string& path);
void save_regions(const std::vector<RegionRecord>& regions, const std::string& path);

void save_schedule_csv(const scen::Schedule& sched, const std::string& path);
scen::Schedule load_schedule_csv(const std::string& path);

// Deterministic text for a double (round-trip precision).
std::string format_double(double v);

}  // namespace polyflow::io
