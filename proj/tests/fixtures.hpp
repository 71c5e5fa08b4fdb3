#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ipp/objective.hpp"
#include "ipp/world.hpp"

namespace ipp::test {

struct SmallFixture {
  Instance instance;
  Budget budget;
};

inline const SensorConfig kFixtureSensor{32, 12.0};

/// The 20 shipped brute-forceable instances (|V| <= 8, T <= 4).
inline std::vector<SmallFixture> load_small_fixtures() {
  const std::string dir = IPP_FIXTURE_DIR;
  const std::vector<Instance> data = load_dataset(dir + "/small_instances.ipd");
  std::ifstream in(dir + "/small_budgets.txt");
  std::vector<SmallFixture> out;
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    Budget b;
    std::istringstream(line) >> b.travel >> b.horizon;
    out.push_back({data.at(i++), b});
  }
  return out;
}

}  // namespace ipp::test
