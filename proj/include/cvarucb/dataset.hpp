#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvarucb/model.hpp"

namespace cvarucb {

// The expert log: (action, reward) pairs with contexts deliberately absent.
struct ObservationalDataset {
  std::size_t num_arms = 0;
  RewardSupport support;
  struct Record {
    std::size_t action;
    double reward;
  };
  std::vector<Record> records;

  void push(std::size_t action, double reward) {
    if (action >= num_arms) throw std::invalid_argument("action index out of range");
    support.index_of(reward);  // throws if the value is not a declared level
    records.push_back({action, reward});
  }

  std::size_t size() const { return records.size(); }
};

inline ObservationalDataset sample_dataset(const ConfoundedModel& model, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("dataset size must be positive");
  ObservationalDataset ds;
  ds.num_arms = model.num_arms();
  ds.support = model.support();
  ds.records.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    ExpertStep step = sample_expert_step(model, rng);
    ds.records.push_back({step.action, step.reward});
  }
  return ds;
}

// Empirical frequencies of (x, y) pairs.
inline JointActionRewardTable joint_table(const ObservationalDataset& ds) {
  if (ds.records.empty()) throw std::invalid_argument("cannot build joint table from empty dataset");
  JointActionRewardTable table;
  table.num_arms = ds.num_arms;
  table.support = ds.support;
  table.entries.assign(ds.num_arms, std::vector<double>(ds.support.size(), 0.0));
  double w = 1.0 / static_cast<double>(ds.records.size());
  for (const auto& r : ds.records) table.entries[r.action][ds.support.index_of(r.reward)] += w;
  table.validate();
  return table;
}

// CSV format: header `t,x,y`, 0-based arm index, decimal reward level, LF endings.
inline void write_dataset_csv(const ObservationalDataset& ds, std::ostream& out) {
  out << "t,x,y\n";
  for (std::size_t t = 0; t < ds.records.size(); ++t)
    out << t << ',' << ds.records[t].action << ',' << ds.records[t].reward << '\n';
}

inline void write_dataset_csv(const ObservationalDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset_csv(ds, out);
}

inline ObservationalDataset read_dataset_csv(std::istream& in, std::size_t num_arms,
                                             const RewardSupport& support) {
  ObservationalDataset ds;
  ds.num_arms = num_arms;
  ds.support = support;
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y")
    throw std::runtime_error("dataset CSV missing `t,x,y` header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string t, x, y;
    if (!std::getline(ss, t, ',') || !std::getline(ss, x, ',') || !std::getline(ss, y, ','))
      throw std::runtime_error("malformed dataset row: " + line);
    ds.push(static_cast<std::size_t>(std::stoul(x)), std::stod(y));
  }
  return ds;
}

inline ObservationalDataset read_dataset_csv(const std::string& path, std::size_t num_arms,
                                             const RewardSupport& support) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset_csv(in, num_arms, support);
}

}  // namespace cvarucb
