#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fgc/synthetic.hpp"

// Text formats shared by the CLI and the test harness.
//   dataset dir:  graph.txt (edge list), labels.txt, signals.csv
//   labels.txt:   header "node cluster group", 1-based rows
//   signals.csv:  header n1..nN, one row per node, N columns
//   config:       "key = value" lines, [section] headers, # comments

namespace fgc {

struct Dataset {
  Eigen::MatrixXd x;               // observed signals, D x N
  std::vector<int> clusters;       // 0-based; empty when unknown
  std::vector<int> groups;         // 0-based
  Eigen::VectorXd w_true;          // packed ground-truth weights; may be empty
  Eigen::Index num_nodes = 0;
  int num_clusters = 0;
  int num_groups = 0;
};

void write_labels(std::ostream& out, const std::vector<int>& clusters,
                  const std::vector<int>& groups);
void read_labels(std::istream& in, std::vector<int>& clusters,
                 std::vector<int>& groups);

void write_signals_csv(std::ostream& out, const Eigen::MatrixXd& x);
Eigen::MatrixXd read_signals_csv(std::istream& in);

void write_dataset(const std::string& dir, const GroundTruth& gt,
                   const SignalSample& sig);
Dataset read_dataset(const std::string& dir);

// Flat map; keys inside [section] become "section.key".
std::map<std::string, std::string> parse_config(std::istream& in);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Shortest decimal that round-trips a double (17 significant digits).
std::string format_double(double v);

}  // namespace fgc
