#include "fgc/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fgc/graph.hpp"

namespace fgc {

using Eigen::Index;

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_labels(std::ostream& out, const std::vector<int>& clusters,
                  const std::vector<int>& groups) {
  if (clusters.size() != groups.size())
    throw std::invalid_argument("write_labels: size mismatch");
  out << "node cluster group\n";
  for (std::size_t i = 0; i < clusters.size(); ++i)
    out << i + 1 << " " << clusters[i] + 1 << " " << groups[i] + 1 << "\n";
  if (!out) throw std::runtime_error("write_labels: stream failure");
}

void read_labels(std::istream& in, std::vector<int>& clusters,
                 std::vector<int>& groups) {
  std::string header;
  if (!std::getline(in, header) || header != "node cluster group")
    throw std::runtime_error("read_labels: bad header");
  clusters.clear();
  groups.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long node = 0, cluster = 0, group = 0;
    if (!(ls >> node >> cluster >> group))
      throw std::runtime_error("read_labels: malformed line '" + line + "'");
    if (node != static_cast<long long>(clusters.size()) + 1)
      throw std::runtime_error("read_labels: nodes must be 1..D in order");
    if (cluster < 1 || group < 1)
      throw std::runtime_error("read_labels: labels are 1-based");
    clusters.push_back(static_cast<int>(cluster - 1));
    groups.push_back(static_cast<int>(group - 1));
  }
  if (clusters.empty()) throw std::runtime_error("read_labels: no rows");
}

void write_signals_csv(std::ostream& out, const Eigen::MatrixXd& x) {
  const Index n = x.cols();
  for (Index j = 0; j < n; ++j) out << (j ? "," : "") << "n" << j + 1;
  out << "\n";
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < n; ++j)
      out << (j ? "," : "") << format_double(x(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_signals_csv: stream failure");
}

Eigen::MatrixXd read_signals_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_signals_csv: empty file");
  Index n = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      if (cell != "n" + std::to_string(n + 1))
        throw std::runtime_error("read_signals_csv: bad header cell '" + cell + "'");
      ++n;
    }
  }
  if (n < 1) throw std::runtime_error("read_signals_csv: empty header");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(n));
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<Index>(row.size()) != n)
      throw std::runtime_error("read_signals_csv: ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("read_signals_csv: no data rows");
  Eigen::MatrixXd x(static_cast<Index>(rows.size()), n);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < n; ++j)
      x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return x;
}

void write_dataset(const std::string& dir, const GroundTruth& gt,
                   const SignalSample& sig) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "graph.txt");
    write_graph(out, gt.w, gt.num_nodes);
  }
  {
    std::ofstream out(fs::path(dir) / "labels.txt");
    write_labels(out, gt.clusters, gt.groups);
  }
  {
    std::ofstream out(fs::path(dir) / "signals.csv");
    write_signals_csv(out, sig.x);
  }
}

Dataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset ds;
  {
    std::ifstream in(fs::path(dir) / "signals.csv");
    if (!in) throw std::runtime_error("read_dataset: missing signals.csv in " + dir);
    ds.x = read_signals_csv(in);
    ds.num_nodes = ds.x.rows();
  }
  {
    std::ifstream in(fs::path(dir) / "labels.txt");
    if (!in) throw std::runtime_error("read_dataset: missing labels.txt in " + dir);
    read_labels(in, ds.clusters, ds.groups);
    if (static_cast<Index>(ds.clusters.size()) != ds.num_nodes)
      throw std::runtime_error("read_dataset: labels/signals node count mismatch");
    for (int c : ds.clusters) ds.num_clusters = std::max(ds.num_clusters, c + 1);
    for (int g : ds.groups) ds.num_groups = std::max(ds.num_groups, g + 1);
  }
  {
    std::ifstream in(fs::path(dir) / "graph.txt");
    if (in) {
      auto [w, d] = read_graph(in);
      if (d != ds.num_nodes)
        throw std::runtime_error("read_dataset: graph/signals node count mismatch");
      ds.w_true = std::move(w);
    }
  }
  return ds;
}

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line, section;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace fgc
