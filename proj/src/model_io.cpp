#include "stiefel/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stiefel {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    return used == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

Eigen::MatrixXd load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool header_checked = false;
  std::size_t width = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);

    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }

    if (!numeric) {
      if (!header_checked && rows.empty()) {
        header_checked = true;  // treat the first non-numeric row as a header
        continue;
      }
      throw std::runtime_error(path + ": non-numeric value at row " + std::to_string(line_no));
    }
    header_checked = true;

    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw std::runtime_error(path + ": ragged row " + std::to_string(line_no) + " (expected " +
                               std::to_string(width) + " fields, got " +
                               std::to_string(row.size()) + ")");
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

PpcaData load_ppca_csv(const std::string& path) {
  return ppca_data_from_observations(load_csv_matrix(path));
}

NetworkData load_network_file(const std::string& path) {
  const Eigen::MatrixXd raw = load_csv_matrix(path);

  NetworkData out;
  if (raw.cols() == 2 && raw.rows() != 2) {
    // edge list
    int max_id = 0;
    int min_id = std::numeric_limits<int>::max();
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      for (int c = 0; c < 2; ++c) {
        const double v = raw(r, c);
        const int id = static_cast<int>(std::llround(v));
        if (std::abs(v - id) > 1e-9 || id < 0) {
          throw std::runtime_error(path + ": edge list ids must be nonnegative integers");
        }
        max_id = std::max(max_id, id);
        min_id = std::min(min_id, id);
      }
    }
    const int offset = min_id >= 1 ? 1 : 0;  // accept 0- or 1-based ids
    out.n_nodes = max_id - offset + 1;
    out.adjacency = Eigen::MatrixXi::Zero(out.n_nodes, out.n_nodes);
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      const int a = static_cast<int>(std::llround(raw(r, 0))) - offset;
      const int b = static_cast<int>(std::llround(raw(r, 1))) - offset;
      if (a == b) continue;
      out.adjacency(a, b) = 1;
      out.adjacency(b, a) = 1;
    }
    return out;
  }

  if (raw.rows() != raw.cols()) {
    throw std::runtime_error(path + ": adjacency matrix must be square");
  }
  const int n = static_cast<int>(raw.rows());
  out.n_nodes = n;
  out.adjacency = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = raw(i, j);
      if (v != 0.0 && v != 1.0) {
        throw std::runtime_error(path + ": adjacency entries must be 0 or 1");
      }
      out.adjacency(i, j) = static_cast<int>(v);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (out.adjacency(i, j) != out.adjacency(j, i)) {
        throw std::runtime_error(path + ": adjacency matrix is not symmetric");
      }
    }
  }
  return out;
}

}  // namespace stiefel
