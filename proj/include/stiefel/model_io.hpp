#pragma once

#include "stiefel/model.hpp"

#include <string>

namespace stiefel {

// Numeric CSV with an optional header row; throws std::runtime_error with
// the offending row number on ragged input.
Eigen::MatrixXd load_csv_matrix(const std::string& path);

// Rows are observations, columns are dimensions.
PpcaData load_ppca_csv(const std::string& path);

// Auto-detects by column count: two columns are read as an edge list
// (0- or 1-based node ids), anything else as a dense 0/1 adjacency
// matrix, which must be square and symmetric.
NetworkData load_network_file(const std::string& path);

}  // namespace stiefel
