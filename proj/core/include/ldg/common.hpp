#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ldg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error taxonomy. Every throwing contract in the library maps onto one of
// these so callers (and the CLI) can translate failures into exit codes.
struct argument_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct consistency_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct training_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw argument_error(msg);
}

}  // namespace ldg
