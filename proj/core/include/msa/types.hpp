#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace msa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Task { regression, classification };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

}  // namespace msa
