#pragma once

#include <Eigen/Dense>

namespace rsde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using VectorCRef = Eigen::Ref<const Eigen::VectorXd>;
using VectorRef = Eigen::Ref<Eigen::VectorXd>;
using MatrixCRef = Eigen::Ref<const Eigen::MatrixXd>;
using MatrixRef = Eigen::Ref<Eigen::MatrixXd>;

}  // namespace rsde
