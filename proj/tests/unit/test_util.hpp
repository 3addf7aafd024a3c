#pragma once

#include <gtest/gtest.h>

#include "netmpc/channels.hpp"
#include "netmpc/error.hpp"
#include "netmpc/linalg.hpp"
#include "netmpc/model.hpp"
#include "support/properties.hpp"

namespace netmpc::testing {

using properties::random_matrix;
using properties::random_model;
using properties::random_spd;

inline void expect_matrix_near(const MatrixXd& a, const MatrixXd& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  if (a.size() == 0) return;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << "a =\n" << a << "\nb =\n" << b;
}

}  // namespace netmpc::testing
