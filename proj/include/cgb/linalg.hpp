#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

#include "cgb/errors.hpp"

namespace cgb::detail {

// Cholesky with jitter escalation: none, then 1e-10 up to 1e-6 by decades.
inline Eigen::LLT<Eigen::MatrixXd> jittered_cholesky(const Eigen::MatrixXd& a, const std::string& what) {
    static constexpr std::array<double, 6> kJitter{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    for (double j : kJitter) {
        Eigen::MatrixXd m = a;
        if (j > 0.0) m.diagonal().array() += j;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) return llt;
    }
    throw NumericalError(what + ": Cholesky failed after jitter escalation to 1e-6");
}

inline double llt_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace cgb::detail
