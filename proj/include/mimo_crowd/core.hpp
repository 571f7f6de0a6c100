// SPDX-License-Identifier: Apache-2.0
//
// mimo_crowd: user identification and channel estimation for crowded
// massive-MIMO uplink over Rician fading
// Copyright (C) 2026 The mimo_crowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MIMO_CROWD_CORE_HPP
#define MIMO_CROWD_CORE_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mimo_crowd {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

// Error categories. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly.

struct capacity_exceeded : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct not_identified : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_estimate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ill_conditioned : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string &msg)
{
    if (!cond)
        throw std::invalid_argument(msg);
}

} // namespace mimo_crowd

#endif
