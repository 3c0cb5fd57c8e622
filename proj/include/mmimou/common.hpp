// SPDX-License-Identifier: Apache-2.0
//
// mmimou - system-level simulator for massive MIMO in unlicensed indoor bands
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

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mmimou {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// Errors. All derive from std::runtime_error so callers can catch broadly.

/// Precoder construction hit a (numerically) rank-deficient channel matrix.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Not enough spatial degrees of freedom for the requested streams + nulls.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid scenario configuration (message names the offending field).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Broken caller contract (missing link, dimension mismatch, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// ----- dB helpers ---------------------------------------------------------

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// dBm -> mW
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
/// mW -> dBm
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }

}  // namespace mmimou
