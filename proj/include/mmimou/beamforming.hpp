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

#include <algorithm>
#include <limits>
#include <vector>

#include "mmimou/common.hpp"

namespace mmimou {

/// Linear precoder of one transmitter. Column k of W carries stream k, which
/// is intended for user_map[k] (empty when the caller does not track users).
struct PrecoderSet {
  CMatrix W;
  std::vector<int> user_map;
  double zeta = 1.0;  // squared Frobenius norm before normalization

  Eigen::Index streams() const { return W.cols(); }
};

/// Eigen-decomposition of a received covariance, split into the N dominant
/// directions and their orthogonal complement.
struct CovarianceSubspace {
  RVector eigenvalues;   // non-increasing
  CMatrix eigenvectors;  // unitary, column i pairs with eigenvalues(i)
  int n_dominant = 0;

  Eigen::Index dim() const { return eigenvectors.rows(); }
  /// Columns u_1..u_N.
  CMatrix dominant() const { return eigenvectors.leftCols(n_dominant); }
  /// Columns u_{N+1}..u_M.
  CMatrix complement() const { return eigenvectors.rightCols(dim() - n_dominant); }
};

namespace detail {

// Below this reciprocal condition number of the Gram matrix the channel is
// treated as rank deficient.
inline constexpr double kMinGramRcond = 1e-13;

inline CMatrix zf_unnormalized(const CMatrix& H) {
  const CMatrix gram = H.adjoint() * H;
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kMinGramRcond))
    throw SingularError("zero-forcing: channel matrix is rank deficient");
  return H * llt.solve(CMatrix::Identity(gram.rows(), gram.cols()));
}

}  // namespace detail

inline PrecoderSet matched_filter(const CVector& h) {
  const double n = h.norm();
  if (!(n > 0.0)) throw std::invalid_argument("matched_filter: zero channel vector");
  PrecoderSet p;
  p.W = h / n;
  p.zeta = 1.0;
  return p;
}

/// W = H (H^H H)^-1 / sqrt(zeta) with ||W||_F = 1. Columns of `H_bar` are the
/// user channels h_k such that user k receives h_k^H W s.
inline PrecoderSet zf_precoder(const CMatrix& H_bar) {
  if (H_bar.cols() == 0) throw std::invalid_argument("zf_precoder: no users");
  if (H_bar.cols() > H_bar.rows())
    throw CapabilityError("zf_precoder: more streams than antennas");
  PrecoderSet p;
  p.W = detail::zf_unnormalized(H_bar);
  p.zeta = p.W.squaredNorm();
  p.W /= std::sqrt(p.zeta);
  return p;
}

/// Zero-forcing over the augmented matrix [H_users U_null]; only the K user
/// columns are kept and renormalized, so every stream is orthogonal to each
/// nulled direction.
inline PrecoderSet zf_with_nulls(const CMatrix& H_users, const CMatrix& U_null) {
  const Eigen::Index k = H_users.cols();
  const Eigen::Index n = U_null.cols();
  if (k == 0) throw std::invalid_argument("zf_with_nulls: no users");
  if (n > 0 && U_null.rows() != H_users.rows())
    throw ContractError("zf_with_nulls: null directions do not match antenna count");
  if (k + n > H_users.rows())
    throw CapabilityError("zf_with_nulls: streams plus nulls exceed antenna count");

  CMatrix H_tilde(H_users.rows(), k + n);
  H_tilde << H_users, U_null;
  PrecoderSet p;
  p.W = detail::zf_unnormalized(H_tilde).leftCols(k);
  p.zeta = p.W.squaredNorm();
  p.W /= std::sqrt(p.zeta);
  return p;
}

/// Index of the user column with the smallest residual norm after projection
/// onto the orthogonal complement of all other columns (users and nulls).
/// This is the user to drop when the augmented matrix is rank deficient.
inline Eigen::Index weakest_user_column(const CMatrix& H_users, const CMatrix& U_null) {
  const Eigen::Index k = H_users.cols();
  Eigen::Index worst = 0;
  double worst_res = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < k; ++c) {
    CMatrix others(H_users.rows(), k - 1 + U_null.cols());
    Eigen::Index o = 0;
    for (Eigen::Index j = 0; j < k; ++j)
      if (j != c) others.col(o++) = H_users.col(j);
    for (Eigen::Index j = 0; j < U_null.cols(); ++j) others.col(o++) = U_null.col(j);
    double res = H_users.col(c).norm();
    if (others.cols() > 0) {
      Eigen::ColPivHouseholderQR<CMatrix> qr(others);
      const CMatrix Q = qr.householderQ() * CMatrix::Identity(others.rows(), qr.rank());
      res = (H_users.col(c) - Q * (Q.adjoint() * H_users.col(c))).norm();
    }
    if (res < worst_res) {
      worst_res = res;
      worst = c;
    }
  }
  return worst;
}

/// Full Hermitian eigen-decomposition sorted in decreasing eigenvalue order.
inline CovarianceSubspace dominant_subspace(const CMatrix& Z, int n_dominant) {
  if (Z.rows() != Z.cols()) throw std::invalid_argument("dominant_subspace: Z is not square");
  if ((Z - Z.adjoint()).norm() > 1e-8 * Z.norm())
    throw std::invalid_argument("dominant_subspace: Z is not Hermitian");
  if (n_dominant < 0 || n_dominant > Z.rows())
    throw std::invalid_argument("dominant_subspace: N out of range");

  Eigen::SelfAdjointEigenSolver<CMatrix> es(Z);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dominant_subspace: eigen-decomposition failed");
  CovarianceSubspace s;
  s.eigenvalues = es.eigenvalues().reverse();
  s.eigenvectors = es.eigenvectors().rowwise().reverse();
  s.n_dominant = n_dominant;
  return s;
}

/// ||Sigma Sigma^H z||^2 with Sigma the complement of the dominant directions.
inline double residual_power(const CovarianceSubspace& sub, const CVector& z) {
  if (z.size() != sub.dim()) throw ContractError("residual_power: dimension mismatch");
  const CMatrix sigma = sub.complement();
  return (sigma * (sigma.adjoint() * z)).squaredNorm();
}

/// Sum of residual_power over the columns of `Z_cols` (one column per stream).
inline double residual_power(const CovarianceSubspace& sub, const CMatrix& Z_cols) {
  if (Z_cols.rows() != sub.dim()) throw ContractError("residual_power: dimension mismatch");
  const CMatrix sigma = sub.complement();
  return (sigma * (sigma.adjoint() * Z_cols)).squaredNorm();
}

}  // namespace mmimou
