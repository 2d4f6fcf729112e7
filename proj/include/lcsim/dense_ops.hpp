// Copyright 2026 The lcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LCSIM_DENSE_OPS_HPP
#define LCSIM_DENSE_OPS_HPP

#include "lcsim/pauli.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace lcsim {

/// Returns c * P_a rho P_b.
inline Matrix pauli_sandwich(const Matrix &rho, const PauliString &a, const PauliString &b, cplx c = 1.0) {
    const Eigen::Index d = rho.rows();
    const uint64_t xa = a.x(), xb = b.x();
    auto pa = a.phase_table();
    auto pb = b.phase_table();
    Matrix out(d, d);
    for (Eigen::Index j = 0; j < d; j++) {
        const uint64_t sj = static_cast<uint64_t>(j) ^ xb;
        const cplx cj = c * pb[j];
        for (Eigen::Index i = 0; i < d; i++) {
            const uint64_t si = static_cast<uint64_t>(i) ^ xa;
            out(i, j) = cj * pa[si] * rho(si, sj);
        }
    }
    return out;
}

/// out += c * P_a rho P_b.
inline void add_pauli_sandwich(Matrix &out, const Matrix &rho, const PauliString &a, const PauliString &b, cplx c) {
    const Eigen::Index d = rho.rows();
    const uint64_t xa = a.x(), xb = b.x();
    auto pa = a.phase_table();
    auto pb = b.phase_table();
    for (Eigen::Index j = 0; j < d; j++) {
        const uint64_t sj = static_cast<uint64_t>(j) ^ xb;
        const cplx cj = c * pb[j];
        for (Eigen::Index i = 0; i < d; i++) {
            const uint64_t si = static_cast<uint64_t>(i) ^ xa;
            out(i, j) += cj * pa[si] * rho(si, sj);
        }
    }
}

/// @brief rho -> e^{-i theta P} rho e^{+i theta P}, for a precomputed P.
class PauliRotation {
   public:
    PauliRotation(const PauliString &p, double theta) : p_(p), c_(std::cos(theta)), s_(std::sin(theta)) {
        auto ph = p.phase_table();
        size_t d = ph.size();
        left_.resize(d);
        right_.resize(d);
        for (size_t i = 0; i < d; i++) {
            left_[i] = cplx(0, -s_) * ph[i ^ p.x()];
            right_[i] = cplx(0, s_) * ph[i];
        }
    }

    const PauliString &pauli() const { return p_; }

    void apply(Matrix &rho) const {
        const Eigen::Index d = rho.rows();
        const uint64_t x = p_.x();
        if (x == 0) {
            // Diagonal: U = diag(c + left_[i]).
            for (Eigen::Index j = 0; j < d; j++) {
                cplx uj = std::conj(cplx(c_, 0) + left_[j]);
                for (Eigen::Index i = 0; i < d; i++) {
                    rho(i, j) *= (c_ + left_[i]) * uj;
                }
            }
            return;
        }
        // Left: (U rho)(i, j) = c rho(i, j) + left_[i] rho(i ^ x, j).
        for (Eigen::Index j = 0; j < d; j++) {
            cplx *col = rho.col(j).data();
            for (uint64_t i = 0; i < static_cast<uint64_t>(d); i++) {
                uint64_t k = i ^ x;
                if (k < i) {
                    continue;
                }
                cplx a = col[i], b = col[k];
                col[i] = c_ * a + left_[i] * b;
                col[k] = c_ * b + left_[k] * a;
            }
        }
        // Right: (rho U^dag)(i, j) = c rho(i, j) + right_[j] rho(i, j ^ x).
        for (uint64_t j = 0; j < static_cast<uint64_t>(d); j++) {
            uint64_t l = j ^ x;
            if (l < j) {
                continue;
            }
            cplx *cj = rho.col(j).data();
            cplx *cl = rho.col(l).data();
            const cplx rj = right_[j], rl = right_[l];
            for (Eigen::Index i = 0; i < d; i++) {
                cplx a = cj[i], b = cl[i];
                cj[i] = c_ * a + rj * b;
                cl[i] = c_ * b + rl * a;
            }
        }
    }

    /// cos(theta) I - i sin(theta) P as a dense matrix.
    Matrix dense() const {
        size_t d = left_.size();
        Matrix u = c_ * Matrix::Identity(d, d);
        u += cplx(0, -s_) * p_.dense();
        return u;
    }

   private:
    PauliString p_;
    double c_, s_;
    std::vector<cplx> left_, right_;
};

/// @brief A dense operator acting on a subset of qubits of a larger register.
///
/// Local index bit k corresponds to register qubit qubits[k].
class LocalOp {
   public:
    LocalOp() = default;
    LocalOp(int n, std::vector<int> qubits, Matrix m) : n_(n), qubits_(std::move(qubits)), m_(std::move(m)) {
        size_t s = qubits_.size();
        size_t ds = size_t{1} << s;
        if (static_cast<size_t>(m_.rows()) != ds || static_cast<size_t>(m_.cols()) != ds) {
            throw std::invalid_argument("LocalOp: matrix size does not match support");
        }
        uint64_t mask = 0;
        for (int q : qubits_) {
            mask |= uint64_t{1} << q;
        }
        offsets_.resize(ds);
        for (size_t k = 0; k < ds; k++) {
            uint64_t off = 0;
            for (size_t b = 0; b < s; b++) {
                if ((k >> b) & 1) {
                    off |= uint64_t{1} << qubits_[b];
                }
            }
            offsets_[k] = off;
        }
        uint64_t d = uint64_t{1} << n_;
        for (uint64_t r = 0; r < d; r++) {
            if ((r & mask) == 0) {
                bases_.push_back(r);
            }
        }
    }

    const Matrix &matrix() const { return m_; }
    const std::vector<int> &qubits() const { return qubits_; }

    /// rho <- m rho m^dag (or with `right` in place of the trailing m).
    void conjugate(Matrix &rho) const { conjugate(rho, *this); }
    void conjugate(Matrix &rho, const LocalOp &right) const {
        apply_left(rho);
        right.apply_right_adjoint(rho);
    }

    /// rho <- m rho
    void apply_left(Matrix &rho) const {
        const Eigen::Index ds = m_.rows();
        const Eigen::Index d = rho.cols();
        Matrix tmp(ds, d), res(ds, d);
        for (uint64_t r : bases_) {
            for (Eigen::Index k = 0; k < ds; k++) {
                tmp.row(k) = rho.row(static_cast<Eigen::Index>(r | offsets_[k]));
            }
            res.noalias() = m_ * tmp;
            for (Eigen::Index k = 0; k < ds; k++) {
                rho.row(static_cast<Eigen::Index>(r | offsets_[k])) = res.row(k);
            }
        }
    }

    /// rho <- rho m^dag
    void apply_right_adjoint(Matrix &rho) const {
        const Eigen::Index ds = m_.rows();
        const Eigen::Index d = rho.rows();
        Matrix tmp(d, ds), res(d, ds);
        for (uint64_t r : bases_) {
            for (Eigen::Index k = 0; k < ds; k++) {
                tmp.col(k) = rho.col(static_cast<Eigen::Index>(r | offsets_[k]));
            }
            res.noalias() = tmp * m_.adjoint();
            for (Eigen::Index k = 0; k < ds; k++) {
                rho.col(static_cast<Eigen::Index>(r | offsets_[k])) = res.col(k);
            }
        }
    }

   private:
    int n_ = 0;
    std::vector<int> qubits_;
    Matrix m_;
    std::vector<uint64_t> offsets_;
    std::vector<uint64_t> bases_;
};

/// Matrix exponential (scaling and squaring, Eigen MatrixFunctions).
inline Matrix expm(const Matrix &a) { return a.exp(); }

/// Tr(A B) without forming the product.
inline cplx trace_product(const Matrix &a, const Matrix &b) { return (a.array() * b.transpose().array()).sum(); }

/// max_ij |a_ij|
inline double max_abs(const Matrix &a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace lcsim

#endif
