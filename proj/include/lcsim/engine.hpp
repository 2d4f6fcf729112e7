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

#ifndef LCSIM_ENGINE_HPP
#define LCSIM_ENGINE_HPP

#include "lcsim/compensation.hpp"

#include <optional>

namespace lcsim {

enum class CoarseMode { trotter, exact };

inline const char *to_string(CoarseMode m) { return m == CoarseMode::exact ? "exact" : "trotter"; }

inline CoarseMode coarse_mode_from_string(std::string_view s) {
    if (s == "exact") {
        return CoarseMode::exact;
    }
    if (s == "trotter") {
        return CoarseMode::trotter;
    }
    throw std::invalid_argument("unknown coarse mode '" + std::string(s) + "'");
}

/// @brief Dense density matrix plus the accumulated log of renormalization factors.
struct DensityState {
    int n = 0;
    Matrix mat;
    double log_renorm = 0;

    DensityState() = default;
    explicit DensityState(Matrix m) : n(qubits_of_dimension(m.rows())), mat(std::move(m)) {}

    /// |b><b| with b[q] the bit of qubit q.
    static DensityState basis(std::string_view bits) {
        int n = static_cast<int>(bits.size());
        if (n > kDenseLimit) {
            throw std::invalid_argument("DensityState: register exceeds the dense limit");
        }
        uint64_t idx = 0;
        for (int q = 0; q < n; q++) {
            if (bits[q] == '1') {
                idx |= uint64_t{1} << q;
            } else if (bits[q] != '0') {
                throw std::invalid_argument("DensityState: basis label must be 0/1");
            }
        }
        size_t d = size_t{1} << n;
        Matrix m = Matrix::Zero(d, d);
        m(idx, idx) = 1;
        return DensityState(std::move(m));
    }

    cplx trace() const { return mat.trace(); }
    double expectation(const Matrix &o) const { return trace_product(mat, o).real(); }
    double hermiticity_defect() const { return max_abs(mat - mat.adjoint()); }
};

/// @brief First-order Trotter circuit S(tau) for a Hamiltonian, terms applied in insertion order.
///
/// Adjacent diagonal factors commute and are fused into a single phase vector.
class TrotterCircuit {
   public:
    TrotterCircuit() = default;
    TrotterCircuit(const PauliSum &h, double tau) : n_(h.num_qubits()) {
        size_t d = size_t{1} << n_;
        for (auto &[p, c] : h.terms()) {
            double theta = c.real() * tau;
            if (p.is_diagonal()) {
                if (blocks_.empty() || !blocks_.back().diag) {
                    blocks_.push_back({std::vector<cplx>(d, 1.0), std::nullopt});
                }
                auto &u = *blocks_.back().diag;
                double cs = std::cos(theta), sn = std::sin(theta);
                for (size_t i = 0; i < d; i++) {
                    u[i] *= (std::popcount(p.z() & i) & 1) ? cplx(cs, sn) : cplx(cs, -sn);
                }
            } else {
                blocks_.push_back({std::nullopt, PauliRotation(p, theta)});
            }
        }
    }

    int num_qubits() const { return n_; }

    void apply(Matrix &rho) const {
        for (auto &b : blocks_) {
            if (b.diag) {
                const auto &u = *b.diag;
                const Eigen::Index d = rho.rows();
                for (Eigen::Index j = 0; j < d; j++) {
                    cplx uj = std::conj(u[j]);
                    for (Eigen::Index i = 0; i < d; i++) {
                        rho(i, j) *= u[i] * uj;
                    }
                }
            } else {
                b.rot->apply(rho);
            }
        }
    }

    /// f_r ... f_1
    Matrix unitary() const {
        size_t d = size_t{1} << n_;
        Matrix u = Matrix::Identity(d, d);
        for (auto &b : blocks_) {
            if (b.diag) {
                for (size_t i = 0; i < d; i++) {
                    u.row(i) *= (*b.diag)[i];
                }
            } else {
                u = b.rot->dense() * u;
            }
        }
        return u;
    }

   private:
    struct Block {
        std::optional<std::vector<cplx>> diag;
        std::optional<PauliRotation> rot;
    };
    int n_ = 0;
    std::vector<Block> blocks_;
};

inline void trotter_H_step(DensityState &rho, const PauliSum &h, double tau) { TrotterCircuit(h, tau).apply(rho.mat); }

/// @brief Exact unitary conjugation rho -> e^{-iH tau} rho e^{iH tau}.
class ExactUnitaryStep {
   public:
    ExactUnitaryStep() = default;
    ExactUnitaryStep(const PauliSum &h, double tau) : u_(expm(cplx(0, -tau) * h.dense())) {}
    void apply(Matrix &rho) const { rho = u_ * rho * u_.adjoint(); }
    const Matrix &unitary() const { return u_; }

   private:
    Matrix u_;
};

/// Restricts a Pauli string to the listed qubits (local bit k = qubits[k]).
inline PauliString restrict_to(const PauliString &p, const std::vector<int> &qubits) {
    uint64_t x = 0, z = 0;
    for (size_t k = 0; k < qubits.size(); k++) {
        x |= ((p.x() >> qubits[k]) & 1) << k;
        z |= ((p.z() >> qubits[k]) & 1) << k;
    }
    return PauliString(static_cast<int>(qubits.size()), x, z);
}

/// @brief Ancilla-dilated dissipative step: attach |0><0|, evolve under e^{-i J sqrt(tau)}, trace out.
///
/// The unitary is formed on the support of D plus the ancilla only. Without a
/// compensation term the step reduces to the two Kraus operators <0|U|0> and <1|U|0>.
class DilatedChannel {
   public:
    DilatedChannel() = default;
    DilatedChannel(const PauliSum &d, double tau, CoarseMode mode) : n_(d.num_qubits()) {
        PauliSum j = dilation_operator(d);
        if (j.empty() || tau == 0) {
            trivial_ = true;
            return;
        }
        uint64_t mask = 0;
        for (auto &[p, c] : d.terms()) {
            mask |= p.x() | p.z();
        }
        std::vector<int> sys;
        for (int q = 0; q < n_; q++) {
            if ((mask >> q) & 1) {
                sys.push_back(q);
            }
        }
        std::vector<int> all = sys;
        all.push_back(n_);
        PauliSum jl(static_cast<int>(all.size()));
        for (auto &[p, c] : j.terms()) {
            jl.add(restrict_to(p, all), c);
        }
        double s = std::sqrt(tau);
        Matrix u;
        if (mode == CoarseMode::exact) {
            u = expm(cplx(0, -s) * jl.dense());
        } else {
            u = TrotterCircuit(jl, s).unitary();
        }
        Eigen::Index ds = Eigen::Index{1} << sys.size();
        k0_ = LocalOp(n_, sys, u.topLeftCorner(ds, ds));
        k1_ = LocalOp(n_, sys, u.block(ds, 0, ds, ds));
        u_ = LocalOp(n_ + 1, all, u);
    }

    bool trivial() const { return trivial_; }

    void apply(Matrix &rho) const {
        if (trivial_) {
            return;
        }
        Matrix r1 = rho;
        k0_.conjugate(rho);
        k1_.conjugate(r1);
        rho += r1;
    }

    /// Dilates, evolves, applies a term on the (n+1)-qubit register, then traces the ancilla.
    void apply_with_term(Matrix &rho, const PauliConjugateTerm &t) const {
        Eigen::Index d = rho.rows();
        Matrix dil = Matrix::Zero(2 * d, 2 * d);
        dil.topLeftCorner(d, d) = rho;
        if (!trivial_) {
            u_.conjugate(dil);
        }
        apply_term(t, dil);
        rho = dil.topLeftCorner(d, d) + dil.bottomRightCorner(d, d);
    }

    /// Runs an arbitrary map on the dilated register, for expected-value evaluation.
    template <typename F>
    void apply_with_map(Matrix &rho, F &&map) const {
        Eigen::Index d = rho.rows();
        Matrix dil = Matrix::Zero(2 * d, 2 * d);
        dil.topLeftCorner(d, d) = rho;
        if (!trivial_) {
            u_.conjugate(dil);
        }
        map(dil);
        rho = dil.topLeftCorner(d, d) + dil.bottomRightCorner(d, d);
    }

   private:
    int n_ = 0;
    bool trivial_ = false;
    LocalOp k0_, k1_, u_;
};

inline void dilated_D_step(DensityState &rho, const PauliSum &d, double tau, CoarseMode mode) {
    DilatedChannel(d, tau, mode).apply(rho.mat);
}

/// rho <- unvec(expm(tau S) vec(rho)).
inline void exact_step(DensityState &rho, const ChiMap &generator, double tau) {
    Matrix s = to_dense_superop(generator);
    Eigen::VectorXcd v = expm(tau * s) * vec(rho.mat);
    rho.mat = unvec(v);
}

}  // namespace lcsim

#endif
