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

#ifndef LCSIM_SUPEROP_HPP
#define LCSIM_SUPEROP_HPP

#include "lcsim/dense_ops.hpp"

#include <functional>
#include <map>
#include <optional>
#include <tuple>

namespace lcsim {

inline constexpr int kSuperopLimit = 4;

/// @brief Process matrix of a superoperator: E[rho] = sum chi_ab P_a rho P_b.
///
/// Entries live in an ordered map so iteration, and hence sampling tables
/// built from it, is reproducible.
class ChiMap {
   public:
    using Key = std::pair<PauliString, PauliString>;

    explicit ChiMap(int n = 0) : n_(n) {}

    static ChiMap identity(int n) {
        ChiMap m(n);
        m.add(PauliString::identity(n), PauliString::identity(n), 1.0);
        return m;
    }

    /// rho -> A rho B^dag
    static ChiMap left_right(const PauliSum &a, const PauliSum &b) {
        if (a.num_qubits() != b.num_qubits()) {
            throw std::invalid_argument("ChiMap::left_right: qubit count mismatch");
        }
        ChiMap m(a.num_qubits());
        for (auto &ta : a.terms()) {
            for (auto &tb : b.terms()) {
                m.add(ta.first, tb.first, ta.second * std::conj(tb.second));
            }
        }
        m.prune();
        return m;
    }

    int num_qubits() const { return n_; }
    const std::map<Key, cplx> &entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    void add(const PauliString &a, const PauliString &b, cplx c) {
        if (a.num_qubits() != n_ || b.num_qubits() != n_) {
            throw std::invalid_argument("ChiMap::add: qubit count mismatch");
        }
        entries_[{a, b}] += c;
    }

    cplx at(const PauliString &a, const PauliString &b) const {
        auto it = entries_.find({a, b});
        return it == entries_.end() ? cplx{0, 0} : it->second;
    }

    ChiMap &prune(double threshold = kPruneThreshold) {
        std::erase_if(entries_, [&](const auto &kv) { return std::abs(kv.second) <= threshold; });
        return *this;
    }

    /// |chi| = sum |chi_ab|
    double one_norm() const {
        double acc = 0;
        for (auto &kv : entries_) {
            acc += std::abs(kv.second);
        }
        return acc;
    }

    /// chi_ab == conj(chi_ba) within tol.
    bool is_hermitian(double tol = 1e-12) const {
        for (auto &[k, v] : entries_) {
            if (std::abs(v - std::conj(at(k.second, k.first))) > tol) {
                return false;
            }
        }
        return true;
    }

    ChiMap scaled(cplx s) const {
        ChiMap out(n_);
        for (auto &[k, v] : entries_) {
            out.entries_[k] = s * v;
        }
        out.prune();
        return out;
    }

    ChiMap &operator+=(const ChiMap &o) {
        check_same(o);
        for (auto &[k, v] : o.entries_) {
            entries_[k] += v;
        }
        return prune();
    }
    ChiMap &operator-=(const ChiMap &o) { return *this += o.scaled(-1.0); }
    friend ChiMap operator+(ChiMap a, const ChiMap &b) { return a += b; }
    friend ChiMap operator-(ChiMap a, const ChiMap &b) { return a -= b; }
    friend ChiMap operator*(cplx s, const ChiMap &a) { return a.scaled(s); }

    /// The map X -> E[X^dag]^dag; Hermitian-preserving maps are fixed points.
    ChiMap dagger_conjugate() const {
        ChiMap out(n_);
        for (auto &[k, v] : entries_) {
            out.entries_[{k.second, k.first}] = std::conj(v);
        }
        return out;
    }

    /// E[rho] for a dense rho.
    Matrix apply(const Matrix &rho) const {
        Matrix out = Matrix::Zero(rho.rows(), rho.cols());
        for (auto &[k, v] : entries_) {
            add_pauli_sandwich(out, rho, k.first, k.second, v);
        }
        return out;
    }

    void check_same(const ChiMap &o) const {
        if (o.n_ != n_) {
            throw std::invalid_argument("ChiMap: qubit count mismatch");
        }
    }

   private:
    int n_;
    std::map<Key, cplx> entries_;
};

/// chi of a o b (b acts first).
inline ChiMap compose(const ChiMap &a, const ChiMap &b) {
    a.check_same(b);
    ChiMap out(a.num_qubits());
    for (auto &[ka, va] : a.entries()) {
        for (auto &[kb, vb] : b.entries()) {
            auto left = multiply(ka.first, kb.first);
            auto right = multiply(kb.second, ka.second);
            out.add(left.product, right.product, va * vb * i_pow(left.phase + right.phase));
        }
    }
    out.prune();
    return out;
}

/// Column-stacking matrix: vec(E[rho]) = S vec(rho), vec(A rho B) = (B^T kron A) vec(rho).
inline Matrix to_dense_superop(const ChiMap &m, int limit = kSuperopLimit) {
    int n = m.num_qubits();
    if (n > limit) {
        throw std::invalid_argument("to_dense_superop: " + std::to_string(n) + " qubits exceeds the superoperator limit");
    }
    size_t d = size_t{1} << n;
    Matrix s = Matrix::Zero(d * d, d * d);
    for (auto &[k, v] : m.entries()) {
        // P_a has entries (c ^ xa, c) -> pa(c); P_b^T has entries (c, c ^ xb) -> pb(c).
        auto pa = k.first.phase_table();
        auto pb = k.second.phase_table();
        uint64_t xa = k.first.x(), xb = k.second.x();
        for (size_t cb = 0; cb < d; cb++) {
            for (size_t ca = 0; ca < d; ca++) {
                // (P_b^T kron P_a)[(cb, ra), (cb ^ xb, ca)] with ra = ca ^ xa
                size_t row = (ca ^ xa) + d * cb;
                size_t col = ca + d * (cb ^ xb);
                s(row, col) += v * pb[cb] * pa[ca];
            }
        }
    }
    return s;
}

inline Matrix vec(const Matrix &rho) { return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size()); }

inline Matrix unvec(const Eigen::VectorXcd &v) {
    auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

/// -i[H, rho]
inline ChiMap chi_of_hamiltonian(const PauliSum &h) {
    if (!h.is_hermitian(1e-12)) {
        throw std::invalid_argument("chi_of_hamiltonian: Hamiltonian is not Hermitian");
    }
    int n = h.num_qubits();
    ChiMap m(n);
    auto id = PauliString::identity(n);
    for (auto &t : h.terms()) {
        if (t.first.is_identity()) {
            continue;
        }
        m.add(t.first, id, cplx(0, -1) * t.second);
        m.add(id, t.first, cplx(0, 1) * t.second);
    }
    m.prune();
    return m;
}

struct DissipatorParts {
    ChiMap jump;   // D rho D^dag
    ChiMap left;   // D^dag D rho
    ChiMap right;  // rho D^dag D
};

inline DissipatorParts chi_of_dissipator_parts(const PauliSum &d) {
    int n = d.num_qubits();
    PauliSum dd = d.adjoint() * d;
    PauliSum id = PauliSum::identity(n);
    return {ChiMap::left_right(d, d), ChiMap::left_right(dd, id), ChiMap::left_right(id, dd)};
}

/// D rho D^dag - 1/2 {D^dag D, rho}
inline ChiMap chi_of_dissipator(const PauliSum &d) {
    auto parts = chi_of_dissipator_parts(d);
    ChiMap m = parts.jump;
    m += parts.left.scaled(-0.5);
    m += parts.right.scaled(-0.5);
    return m;
}

/// Generator coefficients at one instant.
struct LindbladSnapshot {
    PauliSum H;
    std::vector<PauliSum> jumps;
};

/// 2 (||H||_1 + sum_l ||D_l||_1^2)
inline double pauli_norm(const LindbladSnapshot &s) {
    double acc = norm(s.H, 1);
    for (auto &d : s.jumps) {
        double v = norm(d, 1);
        acc += v * v;
    }
    return 2 * acc;
}

inline ChiMap lindbladian_chi(const LindbladSnapshot &s) {
    ChiMap m = chi_of_hamiltonian(s.H);
    for (auto &d : s.jumps) {
        m += chi_of_dissipator(d);
    }
    return m;
}

/// @brief A Lindbladian, optionally time dependent.
struct LindbladSpec {
    int n = 0;
    PauliSum H;
    std::vector<PauliSum> jumps;
    std::function<LindbladSnapshot(double)> schedule;
    std::optional<double> derivative_bound;

    LindbladSpec() = default;
    LindbladSpec(PauliSum h, std::vector<PauliSum> d) : n(h.num_qubits()), H(std::move(h)), jumps(std::move(d)) { validate(); }

    bool time_dependent() const { return static_cast<bool>(schedule); }

    LindbladSnapshot at(double t) const {
        if (!schedule) {
            return {H, jumps};
        }
        return schedule(t);
    }

    /// ||L||_pauli; time-dependent generators are maximized over a grid of [t0, t1].
    double pauli_norm(double t0 = 0, double t1 = 0, int samples = 257) const {
        if (!schedule) {
            return lcsim::pauli_norm(LindbladSnapshot{H, jumps});
        }
        double best = 0;
        for (int k = 0; k < samples; k++) {
            double t = samples == 1 ? t0 : t0 + (t1 - t0) * k / (samples - 1);
            best = std::max(best, lcsim::pauli_norm(schedule(t)));
        }
        return best;
    }

    void validate() const {
        if (!H.is_hermitian(1e-12)) {
            throw std::invalid_argument("LindbladSpec: Hamiltonian has complex coefficients");
        }
        if (H.num_qubits() != n) {
            throw std::invalid_argument("LindbladSpec: Hamiltonian qubit count mismatch");
        }
        for (auto &d : jumps) {
            if (d.num_qubits() != n) {
                throw std::invalid_argument("LindbladSpec: jump qubit count mismatch");
            }
        }
    }
};

/// Dense Lindbladian action, for integrators.
struct DenseGenerator {
    Matrix H;
    std::vector<Matrix> D;
    std::vector<Matrix> DdD;

    explicit DenseGenerator(const LindbladSnapshot &s) : H(s.H.dense()) {
        for (auto &d : s.jumps) {
            D.push_back(d.dense());
            DdD.push_back(D.back().adjoint() * D.back());
        }
    }

    Matrix operator()(const Matrix &rho) const {
        Matrix out = cplx(0, -1) * (H * rho - rho * H);
        for (size_t l = 0; l < D.size(); l++) {
            out += D[l] * rho * D[l].adjoint() - 0.5 * (DdD[l] * rho + rho * DdD[l]);
        }
        return out;
    }
};

}  // namespace lcsim

#endif
