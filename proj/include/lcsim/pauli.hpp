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

#ifndef LCSIM_PAULI_HPP
#define LCSIM_PAULI_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lcsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kDenseLimit = 8;
inline constexpr int kMaxQubits = 62;
inline constexpr double kPruneThreshold = 1e-14;

/// i^k for an integer k.
inline cplx i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0:
            return {1, 0};
        case 1:
            return {0, 1};
        case 2:
            return {-1, 0};
        default:
            return {0, -1};
    }
}

/// @brief An n-qubit Pauli label stored as X and Z bitmasks.
///
/// Qubit q is bit q of both masks and of computational basis indices. Label
/// character q describes qubit q, so "XZ" is X on qubit 0 and Z on qubit 1.
/// The encoded operator is i^{|x&z|} X^x Z^z, which makes (1,1) equal to Y.
class PauliString {
   public:
    PauliString() = default;
    PauliString(int n, uint64_t x, uint64_t z) : n_(n), x_(x), z_(z) {
        if (n < 0 || n > kMaxQubits) {
            throw std::invalid_argument("PauliString: unsupported qubit count " + std::to_string(n));
        }
        uint64_t mask = n == 64 ? ~uint64_t{0} : ((uint64_t{1} << n) - 1);
        if ((x & ~mask) || (z & ~mask)) {
            throw std::invalid_argument("PauliString: bits set beyond qubit count");
        }
    }

    static PauliString identity(int n) { return PauliString(n, 0, 0); }

    static PauliString from_label(std::string_view label) {
        int n = static_cast<int>(label.size());
        uint64_t x = 0, z = 0;
        for (int q = 0; q < n; q++) {
            switch (label[q]) {
                case 'I':
                case '_':
                    break;
                case 'X':
                    x |= uint64_t{1} << q;
                    break;
                case 'Y':
                    x |= uint64_t{1} << q;
                    z |= uint64_t{1} << q;
                    break;
                case 'Z':
                    z |= uint64_t{1} << q;
                    break;
                default:
                    throw std::invalid_argument("PauliString: bad label character '" + std::string(1, label[q]) + "'");
            }
        }
        return PauliString(n, x, z);
    }

    int num_qubits() const { return n_; }
    uint64_t x() const { return x_; }
    uint64_t z() const { return z_; }

    char at(int q) const {
        bool bx = (x_ >> q) & 1, bz = (z_ >> q) & 1;
        return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
    }

    std::string label() const {
        std::string out(n_, 'I');
        for (int q = 0; q < n_; q++) {
            out[q] = at(q);
        }
        return out;
    }

    int weight() const { return std::popcount(x_ | z_); }
    bool is_identity() const { return (x_ | z_) == 0; }
    bool is_diagonal() const { return x_ == 0; }

    bool commutes_with(const PauliString &other) const {
        return (std::popcount((x_ & other.z_) ^ (z_ & other.x_)) & 1) == 0;
    }

    /// Phase of column c: P|c> = basis_phase(c) |c ^ x>.
    cplx basis_phase(uint64_t c) const {
        int k = std::popcount(x_ & z_) + 2 * (std::popcount(z_ & c) & 1);
        return i_pow(k);
    }

    /// Table of basis_phase over all 2^n columns.
    std::vector<cplx> phase_table() const {
        size_t d = size_t{1} << n_;
        std::vector<cplx> out(d);
        cplx g = i_pow(std::popcount(x_ & z_));
        for (size_t c = 0; c < d; c++) {
            out[c] = (std::popcount(z_ & c) & 1) ? -g : g;
        }
        return out;
    }

    Matrix dense() const {
        size_t d = size_t{1} << n_;
        Matrix m = Matrix::Zero(d, d);
        for (size_t c = 0; c < d; c++) {
            m(c ^ x_, c) = basis_phase(c);
        }
        return m;
    }

    /// Embeds into a larger register; qubit q maps to qubit map[q].
    PauliString remapped(int new_n, const std::vector<int> &map) const {
        uint64_t nx = 0, nz = 0;
        for (int q = 0; q < n_; q++) {
            nx |= ((x_ >> q) & 1) << map[q];
            nz |= ((z_ >> q) & 1) << map[q];
        }
        return PauliString(new_n, nx, nz);
    }

    auto operator<=>(const PauliString &) const = default;
    bool operator==(const PauliString &) const = default;

   private:
    int n_ = 0;
    uint64_t x_ = 0;
    uint64_t z_ = 0;
};

struct PauliStringHash {
    size_t operator()(const PauliString &p) const {
        uint64_t h = p.x() * 0x9E3779B97F4A7C15ULL ^ (p.z() + 0x632BE59BD9B4E019ULL + (h_rot(p.x())));
        return static_cast<size_t>(h ^ static_cast<uint64_t>(p.num_qubits()));
    }
    static uint64_t h_rot(uint64_t v) { return (v << 31) | (v >> 33); }
};

/// Result of multiplying two Pauli strings: a * b = i^phase * product.
struct PauliProduct {
    int phase = 0;
    PauliString product;
    cplx phase_value() const { return i_pow(phase); }
};

inline PauliProduct multiply(const PauliString &a, const PauliString &b) {
    if (a.num_qubits() != b.num_qubits()) {
        throw std::invalid_argument("multiply: mismatched qubit counts");
    }
    uint64_t ax = a.x() & ~a.z(), ay = a.x() & a.z(), az = a.z() & ~a.x();
    uint64_t bx = b.x() & ~b.z(), by = b.x() & b.z(), bz = b.z() & ~b.x();
    uint64_t plus = (ax & by) | (ay & bz) | (az & bx);
    uint64_t minus = (ay & bx) | (az & by) | (ax & bz);
    int k = std::popcount(plus) - std::popcount(minus);
    return {((k % 4) + 4) % 4, PauliString(a.num_qubits(), a.x() ^ b.x(), a.z() ^ b.z())};
}

/// @brief Sparse operator sum_k c_k P_k.
///
/// Terms keep their insertion order, which fixes the Trotter factor order.
class PauliSum {
   public:
    using Term = std::pair<PauliString, cplx>;

    explicit PauliSum(int n = 0) : n_(n) {}

    static PauliSum identity(int n, cplx c = 1.0) {
        PauliSum s(n);
        s.add(PauliString::identity(n), c);
        return s;
    }

    int num_qubits() const { return n_; }
    const std::vector<Term> &terms() const { return terms_; }
    size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    void add(const PauliString &p, cplx c) {
        if (p.num_qubits() != n_) {
            throw std::invalid_argument("PauliSum::add: qubit count mismatch");
        }
        auto it = index_.find(p);
        if (it == index_.end()) {
            index_.emplace(p, terms_.size());
            terms_.emplace_back(p, c);
        } else {
            terms_[it->second].second += c;
        }
    }

    void add(std::string_view label, cplx c) { add(PauliString::from_label(label), c); }

    cplx coeff(const PauliString &p) const {
        auto it = index_.find(p);
        return it == index_.end() ? cplx{0, 0} : terms_[it->second].second;
    }

    PauliSum &prune(double threshold = kPruneThreshold) {
        std::vector<Term> kept;
        kept.reserve(terms_.size());
        for (auto &t : terms_) {
            if (std::abs(t.second) > threshold) {
                kept.push_back(t);
            }
        }
        terms_ = std::move(kept);
        index_.clear();
        for (size_t k = 0; k < terms_.size(); k++) {
            index_.emplace(terms_[k].first, k);
        }
        return *this;
    }

    bool is_hermitian(double tol = 0) const {
        for (auto &t : terms_) {
            if (std::abs(t.second.imag()) > tol) {
                return false;
            }
        }
        return true;
    }

    PauliSum adjoint() const {
        PauliSum out(n_);
        for (auto &t : terms_) {
            out.add(t.first, std::conj(t.second));
        }
        return out;
    }

    PauliSum scaled(cplx s) const {
        PauliSum out(n_);
        for (auto &t : terms_) {
            out.add(t.first, s * t.second);
        }
        return out;
    }

    PauliSum &operator+=(const PauliSum &o) {
        check_same(o);
        for (auto &t : o.terms_) {
            add(t.first, t.second);
        }
        return *this;
    }

    PauliSum &operator-=(const PauliSum &o) {
        check_same(o);
        for (auto &t : o.terms_) {
            add(t.first, -t.second);
        }
        return *this;
    }

    friend PauliSum operator+(PauliSum a, const PauliSum &b) { return a += b; }
    friend PauliSum operator-(PauliSum a, const PauliSum &b) { return a -= b; }
    friend PauliSum operator*(cplx s, const PauliSum &a) { return a.scaled(s); }

    friend PauliSum operator*(const PauliSum &a, const PauliSum &b) {
        a.check_same(b);
        PauliSum out(a.n_);
        for (auto &ta : a.terms_) {
            for (auto &tb : b.terms_) {
                auto pr = multiply(ta.first, tb.first);
                out.add(pr.product, pr.phase_value() * ta.second * tb.second);
            }
        }
        out.prune();
        return out;
    }

    Matrix dense() const {
        size_t d = size_t{1} << n_;
        Matrix m = Matrix::Zero(d, d);
        for (auto &t : terms_) {
            uint64_t x = t.first.x();
            for (size_t c = 0; c < d; c++) {
                m(c ^ x, c) += t.second * t.first.basis_phase(c);
            }
        }
        return m;
    }

    /// One term per line: `<re> <im> <label>`.
    std::string to_text() const {
        std::ostringstream out;
        out.precision(17);
        for (auto &t : terms_) {
            out << t.second.real() << ' ' << t.second.imag() << ' ' << t.first.label() << '\n';
        }
        return out.str();
    }

    /// Parses the text format; n < 0 infers the qubit count from the labels.
    /// Blank lines and lines starting with '#' are skipped, ';' acts as a line break.
    static PauliSum parse(std::string_view text, int n = -1) {
        std::string buf(text);
        std::replace(buf.begin(), buf.end(), ';', '\n');
        std::istringstream lines(buf);
        std::string line;
        std::vector<std::pair<std::string, cplx>> raw;
        int line_no = 0;
        while (std::getline(lines, line)) {
            line_no++;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') {
                continue;
            }
            std::istringstream fields(line);
            double re, im;
            std::string label, extra;
            if (!(fields >> re >> im >> label) || (fields >> extra)) {
                throw std::invalid_argument("PauliSum::parse: malformed line " + std::to_string(line_no) + ": '" + line + "'");
            }
            if (n < 0) {
                n = static_cast<int>(label.size());
            }
            if (static_cast<int>(label.size()) != n) {
                throw std::invalid_argument("PauliSum::parse: label length mismatch on line " + std::to_string(line_no));
            }
            raw.emplace_back(label, cplx{re, im});
        }
        PauliSum out(std::max(n, 0));
        for (auto &[label, c] : raw) {
            out.add(label, c);
        }
        return out;
    }

   private:
    void check_same(const PauliSum &o) const {
        if (o.n_ != n_) {
            throw std::invalid_argument("PauliSum: qubit count mismatch");
        }
    }

    int n_;
    std::vector<Term> terms_;
    std::unordered_map<PauliString, size_t, PauliStringHash> index_;
};

/// Qubit count of a square matrix; throws unless the side is a power of two.
inline int qubits_of_dimension(Eigen::Index d) {
    if (d <= 0 || (d & (d - 1)) != 0) {
        throw std::invalid_argument("dimension " + std::to_string(d) + " is not a power of two");
    }
    return std::countr_zero(static_cast<uint64_t>(d));
}

/// c_P = Tr(P A) / 2^n over all 4^n Pauli strings.
inline PauliSum pauli_decompose(const Matrix &a, int dense_limit = kDenseLimit, double threshold = kPruneThreshold) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("pauli_decompose: matrix is not square");
    }
    int n = qubits_of_dimension(a.rows());
    if (n > dense_limit) {
        throw std::invalid_argument("pauli_decompose: " + std::to_string(n) + " qubits exceeds the dense limit");
    }
    uint64_t d = uint64_t{1} << n;
    double inv = 1.0 / static_cast<double>(d);
    PauliSum out(n);
    for (uint64_t x = 0; x < d; x++) {
        for (uint64_t z = 0; z < d; z++) {
            PauliString p(n, x, z);
            cplx g = i_pow(std::popcount(x & z));
            cplx acc = 0;
            // Tr(P A) = sum_c <c|P A|c> = sum_c phase(c^x) A(c^x, c)
            for (uint64_t c = 0; c < d; c++) {
                uint64_t r = c ^ x;
                double s = (std::popcount(z & r) & 1) ? -1.0 : 1.0;
                acc += s * a(r, c);
            }
            acc *= g * inv;
            if (std::abs(acc) > threshold) {
                out.add(p, acc);
            }
        }
    }
    return out;
}

/// p-norm of the coefficient vector; p = 0 counts nonzero terms.
inline double norm(const PauliSum &s, int p) {
    double acc = 0;
    switch (p) {
        case 0:
            for (auto &t : s.terms()) {
                acc += t.second != cplx{0, 0} ? 1.0 : 0.0;
            }
            return acc;
        case 1:
            for (auto &t : s.terms()) {
                acc += std::abs(t.second);
            }
            return acc;
        case 2:
            for (auto &t : s.terms()) {
                acc += std::norm(t.second);
            }
            return std::sqrt(acc);
        default:
            throw std::invalid_argument("norm: order must be 0, 1 or 2");
    }
}

}  // namespace lcsim

#endif
