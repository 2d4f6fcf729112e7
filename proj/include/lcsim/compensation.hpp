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

#ifndef LCSIM_COMPENSATION_HPP
#define LCSIM_COMPENSATION_HPP

#include "lcsim/lcs.hpp"

#include <iostream>
#include <map>

namespace lcsim {

/// Geometric ratio used in the dissipative bias bound and step precondition.
inline constexpr double kLambda = 2.6;
/// Largest order for which dissipative coefficients are tabulated.
inline constexpr int kMaxDissipativeOrder = 10;

inline double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; i++) {
        f *= i;
    }
    return f;
}

/// @brief Ordered (left, right) Pauli pairs of a process matrix, drawn by |chi|.
class PairTable {
   public:
    PairTable() = default;
    explicit PairTable(const ChiMap &m) {
        std::vector<double> w;
        for (auto &[k, v] : m.entries()) {
            if (v == cplx(0, 0)) {
                continue;
            }
            left_.push_back(k.first);
            right_.push_back(k.second);
            phase_.push_back(std::arg(v));
            w.push_back(std::abs(v));
        }
        pick_ = Categorical(w);
    }
    double norm() const { return pick_.size() ? pick_.total() : 0.0; }
    size_t size() const { return left_.size(); }

    /// Appends a drawn factor on the inner side of b.
    void draw_into(Branch &b, Rng &rng) const {
        size_t k = pick_.draw(rng);
        b.then_inner(left_[k], right_[k], phase_[k]);
    }

   private:
    std::vector<PauliString> left_, right_;
    std::vector<double> phase_;
    Categorical pick_;
};

/// A generator split into sampled pieces, e.g. the Hamiltonian part and each dissipator.
struct PieceSet {
    std::vector<ChiMap> chi;
    std::vector<PairTable> tables;
    Categorical pick;

    PieceSet() = default;
    explicit PieceSet(std::vector<ChiMap> pieces) : chi(std::move(pieces)) {
        std::vector<double> w;
        for (auto &c : chi) {
            tables.emplace_back(c);
            w.push_back(tables.back().norm());
        }
        pick = Categorical(w);
    }
    double norm() const { return pick.size() ? pick.total() : 0.0; }

    ChiMap sum() const {
        ChiMap s(chi.empty() ? 0 : chi.front().num_qubits());
        for (auto &c : chi) {
            s += c;
        }
        return s;
    }

    void draw_into(Branch &b, Rng &rng) const { tables[pick.draw(rng)].draw_into(b, rng); }
};

inline std::vector<ChiMap> generator_pieces(const LindbladSnapshot &s) {
    std::vector<ChiMap> out{chi_of_hamiltonian(s.H)};
    for (auto &d : s.jumps) {
        out.push_back(chi_of_dissipator(d));
    }
    return out;
}

/// Power-series bookkeeping: grades[g] holds the order-tau^g component of a state.
using Graded = std::vector<Matrix>;

inline Graded graded_start(const Matrix &rho, int K) {
    Graded g(K + 1, Matrix::Zero(rho.rows(), rho.cols()));
    g[0] = rho;
    return g;
}

/// grades <- truncation of e^{scale * gen}[grades] to total order K.
inline void graded_exp(Graded &grades, const ChiMap &gen, double scale, int K) {
    Graded out(K + 1, Matrix::Zero(grades[0].rows(), grades[0].cols()));
    for (int g = 0; g <= K; g++) {
        if (grades[g].isZero(0)) {
            continue;
        }
        Matrix y = grades[g];
        out[g] += y;
        for (int s = 1; g + s <= K; s++) {
            y = gen.apply(y) * (scale / s);
            out[g + s] += y;
        }
    }
    grades = std::move(out);
}

inline Matrix graded_sum(const Graded &grades) {
    Matrix s = grades[0];
    for (size_t g = 1; g < grades.size(); g++) {
        s += grades[g];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Lie-Trotter compensation: M = e^{L tau} o e^{-H tau} o e^{-D_1 tau} o ... o e^{-D_m tau}.

class LieTrotterSource : public TermSource {
   public:
    LieTrotterSource(const LindbladSnapshot &s, double tau, int K) : n_(s.H.num_qubits()), tau_(tau), K_(K), pieces_(generator_pieces(s)) {
        double x = pieces_.norm();
        // Factor types: 0 = L (weight X), 1 + l = piece l (weight X_l).
        std::vector<double> tw{x};
        for (auto &t : pieces_.tables) {
            tw.push_back(t.norm());
        }
        types_ = Categorical(tw);
        weights_.assign(K + 1, 0.0);
        weights_[0] = 1;
        for (int k = 2; k <= K; k++) {
            weights_[k] = std::pow(2 * x * tau, k) / factorial(k);
        }
        orders_ = Categorical(weights_);
    }

    int num_qubits() const override { return n_; }
    const std::vector<double> &order_weights() const { return weights_; }
    int draw_order(Rng &rng) const { return static_cast<int>(orders_.draw(rng)); }

    Branch draw_at_order(int k, Rng &rng) const {
        Branch b = Branch::identity(n_);
        if (k == 0) {
            return b;
        }
        std::vector<int> counts(types_.size(), 0);
        for (int i = 0; i < k; i++) {
            counts[types_.draw(rng)]++;
        }
        for (int i = 0; i < counts[0]; i++) {
            pieces_.draw_into(b, rng);
        }
        for (size_t t = 1; t < counts.size(); t++) {
            for (int i = 0; i < counts[t]; i++) {
                pieces_.tables[t - 1].draw_into(b, rng);
            }
        }
        if ((k - counts[0]) & 1) {
            b.quarter += 2;
        }
        return b;
    }

    Branch draw(Rng &rng) const override { return draw_at_order(draw_order(rng), rng); }

    void apply_expected(Matrix &rho) const override {
        Graded g = graded_start(rho, K_);
        for (size_t l = pieces_.chi.size(); l-- > 1;) {
            graded_exp(g, pieces_.chi[l], -tau_, K_);
        }
        graded_exp(g, pieces_.chi[0], -tau_, K_);
        graded_exp(g, pieces_.sum(), tau_, K_);
        rho = graded_sum(g);
    }

   private:
    int n_;
    double tau_;
    int K_;
    PieceSet pieces_;
    Categorical types_;
    std::vector<double> weights_;
    Categorical orders_;
};

/// mu = 1 + sum_{k=2}^K (2 X tau)^k / k!, X = sum of piece norms.
inline LcsFormula build_M(const LindbladSnapshot &s, double tau, int K) {
    if (K < 0) {
        throw std::invalid_argument("build_M: negative order");
    }
    if (!(tau > 0)) {
        throw std::invalid_argument("build_M: step must be positive");
    }
    double strength = norm(s.H, 1);
    for (auto &d : s.jumps) {
        strength += std::pow(norm(d, 1), 2);
    }
    double bias = std::pow(4 * std::numbers::e * strength * tau / (K + 1), K + 1);
    int n = s.H.num_qubits();
    if (K <= 1) {
        auto f = LcsFormula::identity(n);
        return LcsFormula(f.source_ptr(), 1.0, bias, false, true);
    }
    auto src = std::make_shared<LieTrotterSource>(s, tau, K);
    double mu = 0;
    for (double w : src->order_weights()) {
        mu += w;
    }
    return LcsFormula(src, mu, bias, false);
}

inline LcsFormula build_M(const LindbladSpec &spec, double tau, int K) { return build_M(spec.at(0), tau, K); }

// ---------------------------------------------------------------------------
// Dissipative coefficients. Strings j_1..j_k over {1,2,3} are stored densely,
// index = sum (j_i - 1) 3^{k-i}, so j_1 is the most significant digit and
// concatenation u.v has index idx(u) 3^{|v|} + idx(v).

class DissipativeCoefficients {
   public:
    static DissipativeCoefficients build(int K) {
        if (K < 0) {
            throw std::invalid_argument("build_dissipative_coefficients: negative order");
        }
        if (K > kMaxDissipativeOrder) {
            throw std::invalid_argument("build_dissipative_coefficients: order above " + std::to_string(kMaxDissipativeOrder));
        }
        DissipativeCoefficients r;
        r.K_ = K;
        r.a_.resize(K + 1);
        r.b_.resize(K + 1);
        r.c_.resize(K + 1);
        for (int k = 0; k <= K; k++) {
            size_t sz = pow3(k);
            r.b_[k].assign(sz, 0.0);
            r.c_[k].assign(sz, 0.0);
            // c: (1/k!) prod w(j_i), w(1) = 1, w(2) = w(3) = -1/2
            for (size_t idx = 0; idx < sz; idx++) {
                double v = 1.0 / factorial(k);
                size_t t = idx;
                for (int i = 0; i < k; i++) {
                    if (t % 3 != 0) {
                        v *= -0.5;
                    }
                    t /= 3;
                }
                r.c_[k][idx] = v;
            }
            // b: 2^j 3^{k-j} and 1 2^j 3^{k-1-j}
            if (k == 0) {
                r.b_[0][0] = 1;
            } else {
                for (int j = 0; j <= k; j++) {
                    std::vector<int> s(j, 2);
                    s.insert(s.end(), k - j, 3);
                    r.b_[k][index_of(s)] += sign(k) / (factorial(2 * j) * factorial(2 * k - 2 * j));
                }
                for (int j = 0; j <= k - 1; j++) {
                    std::vector<int> s{1};
                    s.insert(s.end(), j, 2);
                    s.insert(s.end(), k - 1 - j, 3);
                    r.b_[k][index_of(s)] += sign(k - 1) / (factorial(2 * j + 1) * factorial(2 * k - 2 * j - 1));
                }
            }
            // a^(k) = c^(k) - sum_{i=1}^{k-1} a^(k-i) . b^(i) - b^(k), with a^(0) = identity
            if (k == 0) {
                r.a_[0] = {1.0};
                continue;
            }
            std::vector<double> a = r.c_[k];
            for (size_t idx = 0; idx < sz; idx++) {
                a[idx] -= r.b_[k][idx];
            }
            for (int i = 1; i <= k - 1; i++) {
                const auto &ai = r.a_[k - i];
                const auto &bi = r.b_[i];
                size_t shift = pow3(i);
                for (size_t u = 0; u < ai.size(); u++) {
                    if (ai[u] == 0) {
                        continue;
                    }
                    for (size_t v = 0; v < bi.size(); v++) {
                        if (bi[v] != 0) {
                            a[u * shift + v] -= ai[u] * bi[v];
                        }
                    }
                }
            }
            r.a_[k] = std::move(a);
        }
        return r;
    }

    int max_order() const { return K_; }
    const std::vector<double> &a(int k) const { return a_.at(k); }
    const std::vector<double> &b(int k) const { return b_.at(k); }
    const std::vector<double> &c(int k) const { return c_.at(k); }

    /// sum_j |a^(k)_j|
    double a_norm(int k) const {
        double s = 0;
        for (double v : a_.at(k)) {
            s += std::abs(v);
        }
        return s;
    }

    /// max_j |sum_i (a^(k-i) . b^(i))_j - c^(k)_j| / max_j sum_i |a^(k-i)| . |b^(i)|_j,
    /// i.e. relative to the magnitude of the summed products rather than the
    /// (much smaller, cancellation-prone) result.
    double convolution_residual(int k) const {
        std::vector<long double> lhs(pow3(k), 0.0L), mag(pow3(k), 0.0L);
        for (int i = 0; i <= k; i++) {
            const auto &ai = a_.at(k - i);
            const auto &bi = b_.at(i);
            size_t shift = pow3(i);
            for (size_t u = 0; u < ai.size(); u++) {
                for (size_t v = 0; v < bi.size(); v++) {
                    lhs[u * shift + v] += static_cast<long double>(ai[u]) * bi[v];
                    mag[u * shift + v] += std::abs(static_cast<long double>(ai[u]) * bi[v]);
                }
            }
        }
        long double err = 0, scale = 0;
        for (size_t idx = 0; idx < lhs.size(); idx++) {
            err = std::max(err, std::abs(lhs[idx] - c_[k][idx]));
            scale = std::max(scale, mag[idx]);
        }
        return static_cast<double>(err / scale);
    }

    /// Largest |A(C) - A(pi C)| over classes C of strings equal up to reordering
    /// adjacent 2/3 letters (those maps commute), with pi swapping 2 and 3.
    double pi_symmetry_residual(int k) const {
        std::map<std::vector<int>, double> sums;
        const auto &ak = a_.at(k);
        for (size_t idx = 0; idx < ak.size(); idx++) {
            sums[normal_form(string_of(idx, k))] += ak[idx];
        }
        double worst = 0;
        for (auto &[s, v] : sums) {
            std::vector<int> p = s;
            for (int &c : p) {
                c = c == 2 ? 3 : (c == 3 ? 2 : c);
            }
            auto it = sums.find(normal_form(p));
            double w = it == sums.end() ? 0.0 : it->second;
            worst = std::max(worst, std::abs(v - w));
        }
        return worst;
    }

    /// Largest |a_j - a_{pi(j)}| over individual strings.
    double literal_pi_residual(int k) const {
        const auto &ak = a_.at(k);
        double worst = 0;
        for (size_t idx = 0; idx < ak.size(); idx++) {
            auto s = string_of(idx, k);
            for (int &c : s) {
                c = c == 2 ? 3 : (c == 3 ? 2 : c);
            }
            worst = std::max(worst, std::abs(ak[idx] - ak[index_of(s)]));
        }
        return worst;
    }

    static size_t pow3(int k) {
        size_t p = 1;
        for (int i = 0; i < k; i++) {
            p *= 3;
        }
        return p;
    }

    static size_t index_of(const std::vector<int> &s) {
        size_t idx = 0;
        for (int c : s) {
            idx = idx * 3 + static_cast<size_t>(c - 1);
        }
        return idx;
    }

    static std::vector<int> string_of(size_t idx, int k) {
        std::vector<int> s(k);
        for (int i = k - 1; i >= 0; i--) {
            s[i] = static_cast<int>(idx % 3) + 1;
            idx /= 3;
        }
        return s;
    }

   private:
    static double sign(int k) { return (k & 1) ? -1.0 : 1.0; }

    static std::vector<int> normal_form(std::vector<int> s) {
        size_t i = 0;
        while (i < s.size()) {
            if (s[i] == 1) {
                i++;
                continue;
            }
            size_t j = i;
            while (j < s.size() && s[j] != 1) {
                j++;
            }
            std::sort(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(j));
            i = j;
        }
        return s;
    }

    int K_ = 0;
    std::vector<std::vector<double>> a_, b_, c_;
};

inline DissipativeCoefficients build_dissipative_coefficients(int K) { return DissipativeCoefficients::build(K); }

/// Sampler for N = sum_k tau^k sum_j a_j D_{j_1} o ... o D_{j_k}.
class DissipativeSource : public TermSource {
   public:
    DissipativeSource(const PauliSum &d, double tau, int K, const DissipativeCoefficients &coeffs)
        : n_(d.num_qubits()), tau_(tau), K_(K) {
        auto parts = chi_of_dissipator_parts(d);
        parts_ = {parts.jump, parts.left, parts.right};
        for (auto &p : parts_) {
            tables_.emplace_back(p);
        }
        weights_.assign(K + 1, 0.0);
        weights_[0] = 1;
        strings_.resize(K + 1);
        for (int k = 2; k <= K; k++) {
            const auto &ak = coeffs.a(k);
            std::vector<double> w(ak.size());
            double total = 0;
            for (size_t idx = 0; idx < ak.size(); idx++) {
                double v = std::abs(ak[idx]);
                size_t t = idx;
                for (int i = 0; i < k && v != 0; i++) {
                    v *= tables_[t % 3].norm();
                    t /= 3;
                }
                w[idx] = v;
                total += v;
            }
            weights_[k] = total * std::pow(tau, k);
            if (total > 0) {
                strings_[k] = Categorical(w);
            }
            a_.push_back(ak);
        }
        orders_ = Categorical(weights_);
    }

    int num_qubits() const override { return n_; }
    const std::vector<double> &order_weights() const { return weights_; }
    int draw_order(Rng &rng) const { return static_cast<int>(orders_.draw(rng)); }

    Branch draw_at_order(int k, Rng &rng) const {
        Branch b = Branch::identity(n_);
        if (k == 0) {
            return b;
        }
        size_t idx = strings_[k].draw(rng);
        auto s = DissipativeCoefficients::string_of(idx, k);
        for (int c : s) {
            tables_[c - 1].draw_into(b, rng);
        }
        if (a_[k - 2][idx] < 0) {
            b.quarter += 2;
        }
        return b;
    }

    Branch draw(Rng &rng) const override { return draw_at_order(draw_order(rng), rng); }

    void apply_expected(Matrix &rho) const override {
        Matrix out = rho;
        for (int k = 2; k <= K_; k++) {
            Matrix acc = Matrix::Zero(rho.rows(), rho.cols());
            accumulate(rho, 0, 0, k, acc);
            out += std::pow(tau_, k) * acc;
        }
        rho = std::move(out);
    }

   private:
    // y = D_{suffix}[rho] for a suffix of length depth whose index is low.
    void accumulate(const Matrix &y, int depth, size_t low, int k, Matrix &acc) const {
        if (depth == k) {
            double a = a_[k - 2][low];
            if (a != 0) {
                acc += a * y;
            }
            return;
        }
        size_t shift = DissipativeCoefficients::pow3(depth);
        for (int c = 0; c < 3; c++) {
            if (parts_[c].empty()) {
                continue;
            }
            accumulate(parts_[c].apply(y), depth + 1, c * shift + low, k, acc);
        }
    }

    int n_;
    double tau_;
    int K_;
    std::vector<ChiMap> parts_;
    std::vector<PairTable> tables_;
    std::vector<double> weights_;
    std::vector<Categorical> strings_;
    std::vector<std::vector<double>> a_;
    Categorical orders_;
};

/// Compensation of the traced dilation step toward e^{D tau}.
inline LcsFormula build_N(const PauliSum &d, double tau, int K, const DissipativeCoefficients &coeffs, double lambda = kLambda) {
    if (K < 0) {
        throw std::invalid_argument("build_N: negative order");
    }
    if (K > coeffs.max_order()) {
        throw std::invalid_argument("build_N: coefficient table too short for order " + std::to_string(K));
    }
    double dn = norm(d, 1);
    if (!(tau > 0) || tau * 2 * lambda * dn * dn > 1) {
        throw std::invalid_argument("build_N: step violates tau <= 1/(2 lambda ||D||_1^2)");
    }
    double a2 = coeffs.max_order() >= 2 ? coeffs.a_norm(2) : build_dissipative_coefficients(2).a_norm(2);
    double bias = 2 * a2 * std::pow(lambda, K - 1) * std::pow(dn, 2 * K + 2) * std::pow(tau, K + 1);
    int n = d.num_qubits();
    if (K <= 1 || dn == 0) {
        auto f = LcsFormula::identity(n);
        return LcsFormula(f.source_ptr(), 1.0, bias, false, true);
    }
    auto src = std::make_shared<DissipativeSource>(d, tau, K, coeffs);
    double mu = 0;
    for (double w : src->order_weights()) {
        mu += w;
    }
    return LcsFormula(src, mu, bias, false);
}

// ---------------------------------------------------------------------------
// First-order Trotter compensation V = e^{-iH tau} S(tau)^dag, with S the
// product of e^{-i c_a P_a tau} applied in insertion order (S = f_r ... f_1).

inline std::vector<PauliSum> graded_exp_operator(const PauliSum &h, cplx scale, int K) {
    int n = h.num_qubits();
    std::vector<PauliSum> g;
    g.push_back(PauliSum::identity(n));
    PauliSum power = PauliSum::identity(n);
    for (int k = 1; k <= K; k++) {
        power = power * h;
        g.push_back(power.scaled(std::pow(scale, k) / factorial(k)));
    }
    return g;
}

/// Truncated series of e^{-iH tau} S^dag collected to total order K.
inline PauliSum trotter_compensation_operator(const PauliSum &h, double tau, int K) {
    int n = h.num_qubits();
    auto e = graded_exp_operator(h, cplx(0, -tau), K);
    // S^dag = f_1^dag f_2^dag ... f_r^dag with f^dag = cos(c tau) + i sin(c tau) P.
    std::vector<PauliSum> s(K + 1, PauliSum(n));
    s[0] = PauliSum::identity(n);
    for (auto &[p, c] : h.terms()) {
        double theta = c.real() * tau;
        std::vector<PauliSum> f(K + 1, PauliSum(n));
        for (int g = 0; g <= K; g++) {
            double mag = std::pow(theta, g) / factorial(g);
            double sgn = ((g / 2) & 1) ? -1.0 : 1.0;
            if (g % 2 == 0) {
                f[g].add(PauliString::identity(n), sgn * mag);
            } else {
                f[g].add(p, cplx(0, sgn * mag));
            }
        }
        std::vector<PauliSum> next(K + 1, PauliSum(n));
        for (int a = 0; a <= K; a++) {
            if (s[a].empty()) {
                continue;
            }
            for (int b = 0; a + b <= K; b++) {
                next[a + b] += s[a] * f[b];
            }
        }
        for (auto &x : next) {
            x.prune();
        }
        s = std::move(next);
    }
    PauliSum v(n);
    for (int a = 0; a <= K; a++) {
        for (int b = 0; a + b <= K; b++) {
            if (!e[a].empty() && !s[b].empty()) {
                v += e[a] * s[b];
            }
        }
    }
    return v.prune();
}

/// rho -> V rho V^dag with V a Pauli sum; branch (i, j) drawn with |v_i||v_j|.
class ConjugationSource : public TermSource {
   public:
    explicit ConjugationSource(PauliSum v, int dense_limit = kDenseLimit + 1) : v_(std::move(v)) {
        std::vector<double> w;
        for (auto &[p, c] : v_.terms()) {
            w.push_back(std::abs(c));
        }
        pick_ = Categorical(w);
        if (v_.num_qubits() <= dense_limit) {
            dense_ = v_.dense();
        }
    }

    int num_qubits() const override { return v_.num_qubits(); }
    const PauliSum &operator_sum() const { return v_; }
    double one_norm() const { return pick_.total(); }

    Branch draw(Rng &rng) const override {
        const auto &ti = v_.terms()[pick_.draw(rng)];
        const auto &tj = v_.terms()[pick_.draw(rng)];
        return {std::arg(ti.second) - std::arg(tj.second), 0, ti.first, tj.first};
    }

    void apply_expected(Matrix &rho) const override {
        if (dense_.size() == 0) {
            throw std::invalid_argument("ConjugationSource: register too large for dense evaluation");
        }
        rho = dense_ * rho * dense_.adjoint();
    }

   private:
    PauliSum v_;
    Categorical pick_;
    Matrix dense_;
};

/// Conjugation formula for the truncated Trotter compensation of e^{-iH tau}.
inline LcsFormula build_V1(const PauliSum &h, double tau, int K) {
    if (K < 0) {
        throw std::invalid_argument("build_V1: negative order");
    }
    double hn = norm(h, 1);
    if (!(tau > 0) || 2 * hn * tau >= 1) {
        throw std::invalid_argument("build_V1: step violates tau < 1/(2||H||_1)");
    }
    double eps = std::pow(2 * std::numbers::e * hn * tau / (K + 1), K + 1);
    double bias = 2 * eps + eps * eps;
    PauliSum v = trotter_compensation_operator(h, tau, K);
    int n = h.num_qubits();
    if (v.size() == 1 && v.terms()[0].first.is_identity() && std::abs(v.terms()[0].second - 1.0) < 1e-13) {
        auto f = LcsFormula::identity(n);
        return LcsFormula(f.source_ptr(), 1.0, bias, true, true);
    }
    auto src = std::make_shared<ConjugationSource>(std::move(v));
    double m = src->one_norm();
    return LcsFormula(src, m * m, bias, true);
}

/// sigma_- (x) D + sigma_+ (x) D^dag on n+1 qubits, the ancilla being qubit n.
inline PauliSum dilation_operator(const PauliSum &d) {
    int n = d.num_qubits();
    std::vector<int> map(n);
    for (int q = 0; q < n; q++) {
        map[q] = q;
    }
    PauliSum j(n + 1);
    uint64_t anc = uint64_t{1} << n;
    for (auto &[p, c] : d.terms()) {
        PauliString q = p.remapped(n + 1, map);
        if (c.real() != 0) {
            j.add(PauliString(n + 1, q.x() | anc, q.z()), c.real());
        }
        if (c.imag() != 0) {
            j.add(PauliString(n + 1, q.x() | anc, q.z() | anc), c.imag());
        }
    }
    return j.prune();
}

/// Trotter compensation of the dilated evolution e^{-i J sqrt(tau)} at order 2K.
inline LcsFormula build_J_tilde(const PauliSum &d, double tau, int K) {
    double dn = norm(d, 1);
    if (!(tau > 0) || 16 * dn * dn * tau >= 1) {
        throw std::invalid_argument("build_J_tilde: step violates tau < 1/(16||D||_1^2)");
    }
    PauliSum j = dilation_operator(d);
    if (j.empty()) {
        return LcsFormula::identity(d.num_qubits() + 1);
    }
    return build_V1(j, std::sqrt(tau), 2 * K);
}

// ---------------------------------------------------------------------------
// Time-dependent compensation W = T prod_j e^{L_j tau/M} o e^{-sum_j L_j tau/M}.

/// Midpoint times t0 + (j - 1/2) tau / M.
inline std::vector<double> slice_times(double t0, double tau, int M) {
    std::vector<double> t(M);
    for (int j = 0; j < M; j++) {
        t[j] = t0 + (j + 0.5) * tau / M;
    }
    return t;
}

/// (1 / 2M^2) sum_{j > j'} [L_j, L_j']
inline ChiMap second_order_w(const std::vector<ChiMap> &slices) {
    int M = static_cast<int>(slices.size());
    ChiMap w(slices.front().num_qubits());
    for (int j = 0; j < M; j++) {
        for (int jp = 0; jp < j; jp++) {
            w += compose(slices[j], slices[jp]);
            w -= compose(slices[jp], slices[j]);
        }
    }
    return w.scaled(1.0 / (2.0 * M * M));
}

class TimeOrderingSource : public TermSource {
   public:
    TimeOrderingSource(const LindbladSpec &spec, double t0, double tau, int M, int K) : tau_(tau), M_(M), K_(K) {
        n_ = spec.n;
        std::vector<double> sw;
        for (double t : slice_times(t0, tau, M)) {
            auto snap = spec.at(t);
            slices_.emplace_back(generator_pieces(snap));
            full_.push_back(slices_.back().sum());
            sw.push_back(slices_.back().norm());
        }
        slice_pick_ = Categorical(sw);
        w2_ = second_order_w(full_);
        w2_table_ = PairTable(w2_);
        weights_.assign(K + 1, 0.0);
        weights_[0] = 1;
        if (K >= 2) {
            weights_[2] = tau * tau * w2_.one_norm();
        }
        for (int k = 3; k <= K; k++) {
            weights_[k] = std::pow(2 * slice_pick_.total() * tau / M, k) / factorial(k);
        }
        orders_ = Categorical(weights_);
    }

    int num_qubits() const override { return n_; }
    const std::vector<double> &order_weights() const { return weights_; }
    const ChiMap &second_order() const { return w2_; }
    const std::vector<ChiMap> &slice_generators() const { return full_; }
    int draw_order(Rng &rng) const { return static_cast<int>(orders_.draw(rng)); }

    Branch draw_at_order(int k, Rng &rng) const {
        Branch b = Branch::identity(n_);
        if (k == 0) {
            return b;
        }
        if (k == 2) {
            w2_table_.draw_into(b, rng);
            return b;
        }
        int s1 = 0;
        for (int i = 0; i < k; i++) {
            s1 += static_cast<int>(rng() >> 63);
        }
        std::vector<size_t> ordered(s1);
        for (auto &j : ordered) {
            j = slice_pick_.draw(rng);
        }
        std::sort(ordered.begin(), ordered.end(), std::greater<>());
        for (size_t j : ordered) {
            slices_[j].draw_into(b, rng);
        }
        for (int i = s1; i < k; i++) {
            slices_[slice_pick_.draw(rng)].draw_into(b, rng);
        }
        if ((k - s1) & 1) {
            b.quarter += 2;
        }
        return b;
    }

    Branch draw(Rng &rng) const override { return draw_at_order(draw_order(rng), rng); }

    void apply_expected(Matrix &rho) const override {
        Graded g = graded_start(rho, K_);
        ChiMap mean(n_);
        for (auto &c : full_) {
            mean += c;
        }
        graded_exp(g, mean, -tau_ / M_, K_);
        for (auto &c : full_) {
            graded_exp(g, c, tau_ / M_, K_);
        }
        rho = graded_sum(g);
    }

   private:
    int n_ = 0;
    double tau_;
    int M_, K_;
    std::vector<PieceSet> slices_;
    std::vector<ChiMap> full_;
    Categorical slice_pick_;
    ChiMap w2_;
    PairTable w2_table_;
    std::vector<double> weights_;
    Categorical orders_;
};

inline LcsFormula build_W(const LindbladSpec &spec, double t0, double tau, int M, int K) {
    if (M < 1) {
        throw std::invalid_argument("build_W: need at least one slice");
    }
    if (!(tau > 0) || K < 0) {
        throw std::invalid_argument("build_W: invalid step or order");
    }
    if (!spec.time_dependent()) {
        std::clog << "build_W: time-independent generator, compensation is the identity\n";
        return LcsFormula::identity(spec.n);
    }
    double ln = 0;
    for (double t : slice_times(t0, tau, M)) {
        ln = std::max(ln, pauli_norm(spec.at(t)));
    }
    double bias = std::pow(2 * std::numbers::e * ln * tau / (K + 1), K + 1);
    if (K <= 1) {
        auto f = LcsFormula::identity(spec.n);
        return LcsFormula(f.source_ptr(), 1.0, bias, false, true);
    }
    auto src = std::make_shared<TimeOrderingSource>(spec, t0, tau, M, K);
    double mu = 0;
    for (double w : src->order_weights()) {
        mu += w;
    }
    return LcsFormula(src, mu, bias, false);
}

}  // namespace lcsim

#endif
