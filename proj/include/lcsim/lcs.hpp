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

#ifndef LCSIM_LCS_HPP
#define LCSIM_LCS_HPP

#include "lcsim/superop.hpp"

#include <memory>
#include <numbers>
#include <random>

namespace lcsim {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t v) {
    v += 0x9E3779B97F4A7C15ULL;
    v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ULL;
    v = (v ^ (v >> 27)) * 0x94D049BB133111EBULL;
    return v ^ (v >> 31);
}

/// Generator for one Monte-Carlo round: seeded from global_seed ^ round.
inline Rng round_rng(uint64_t global_seed, uint64_t round) { return Rng(splitmix64(global_seed ^ round)); }

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// @brief Draws an index with probability proportional to a fixed weight.
class Categorical {
   public:
    Categorical() = default;
    explicit Categorical(const std::vector<double> &weights) {
        cdf_.reserve(weights.size());
        double acc = 0;
        for (double w : weights) {
            if (!(w >= 0)) {
                throw std::invalid_argument("Categorical: negative or NaN weight");
            }
            acc += w;
            cdf_.push_back(acc);
        }
        total_ = acc;
    }

    double total() const { return total_; }
    size_t size() const { return cdf_.size(); }
    double probability(size_t k) const { return (cdf_[k] - (k ? cdf_[k - 1] : 0.0)) / total_; }

    size_t draw(Rng &rng) const {
        if (!(total_ > 0)) {
            throw std::logic_error("Categorical: nothing to draw from");
        }
        double u = uniform01(rng) * total_;
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        size_t k = static_cast<size_t>(it - cdf_.begin());
        return k < cdf_.size() ? k : cdf_.size() - 1;
    }

   private:
    std::vector<double> cdf_;
    double total_ = 0;
};

/// @brief rho -> 1/2 (e^{i phase} P_a rho P_b + e^{-i phase} P_b rho P_a).
struct PauliConjugateTerm {
    double phase = 0;
    PauliString alpha;
    PauliString beta;

    bool is_identity() const { return alpha.is_identity() && beta.is_identity() && std::cos(phase) == 1.0; }
};

/// Applies a term as the deterministic two-branch sum.
inline void apply_term(const PauliConjugateTerm &t, Matrix &rho) {
    if (t.alpha == t.beta) {
        double c = std::cos(t.phase);
        if (t.alpha.is_identity()) {
            if (c != 1.0) {
                rho *= c;
            }
            return;
        }
        rho = pauli_sandwich(rho, t.alpha, t.alpha, c);
        return;
    }
    cplx e = std::polar(0.5, t.phase);
    Matrix a = pauli_sandwich(rho, t.alpha, t.beta, e);
    add_pauli_sandwich(a, rho, t.beta, t.alpha, std::conj(e));
    rho = std::move(a);
}

inline ChiMap term_chi(const PauliConjugateTerm &t) {
    ChiMap m(t.alpha.num_qubits());
    cplx e = std::polar(0.5, t.phase);
    m.add(t.alpha, t.beta, e);
    m.add(t.beta, t.alpha, std::conj(e));
    return m.prune(0);
}

/// @brief One branch e^{i phase} P_left rho P_right of a sampled product.
///
/// Products of branches collect Pauli phases as quarter turns so no rounding
/// enters until the final angle is formed.
struct Branch {
    double phase = 0;
    int quarter = 0;
    PauliString left;
    PauliString right;

    static Branch identity(int n) { return {0, 0, PauliString::identity(n), PauliString::identity(n)}; }

    /// this <- this o (e^{i phi} P_a [.] P_b): the new factor acts first.
    void then_inner(const PauliString &a, const PauliString &b, double phi) {
        auto l = multiply(left, a);
        auto r = multiply(b, right);
        left = l.product;
        right = r.product;
        quarter += l.phase + r.phase;
        phase += phi;
    }

    void then_inner(const Branch &o) {
        then_inner(o.left, o.right, o.phase + o.quarter * std::numbers::pi / 2);
    }

    PauliConjugateTerm term() const { return {phase + (quarter % 4) * std::numbers::pi / 2, left, right}; }
};

/// @brief Source of sampled terms for an LCS formula.
///
/// draw() returns a branch whose expectation is (target map)/mu; the formula
/// applies it symmetrized. apply_expected() evaluates the full truncated map.
class TermSource {
   public:
    virtual ~TermSource() = default;
    virtual int num_qubits() const = 0;
    virtual Branch draw(Rng &rng) const = 0;
    virtual void apply_expected(Matrix &rho) const = 0;
};

struct WeightedTerm {
    double weight;
    PauliConjugateTerm term;
};

/// Explicit term list with merged conjugate pairs.
class ExplicitSource : public TermSource {
   public:
    ExplicitSource(int n, std::vector<WeightedTerm> terms) : n_(n), terms_(std::move(terms)) {
        std::vector<double> w;
        for (auto &t : terms_) {
            if (!(t.weight > 0)) {
                throw std::invalid_argument("ExplicitSource: weights must be positive");
            }
            w.push_back(t.weight);
        }
        pick_ = Categorical(w);
    }

    int num_qubits() const override { return n_; }
    const std::vector<WeightedTerm> &terms() const { return terms_; }

    Branch draw(Rng &rng) const override {
        const auto &t = terms_[pick_.draw(rng)].term;
        if (t.alpha != t.beta && (rng() >> 63)) {
            return {-t.phase, 0, t.beta, t.alpha};
        }
        return {t.phase, 0, t.alpha, t.beta};
    }

    void apply_expected(Matrix &rho) const override {
        Matrix out = Matrix::Zero(rho.rows(), rho.cols());
        for (auto &t : terms_) {
            Matrix r = rho;
            apply_term(t.term, r);
            out += t.weight * r;
        }
        rho = std::move(out);
    }

   private:
    int n_;
    std::vector<WeightedTerm> terms_;
    Categorical pick_;
};

/// Diamond-norm bookkeeping of an LCS approximation of some target map.
struct LcsBound {
    double mu = 1;
    double bias = 0;
    bool cptp_target = true;
};

/// Composition rule for outer o inner. When both targets are channels
/// bias = e1 + e2 + e1 e2, otherwise mu_o e_i + mu_i e_o + e_o e_i.
inline LcsBound compose_bounds(const LcsBound &outer, const LcsBound &inner) {
    LcsBound r;
    r.mu = outer.mu * inner.mu;
    r.cptp_target = outer.cptp_target && inner.cptp_target;
    if (r.cptp_target) {
        r.bias = outer.bias + inner.bias + outer.bias * inner.bias;
    } else {
        r.bias = outer.mu * inner.bias + inner.mu * outer.bias + outer.bias * inner.bias;
    }
    return r;
}

/// @brief A (mu, bias) LCS formula over Pauli-conjugate terms.
class LcsFormula {
   public:
    LcsFormula() = default;
    LcsFormula(std::shared_ptr<const TermSource> source, double mu, double bias, bool cptp_target, bool identity = false)
        : source_(std::move(source)), bound_{mu, bias, cptp_target}, identity_(identity) {}

    static LcsFormula identity(int n) {
        std::vector<WeightedTerm> t{{1.0, {0, PauliString::identity(n), PauliString::identity(n)}}};
        return LcsFormula(std::make_shared<ExplicitSource>(n, std::move(t)), 1.0, 0.0, true, true);
    }

    int num_qubits() const { return source_->num_qubits(); }
    double mu() const { return bound_.mu; }
    double bias() const { return bound_.bias; }
    bool cptp_target() const { return bound_.cptp_target; }
    const LcsBound &bound() const { return bound_; }
    bool is_identity() const { return identity_; }
    const TermSource &source() const { return *source_; }
    std::shared_ptr<const TermSource> source_ptr() const { return source_; }

    /// Explicit term list, or nullptr for hierarchical formulas.
    const std::vector<WeightedTerm> *explicit_terms() const {
        auto *e = dynamic_cast<const ExplicitSource *>(source_.get());
        return e ? &e->terms() : nullptr;
    }

    Branch sample_branch(Rng &rng) const {
        if (!(bound_.mu > 0)) {
            throw std::logic_error("LcsFormula::sample: empty formula");
        }
        return source_->draw(rng);
    }

    PauliConjugateTerm sample(Rng &rng) const { return sample_branch(rng).term(); }

    /// rho <- (truncated target map)[rho]
    void apply_expected(Matrix &rho) const { source_->apply_expected(rho); }

    /// Dense column-stacking matrix of the expected map.
    Matrix expected_superop(int limit = kSuperopLimit) const {
        int n = num_qubits();
        if (n > limit) {
            throw std::invalid_argument("expected_superop: qubit count exceeds the superoperator limit");
        }
        size_t d = size_t{1} << n;
        Matrix s(d * d, d * d);
        for (size_t j = 0; j < d; j++) {
            for (size_t i = 0; i < d; i++) {
                Matrix e = Matrix::Zero(d, d);
                e(i, j) = 1;
                apply_expected(e);
                s.col(i + d * j) = vec(e);
            }
        }
        return s;
    }

   private:
    std::shared_ptr<const TermSource> source_;
    LcsBound bound_;
    bool identity_ = false;
};

/// Exact formula for a Hermitian process matrix; (a,b) and (b,a) merge into one term.
inline LcsFormula from_chi(const ChiMap &x, double tol = 1e-12) {
    if (!x.is_hermitian(tol)) {
        throw std::invalid_argument("from_chi: process matrix is not Hermitian");
    }
    int n = x.num_qubits();
    std::vector<WeightedTerm> terms;
    double mu = 0;
    for (auto &[k, v] : x.entries()) {
        double r = std::abs(v);
        if (r == 0) {
            continue;
        }
        if (k.first == k.second) {
            terms.push_back({r, {std::arg(v), k.first, k.second}});
            mu += r;
        } else if (k.first < k.second) {
            cplx w = 0.5 * (v + std::conj(x.at(k.second, k.first)));
            terms.push_back({2 * std::abs(w), {std::arg(w), k.first, k.second}});
            mu += 2 * std::abs(w);
        }
    }
    if (terms.empty()) {
        return LcsFormula(std::make_shared<ExplicitSource>(n, std::vector<WeightedTerm>{}), 0.0, 0.0, false);
    }
    bool ident = x.size() == 1 && x.entries().begin()->first.first.is_identity() &&
                 x.entries().begin()->first.second.is_identity() && x.entries().begin()->second == cplx(1, 0);
    return LcsFormula(std::make_shared<ExplicitSource>(n, std::move(terms)), mu, 0.0, ident, ident);
}

/// Reconstructs the map sum_w w V_term as a process matrix.
inline ChiMap reconstruct_chi(const LcsFormula &f) {
    auto *terms = f.explicit_terms();
    if (!terms) {
        throw std::invalid_argument("reconstruct_chi: formula has no explicit term list");
    }
    ChiMap m(f.num_qubits());
    for (auto &t : *terms) {
        m += term_chi(t.term).scaled(t.weight);
    }
    return m;
}

/// Sequential composition outer o inner; branches merge into one term per draw.
class ComposedSource : public TermSource {
   public:
    ComposedSource(LcsFormula outer, LcsFormula inner) : outer_(std::move(outer)), inner_(std::move(inner)) {
        if (outer_.num_qubits() != inner_.num_qubits()) {
            throw std::invalid_argument("compose: qubit count mismatch");
        }
    }
    int num_qubits() const override { return outer_.num_qubits(); }
    Branch draw(Rng &rng) const override {
        Branch b = outer_.sample_branch(rng);
        b.then_inner(inner_.sample_branch(rng));
        return b;
    }
    void apply_expected(Matrix &rho) const override {
        inner_.apply_expected(rho);
        outer_.apply_expected(rho);
    }

   private:
    LcsFormula outer_, inner_;
};

inline LcsFormula compose(const LcsFormula &outer, const LcsFormula &inner) {
    if (outer.is_identity()) {
        return inner;
    }
    if (inner.is_identity()) {
        return outer;
    }
    auto b = compose_bounds(outer.bound(), inner.bound());
    return LcsFormula(std::make_shared<ComposedSource>(outer, inner), b.mu, b.bias, b.cptp_target);
}

/// Ordered branch with probability, for the reuse identity.
struct WeightedBranch {
    double probability;
    double phase;
    PauliString left;
    PauliString right;
};

/// Splits every merged term of an explicit formula into its two orientations.
inline std::vector<WeightedBranch> ordered_branches(const LcsFormula &f) {
    auto *terms = f.explicit_terms();
    if (!terms) {
        throw std::invalid_argument("ordered_branches: formula has no explicit term list");
    }
    std::vector<WeightedBranch> out;
    for (auto &t : *terms) {
        double p = t.weight / f.mu();
        if (t.term.alpha == t.term.beta) {
            out.push_back({p, t.term.phase, t.term.alpha, t.term.beta});
        } else {
            out.push_back({p / 2, t.term.phase, t.term.alpha, t.term.beta});
            out.push_back({p / 2, -t.term.phase, t.term.beta, t.term.alpha});
        }
    }
    return out;
}

/// Throws unless Pr(a,b) = Pr(b,a) and phase(a,b) = -phase(b,a).
inline void require_symmetric(const std::vector<WeightedBranch> &bs, double tol = 1e-12) {
    for (auto &b : bs) {
        double mass = 0, phased = 0;
        double own = 0;
        for (auto &c : bs) {
            if (c.left == b.right && c.right == b.left) {
                mass += c.probability;
                phased += c.probability * std::remainder(c.phase + b.phase, 2 * std::numbers::pi);
            }
            if (c.left == b.left && c.right == b.right) {
                own += c.probability;
            }
        }
        if (std::abs(mass - own) > tol || std::abs(phased) > tol) {
            throw std::invalid_argument("reuse_equivalence_check: formula is not Hermitian-symmetric");
        }
    }
}

/// Max-entry deviation between (i) the expectation of applying sampled f and g
/// terms one after another and (ii) the merged product terms (one ancilla).
inline double reuse_equivalence_check(const std::vector<WeightedBranch> &f, const std::vector<WeightedBranch> &g) {
    require_symmetric(f);
    require_symmetric(g);
    if (f.empty() || g.empty()) {
        return 0;
    }
    int n = f.front().left.num_qubits();
    if (g.front().left.num_qubits() != n) {
        throw std::invalid_argument("reuse_equivalence_check: qubit count mismatch");
    }
    ChiMap sequential(n), merged(n);
    for (auto &a : f) {
        for (auto &b : g) {
            double p = a.probability * b.probability;
            // (i) V_a o V_b, both symmetrized
            ChiMap va = term_chi({a.phase, a.left, a.right});
            ChiMap vb = term_chi({b.phase, b.left, b.right});
            sequential += compose(va, vb).scaled(p);
            // (ii) single symmetrized term of the product branch
            Branch m{a.phase, 0, a.left, a.right};
            m.then_inner(b.left, b.right, b.phase);
            merged += term_chi(m.term()).scaled(p);
        }
    }
    return max_abs(to_dense_superop(sequential) - to_dense_superop(merged));
}

inline double reuse_equivalence_check(const LcsFormula &f, const LcsFormula &g) {
    return reuse_equivalence_check(ordered_branches(f), ordered_branches(g));
}

}  // namespace lcsim

#endif
