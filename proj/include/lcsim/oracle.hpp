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

#ifndef LCSIM_ORACLE_HPP
#define LCSIM_ORACLE_HPP

#include "lcsim/engine.hpp"

#include <fstream>
#include <iomanip>

namespace lcsim {

struct OracleResult {
    std::vector<double> times;
    std::vector<double> expectations;
    std::string method;
};

/// Widest register the dense oracle expands (a 1024 x 1024 generator).
inline constexpr int kOracleLimit = 5;

/// Column-stacking Lindbladian superoperator at time t.
inline Matrix lindbladian_superop(const LindbladSpec &spec, double t = 0) {
    return to_dense_superop(lindbladian_chi(spec.at(t)), kOracleLimit);
}

/// Tr(O e^{L t} rho0) at non-decreasing times via dense exponentials of the vectorized generator.
inline OracleResult exact_propagate(const LindbladSpec &spec, const Matrix &rho0, const Matrix &observable, const std::vector<double> &times) {
    if (spec.time_dependent()) {
        throw std::invalid_argument("exact_propagate: generator is time dependent");
    }
    Matrix s = lindbladian_superop(spec);
    Eigen::VectorXcd v0 = vec(rho0);
    OracleResult r{times, {}, "expm"};
    // Steps between consecutive sample times; equal increments reuse one exponential.
    Eigen::VectorXcd v = v0;
    double t = 0, cached_dt = -1;
    Matrix step;
    for (double target : times) {
        if (target < t - 1e-15) {
            throw std::invalid_argument("exact_propagate: times must be non-decreasing");
        }
        double dt = target - t;
        if (dt > 0) {
            if (std::abs(dt - cached_dt) > 1e-14 * std::max(1.0, dt)) {
                step = expm(dt * s);
                cached_dt = dt;
            }
            v = step * v;
        }
        t = target;
        r.expectations.push_back(trace_product(unvec(v), observable).real());
    }
    return r;
}

/// Classical RK4 on d rho/dt = L(t)[rho]; the final step into each sample time is shortened.
inline OracleResult rk4_propagate(const LindbladSpec &spec, const Matrix &rho0, const Matrix &observable, const std::vector<double> &times,
                                  double h) {
    if (!(h > 0)) {
        throw std::invalid_argument("rk4_propagate: step must be positive");
    }
    OracleResult r{times, {}, "rk4"};
    Matrix rho = rho0;
    double t = 0;
    std::optional<DenseGenerator> fixed;
    if (!spec.time_dependent()) {
        fixed.emplace(spec.at(0));
    }
    auto gen = [&](double tt, const Matrix &x) -> Matrix {
        if (fixed) {
            return (*fixed)(x);
        }
        return DenseGenerator(spec.at(tt))(x);
    };
    for (double target : times) {
        if (target < t - 1e-15) {
            throw std::invalid_argument("rk4_propagate: times must be non-decreasing");
        }
        while (t < target - 1e-14) {
            double dt = std::min(h, target - t);
            Matrix k1 = gen(t, rho);
            Matrix k2 = gen(t + dt / 2, rho + (dt / 2) * k1);
            Matrix k3 = gen(t + dt / 2, rho + (dt / 2) * k2);
            Matrix k4 = gen(t + dt, rho + dt * k3);
            rho += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
            t += dt;
        }
        t = target;
        r.expectations.push_back(trace_product(rho, observable).real());
    }
    return r;
}

/// Excited population of amplitude damping at rate gamma from |1><1|.
inline double amplitude_damping_population(double gamma, double t) { return std::exp(-gamma * t); }

inline void write_golden_csv(const std::string &path, const OracleResult &r) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot write " + path);
    }
    f << "time,expectation\n" << std::setprecision(12);
    for (size_t k = 0; k < r.times.size(); k++) {
        f << r.times[k] << ',' << r.expectations[k] << '\n';
    }
}

inline OracleResult read_golden_csv(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("cannot read " + path);
    }
    OracleResult r{{}, {}, "golden"};
    std::string line;
    std::getline(f, line);
    if (line != "time,expectation") {
        throw std::runtime_error("golden file " + path + " has an unexpected header");
    }
    while (std::getline(f, line)) {
        if (line.empty()) {
            continue;
        }
        auto comma = line.find(',');
        r.times.push_back(std::stod(line.substr(0, comma)));
        r.expectations.push_back(std::stod(line.substr(comma + 1)));
    }
    return r;
}

/// Applies a column-stacking superoperator to a d x d matrix.
inline Matrix apply_superop(const Matrix &s, const Matrix &x) {
    Eigen::VectorXcd v = s * vec(x);
    return unvec(v);
}

/// sum of singular values
inline double trace_norm(const Matrix &x) { return Eigen::JacobiSVD<Matrix>(x).singularValues().sum(); }

/// @brief Lower estimate of max ||S(X)||_1 over ||X||_1 <= 1.
///
/// Alternates between the best unitary for fixed rank-one input |u><v| (polar
/// factor) and the best rank-one input for a fixed unitary (top singular pair),
/// from several random starts.
inline double induced_trace_norm(const Matrix &s, int restarts = 8, int iterations = 60, uint64_t seed = 7) {
    const Eigen::Index d2 = s.rows();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d2))));
    Rng rng(seed);
    std::normal_distribution<double> g;
    double best = 0;
    auto eval = [&](const Eigen::VectorXcd &u, const Eigen::VectorXcd &v) { return trace_norm(apply_superop(s, u * v.adjoint())); };
    // Deterministic starts from basis pairs, then random ones.
    for (Eigen::Index i = 0; i < d; i++) {
        for (Eigen::Index j = 0; j < d; j++) {
            Eigen::VectorXcd u = Eigen::VectorXcd::Zero(d), v = Eigen::VectorXcd::Zero(d);
            u(i) = 1;
            v(j) = 1;
            best = std::max(best, eval(u, v));
        }
    }
    for (int r = 0; r < restarts; r++) {
        Eigen::VectorXcd u(d), v(d);
        for (Eigen::Index k = 0; k < d; k++) {
            u(k) = cplx(g(rng), g(rng));
            v(k) = cplx(g(rng), g(rng));
        }
        u.normalize();
        v.normalize();
        double prev = -1;
        for (int it = 0; it < iterations; it++) {
            Matrix x = apply_superop(s, u * v.adjoint());
            Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
            double val = svd.singularValues().sum();
            best = std::max(best, val);
            if (std::abs(val - prev) < 1e-15 * std::max(1.0, val)) {
                break;
            }
            prev = val;
            // Tr(W X) is maximized by W = V U^dag.
            Matrix w = svd.matrixV() * svd.matrixU().adjoint();
            // Tr(W S(u v^dag)) = conj(v)^T B u with B(j, i) = sum_r vec(W^T)_r S(r, i + d j).
            Eigen::VectorXcd wt = vec(w.transpose());
            Eigen::RowVectorXcd row = wt.transpose() * s;
            Matrix b(d, d);
            for (Eigen::Index j = 0; j < d; j++) {
                for (Eigen::Index i = 0; i < d; i++) {
                    b(j, i) = row(i + d * j);
                }
            }
            Eigen::JacobiSVD<Matrix> sb(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
            u = sb.matrixV().col(0);
            v = sb.matrixU().col(0);
        }
    }
    return best;
}

/// Trace norm of the unnormalized Choi matrix sum_ij |i><j| (x) S(|i><j|); an upper bound on the diamond norm.
inline double choi_trace_norm(const Matrix &s) {
    const Eigen::Index d2 = s.rows();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d2))));
    Matrix c = Matrix::Zero(d2, d2);
    for (Eigen::Index j = 0; j < d; j++) {
        for (Eigen::Index i = 0; i < d; i++) {
            Matrix e = Matrix::Zero(d, d);
            e(i, j) = 1;
            c.block(i * d, j * d, d, d) = apply_superop(s, e);
        }
    }
    return trace_norm(c);
}

}  // namespace lcsim

#endif
