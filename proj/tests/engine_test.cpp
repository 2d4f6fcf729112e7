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

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace {

using namespace lcsim;
using testutil::max_abs;

Matrix conj_by(const Matrix &u, const Matrix &rho) { return u * rho * u.adjoint(); }

TEST(TrotterStep, SingleTermIsExact) {
    PauliSum h(3);
    h.add("XYZ", 0.7);
    std::mt19937_64 rng(41);
    DensityState rho(testutil::random_density(8, rng));
    Matrix want = conj_by((cplx(0, -0.3) * testutil::dense_sum(h)).exp(), rho.mat);
    trotter_H_step(rho, h, 0.3);
    EXPECT_LT(max_abs(rho.mat - want), 1e-14);
}

TEST(TrotterStep, ProductOfExponentialsOnTwoQubits) {
    PauliSum h(2);
    h.add("ZZ", 1.0);
    h.add("XI", 1.0);
    double tau = 0.1;
    DensityState rho = DensityState::basis("00");
    Matrix u = (cplx(0, -tau) * testutil::kron_label("XI")).exp() * (cplx(0, -tau) * testutil::kron_label("ZZ")).exp();
    Matrix want = conj_by(u, rho.mat);
    trotter_H_step(rho, h, tau);
    EXPECT_LT(max_abs(rho.mat - want), 1e-12);
    EXPECT_NEAR(std::abs(rho.trace() - 1.0), 0, 1e-12);
    EXPECT_LT(rho.hermiticity_defect(), 1e-15);
}

TEST(TrotterStep, InsertionOrderOnRandomThreeQubitSums) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; trial++) {
        PauliSum h = testutil::random_sum(3, 6, rng, true);
        double tau = 0.37;
        Matrix u = Matrix::Identity(8, 8);
        for (auto &[p, c] : h.terms()) {
            u = (cplx(0, -tau * c.real()) * testutil::kron_label(p.label())).exp() * u;
        }
        TrotterCircuit circ(h, tau);
        EXPECT_LT(max_abs(circ.unitary() - u), 1e-12);
        Matrix rho = testutil::random_density(8, rng), want = conj_by(u, rho);
        circ.apply(rho);
        EXPECT_LT(max_abs(rho - want), 1e-12);
    }
}

TEST(DilatedStep, SurvivalPopulationExactMode) {
    double g = 1.5;
    PauliSum d = lowering_operator(1, 0, g);
    for (double tau : {0.01, 0.1, 0.3}) {
        DensityState rho = DensityState::basis("1");
        dilated_D_step(rho, d, tau, CoarseMode::exact);
        EXPECT_NEAR(rho.mat(1, 1).real(), std::pow(std::cos(std::sqrt(g * tau)), 2), 1e-14);
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
    }
}

TEST(DilatedStep, ZeroStepIsIdentity) {
    std::mt19937_64 rng(43);
    DensityState rho(testutil::random_density(4, rng));
    Matrix before = rho.mat;
    dilated_D_step(rho, testutil::random_sum(2, 3, rng, false), 0.0, CoarseMode::exact);
    EXPECT_LT(max_abs(rho.mat - before), 1e-15);
}

TEST(DilatedStep, FirstOrderExpansionSlope) {
    std::mt19937_64 rng(44);
    PauliSum d = testutil::random_sum(2, 3, rng, false);
    Matrix rho0 = testutil::random_density(4, rng);
    Matrix drho = chi_of_dissipator(d).apply(rho0);
    std::vector<double> taus, errs;
    for (double tau = 0.02; tau > 0.02 / 17; tau /= 2) {
        DensityState rho(rho0);
        dilated_D_step(rho, d, tau, CoarseMode::exact);
        taus.push_back(tau);
        errs.push_back(max_abs(rho.mat - rho0 - tau * drho));
    }
    EXPECT_NEAR(testutil::loglog_slope(taus, errs), 2.0, 0.1);
}

TEST(DilatedStep, TracePreservingAndHermitianInBothModes) {
    std::mt19937_64 rng(45);
    for (auto mode : {CoarseMode::exact, CoarseMode::trotter}) {
        for (int trial = 0; trial < 5; trial++) {
            PauliSum d = testutil::random_sum(3, 4, rng, false);
            DensityState rho(testutil::random_density(8, rng));
            dilated_D_step(rho, d, 0.05, mode);
            EXPECT_NEAR(std::abs(rho.trace() - 1.0), 0, 1e-12);
            EXPECT_LT(rho.hermiticity_defect(), 1e-13);
            Eigen::SelfAdjointEigenSolver<Matrix> es((rho.mat + rho.mat.adjoint()) / 2);
            EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
        }
    }
}

TEST(DilatedStep, MatchesFullDilationOracle) {
    // Local Kraus application agrees with the full (n+1)-qubit unitary and partial trace.
    std::mt19937_64 rng(46);
    PauliSum d(3);
    d.add("IXI", 0.4);
    d.add("IZY", cplx(0.1, 0.3));
    double tau = 0.07;
    PauliSum j = dilation_operator(d);
    Matrix u = (cplx(0, -std::sqrt(tau)) * testutil::dense_sum(j)).exp();
    Matrix rho0 = testutil::random_density(8, rng);
    Matrix big = Matrix::Zero(16, 16);
    big.topLeftCorner(8, 8) = rho0;
    big = conj_by(u, big);
    Matrix want = big.topLeftCorner(8, 8) + big.bottomRightCorner(8, 8);
    DensityState rho(rho0);
    dilated_D_step(rho, d, tau, CoarseMode::exact);
    EXPECT_LT(max_abs(rho.mat - want), 1e-13);
}

TEST(DilatedStep, TrotterModeConvergesLinearly) {
    PauliSum d(1);
    d.add("X", 0.6);
    d.add("Y", 0.3);
    d.add("Z", cplx(0, 0.4));
    Matrix rho0 = DensityState::basis("1").mat;
    std::vector<double> taus, errs;
    for (double tau = 0.04; tau > 0.04 / 17; tau /= 2) {
        DensityState a(rho0), b(rho0);
        dilated_D_step(a, d, tau, CoarseMode::exact);
        dilated_D_step(b, d, tau, CoarseMode::trotter);
        taus.push_back(tau);
        errs.push_back(max_abs(a.mat - b.mat));
    }
    // O(tau) is the guaranteed rate; tracing out the ancilla can cancel the leading term.
    EXPECT_GE(testutil::loglog_slope(taus, errs), 0.9);
    EXPECT_GT(errs.front(), 1e-8);
}

TEST(ExactStep, ZeroGeneratorIsIdentity) {
    std::mt19937_64 rng(47);
    DensityState rho(testutil::random_density(4, rng));
    Matrix before = rho.mat;
    exact_step(rho, ChiMap(2), 0.5);
    EXPECT_LT(max_abs(rho.mat - before), 1e-15);
}

TEST(ExactStep, AmplitudeDampingPopulation) {
    DensityState rho = DensityState::basis("1");
    exact_step(rho, lindbladian_chi(amplitude_damping_spec(1.5).at(0)), 1.0);
    EXPECT_NEAR(rho.mat(1, 1).real(), std::exp(-1.5), 1e-12);
    EXPECT_NEAR(rho.mat(1, 1).real(), 0.223130, 1e-6);
}

TEST(ExactStep, TracePreservedForRandomLindbladians) {
    std::mt19937_64 rng(48);
    for (int trial = 0; trial < 5; trial++) {
        LindbladSnapshot s{testutil::random_sum(2, 4, rng, true), {testutil::random_sum(2, 3, rng, false)}};
        DensityState rho(testutil::random_density(4, rng));
        exact_step(rho, lindbladian_chi(s), 0.8);
        EXPECT_NEAR(std::abs(rho.trace() - 1.0), 0, 1e-10);
        EXPECT_LT(rho.hermiticity_defect(), 1e-10);
    }
}

TEST(DensityState, BasisLabel) {
    DensityState r = DensityState::basis("10000");
    EXPECT_EQ(r.n, 5);
    EXPECT_EQ(r.mat(1, 1), cplx(1, 0));
    EXPECT_THROW(DensityState::basis("102"), std::invalid_argument);
    EXPECT_EQ(coarse_mode_from_string("exact"), CoarseMode::exact);
    EXPECT_THROW(coarse_mode_from_string("rk4"), std::invalid_argument);
}

}  // namespace
