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

#include <cstdio>
#include <filesystem>

namespace {

using namespace lcsim;

Matrix projector(int d, int i) {
    Matrix o = Matrix::Zero(d, d);
    o(i, i) = 1;
    return o;
}

std::vector<double> grid(double t, int n) {
    std::vector<double> out;
    for (int k = 0; k <= n; k++) {
        out.push_back(t * k / n);
    }
    return out;
}

TEST(Exact, ZeroGeneratorIsConstant) {
    LindbladSpec spec(PauliSum(2), {});
    std::mt19937_64 rng(3);
    Matrix rho = testutil::random_density(4, rng);
    Matrix o = testutil::random_hermitian(4, rng);
    auto r = exact_propagate(spec, rho, o, grid(2, 4));
    for (double v : r.expectations) {
        EXPECT_NEAR(v, trace_product(rho, o).real(), 1e-12);
    }
}

TEST(Exact, AmplitudeDampingPopulationAndCoherence) {
    const double g = 1.5;
    LindbladSpec spec = amplitude_damping_spec(g);
    auto ts = grid(2, 8);
    auto pop = exact_propagate(spec, DensityState::basis("1").mat, projector(2, 1), ts);
    Matrix plus = Matrix::Constant(2, 2, 0.5);
    Matrix x = PauliString::from_label("X").dense();
    auto coh = exact_propagate(spec, plus, x, ts);
    for (size_t k = 0; k < ts.size(); k++) {
        EXPECT_NEAR(pop.expectations[k], amplitude_damping_population(g, ts[k]), 1e-12);
        EXPECT_NEAR(coh.expectations[k], std::exp(-g * ts[k] / 2), 1e-12);
    }
}

TEST(Exact, RejectsTimeDependentGenerator) {
    EXPECT_THROW(exact_propagate(driven_qubit_spec(), projector(2, 1), projector(2, 1), {1.0}), std::invalid_argument);
}

TEST(Rk4, MatchesExponentialOnRandomGenerator) {
    std::mt19937_64 rng(17);
    LindbladSpec spec(testutil::random_sum(2, 5, rng, true), {testutil::random_sum(2, 3, rng, false)});
    Matrix rho = testutil::random_density(4, rng);
    Matrix o = testutil::random_hermitian(4, rng);
    auto ts = grid(0.5, 5);
    auto ex = exact_propagate(spec, rho, o, ts);
    auto rk = rk4_propagate(spec, rho, o, ts, 1e-4);
    for (size_t k = 0; k < ts.size(); k++) {
        EXPECT_NEAR(rk.expectations[k], ex.expectations[k], 1e-8);
    }
}

TEST(Rk4, FourthOrderOnDrivenQubit) {
    LindbladSpec spec = driven_qubit_spec(0.2, 0.5, 3.0, 1.5);
    Matrix rho = DensityState::basis("1").mat;
    Matrix o = PauliString::from_label("Y").dense();
    double ref = rk4_propagate(spec, rho, o, {1.0}, 1e-4).expectations[0];
    std::vector<double> hs{0.1, 0.05, 0.025}, errs;
    for (double h : hs) {
        errs.push_back(std::abs(rk4_propagate(spec, rho, o, {1.0}, h).expectations[0] - ref));
    }
    EXPECT_NEAR(testutil::loglog_slope(hs, errs), 4.0, 0.3);
}

TEST(Rk4, PreservesTrace) {
    LindbladSpec spec = tfi_spec(3);
    Matrix rho = DensityState::basis("100").mat;
    auto r = rk4_propagate(spec, rho, Matrix::Identity(8, 8), grid(1, 4), 1e-2);
    for (double v : r.expectations) {
        EXPECT_NEAR(v, 1.0, 1e-9);
    }
}

TEST(Rk4, ArgumentChecks) {
    LindbladSpec spec = amplitude_damping_spec();
    EXPECT_THROW(rk4_propagate(spec, projector(2, 1), projector(2, 1), {1.0}, 0), std::invalid_argument);
    EXPECT_THROW(rk4_propagate(spec, projector(2, 1), projector(2, 1), {1.0, 0.5}, 0.1), std::invalid_argument);
}

TEST(Golden, RoundTrip) {
    auto path = std::filesystem::temp_directory_path() / "lcsim_golden_roundtrip.csv";
    OracleResult r{{0, 0.25, 0.5}, {1.0, 0.123456789012, -0.5}, "expm"};
    write_golden_csv(path.string(), r);
    auto back = read_golden_csv(path.string());
    ASSERT_EQ(back.times.size(), 3u);
    for (size_t k = 0; k < 3; k++) {
        EXPECT_DOUBLE_EQ(back.times[k], r.times[k]);
        EXPECT_NEAR(back.expectations[k], r.expectations[k], 1e-12);
    }
    std::filesystem::remove(path);
    EXPECT_THROW(read_golden_csv(path.string()), std::runtime_error);
}

TEST(Golden, DampedTfiChainAgreesWithExternalIntegrator) {
    // tfi5_golden.csv comes from make_golden.py, an independent row-major integrator.
    auto golden = read_golden_csv(std::string(LCSIM_TEST_DATA) + "/tfi5_golden.csv");
    ASSERT_EQ(golden.times.size(), 11u);
    LindbladSpec spec = tfi_spec(5);
    Matrix z0 = PauliString::from_label("ZIIII").dense();
    auto ex = exact_propagate(spec, DensityState::basis("10000").mat, z0, golden.times);
    auto rk = rk4_propagate(spec, DensityState::basis("10000").mat, z0, golden.times, 1e-3);
    for (size_t k = 0; k < golden.times.size(); k++) {
        EXPECT_NEAR(ex.expectations[k], golden.expectations[k], 1e-9) << k;
        EXPECT_NEAR(rk.expectations[k], golden.expectations[k], 1e-9) << k;
    }
    EXPECT_NEAR(golden.expectations.back(), 0.0627916310503, 1e-12);
}

TEST(Norms, TraceNormAndInducedNorm) {
    Matrix m(2, 2);
    m << 1, 0, 0, -2;
    EXPECT_NEAR(trace_norm(m), 3, 1e-12);
    Matrix id = Matrix::Identity(4, 4);
    EXPECT_NEAR(induced_trace_norm(id), 1, 1e-9);
    EXPECT_NEAR(choi_trace_norm(id), 2, 1e-9);
    // Transpose: unit induced norm, but its Choi matrix is the swap with trace norm d^2.
    Matrix swap = Matrix::Zero(4, 4);
    for (int i = 0; i < 2; i++) {
        for (int j = 0; j < 2; j++) {
            swap(j + 2 * i, i + 2 * j) = 1;
        }
    }
    EXPECT_NEAR(induced_trace_norm(swap), 1, 1e-9);
    EXPECT_NEAR(choi_trace_norm(swap), 4, 1e-9);
    Matrix s = 2.5 * id;
    EXPECT_NEAR(induced_trace_norm(s), 2.5, 1e-9);
}

TEST(Norms, InducedNormNeverExceedsChoiBound) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 5; trial++) {
        Matrix s = testutil::random_matrix(4, rng);
        EXPECT_LE(induced_trace_norm(s), choi_trace_norm(s) * (1 + 1e-9));
    }
}

}  // namespace
