#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace adiabatic;

TEST(TimeGrid, UniformSamples)
{
    const TimeGrid g(2.0, 4);
    EXPECT_EQ(g.size(), 5u);
    EXPECT_DOUBLE_EQ(g.step(), 0.5);
    EXPECT_DOUBLE_EQ(g.tau(0), 0.0);
    EXPECT_DOUBLE_EQ(g.tau(3), 1.5);
    EXPECT_EQ(g.tau(4), 2.0);
}

TEST(TimeGrid, RejectsBadInput)
{
    EXPECT_THROW(TimeGrid(0.0, 10), InvalidArgument);
    EXPECT_THROW(TimeGrid(-1.0, 10), InvalidArgument);
    EXPECT_THROW(TimeGrid(NAN, 10), InvalidArgument);
    EXPECT_THROW(TimeGrid(1.0, 1), InvalidArgument);
}

TEST(TimeGrid, MismatchIsReported)
{
    EXPECT_NO_THROW(require_same_grid(TimeGrid(1.0, 10), TimeGrid(1.0, 10), "x"));
    EXPECT_THROW(require_same_grid(TimeGrid(1.0, 10), TimeGrid(1.0, 11), "x"), GridMismatch);
}

TEST(Errors, CarryKindModuleAndClass)
{
    try {
        throw DegenerateGap("levels 0,1 at tau=1");
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), "DegenerateGap");
        EXPECT_EQ(e.module(), "spectrum");
        EXPECT_EQ(e.error_class(), ErrorClass::Numerical);
        EXPECT_NE(std::string(e.what()).find("DegenerateGap"), std::string::npos);
    }
    EXPECT_EQ(ParseError("x").error_class(), ErrorClass::Input);
}

TEST(LinearAlgebra, HermitianExponentialMatchesTaylorOracle)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        CMatrix a(4, 4);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                a(r, c) = Complex(normal(rng), normal(rng));
        a = hermitian_part(a);
        const double s = 0.7;
        const CMatrix u = expi_hermitian(a, s);
        const CMatrix ref = oracle::taylor_exp(I * s * a);
        EXPECT_LT((u - ref).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((u.adjoint() * u - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(LinearAlgebra, GeneralExponentialHandlesNonHermitian)
{
    CMatrix a(2, 2);
    a << 0.0, 1.0, 0.0, 0.0; // nilpotent: exp(isA) = 1 + isA
    const CMatrix u = expi_general(a, 0.5);
    EXPECT_NEAR(std::abs(u(0, 1) - 0.5 * I), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(u(0, 0) - 1.0), 0.0, 1e-14);
}

TEST(LinearAlgebra, HermiticityDefect)
{
    CMatrix a = oracle::pauli_y();
    EXPECT_TRUE(is_hermitian(a));
    a(0, 1) += 1e-9;
    EXPECT_NEAR(hermiticity_defect(a), 1e-9, 1e-15);
    EXPECT_FALSE(is_hermitian(a));
}

TEST(Quadrature, TrapezoidIsExactForLines)
{
    const auto out = cumulative_trapezoid<double>(11, 0.1, [](std::size_t k) { return 2.0 * 0.1 * k + 1.0; });
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double t = 0.1 * k;
        EXPECT_NEAR(out[k], t * t + t, 1e-14);
    }
}

TEST(Quadrature, TrapezoidOnVectors)
{
    const auto out = cumulative_trapezoid<RVector>(3, 1.0, [](std::size_t k) -> RVector {
        return RVector::Constant(2, static_cast<double>(k));
    });
    EXPECT_EQ(out[0].size(), 2);
    EXPECT_DOUBLE_EQ(out[2](1), 2.0);
}

TEST(Phase, UnwrapRemovesJumps)
{
    std::vector<double> phase;
    for (int k = 0; k < 100; ++k)
        phase.push_back(std::remainder(0.3 * k, 2.0 * Pi));
    unwrap_in_place(phase);
    for (int k = 0; k < 100; ++k)
        EXPECT_NEAR(phase[static_cast<std::size_t>(k)], 0.3 * k, 1e-12);
}
