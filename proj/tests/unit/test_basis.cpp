#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mspem/basis.hpp"
#include "mspem/rng.hpp"

using namespace mspem;

TEST_SUITE_BEGIN("basis");

TEST_CASE("degree-0 single interval is an indicator") {
    SplineBasis basis(0, {0.0, 1.0});
    const auto row = basis.row(0.5);
    REQUIRE(row.size() == 1);
    CHECK(row[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("single-interval cubic basis reproduces Bernstein weights at 0.5") {
    SplineBasis basis(3, {0, 0, 0, 0, 1, 1, 1, 1});
    REQUIRE(basis.num_bases() == 4);
    const auto row = basis.row(0.5);
    CHECK(row[0] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(row[1] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(row[2] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(row[3] == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("partition of unity at 1000 random interior points") {
    SplineBasis basis = SplineBasis::uniform(3, 9, 0.0, 10.0);
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(0.0, 10.0);
        CHECK(std::abs(basis.row(x).sum() - 1.0) < 1e-10);
    }
}

TEST_CASE("local support: zero outside a basis function's knot span") {
    SplineBasis basis = SplineBasis::uniform(3, 8, 0.0, 8.0);
    const auto& kn = basis.knots();
    for (int k = 0; k < basis.num_bases(); ++k) {
        const double lo = kn[static_cast<size_t>(k)];
        const double hi = kn[static_cast<size_t>(k) + 4];
        for (double x : {lo - 0.5, hi + 0.5}) {
            if (x < basis.domain_min() || x > basis.domain_max()) continue;
            CHECK(basis.row(x)[k] == doctest::Approx(0.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("cubic basis is continuous across knots") {
    SplineBasis basis = SplineBasis::uniform(3, 7, 0.0, 5.0);
    for (double knot : {1.25, 2.5, 3.75}) {
        const auto below = basis.row(knot - 1e-8);
        const auto above = basis.row(knot + 1e-8);
        CHECK((below - above).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("right boundary evaluation returns the left limit") {
    SplineBasis basis = SplineBasis::uniform(3, 6, 0.0, 4.0);
    const auto edge = basis.row(4.0);
    CHECK(edge.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(edge[basis.num_bases() - 1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("entries stay within [0,1]") {
    SplineBasis basis = SplineBasis::uniform(3, 10, -2.0, 7.0);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto row = basis.row(rng.uniform(-2.0, 7.0));
        CHECK(row.minCoeff() >= 0.0);
        CHECK(row.maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("out-of-domain evaluation names the offending value") {
    SplineBasis basis = SplineBasis::uniform(3, 6, 0.0, 4.0);
    std::vector<double> bad{5.5};
    try {
        eval_basis(basis, bad);
        FAIL("expected domain_error");
    } catch (const std::domain_error& err) {
        CHECK(std::string(err.what()).find("5.5") != std::string::npos);
    }
}

TEST_CASE("quantile knots land on type-7 quantiles") {
    std::vector<double> values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    SplineBasis basis = SplineBasis::from_quantiles(3, 5, 1.0, 10.0, values);
    REQUIRE(basis.knots().size() == 9);
    CHECK(basis.knots()[4] == doctest::Approx(5.5));
}

TEST_CASE("tensor basis: constant x constant is a single column of ones") {
    SplineBasis cu(0, {0.0, 1.0});
    SplineBasis cv(0, {0.0, 1.0});
    std::vector<double> u{0.2, 0.5, 0.9};
    std::vector<double> v{0.1, 0.4, 0.8};
    const auto t = tensor_basis(cu, cv, u, v);
    REQUIRE(t.cols() == 1);
    for (int i = 0; i < 3; ++i) CHECK(t(i, 0) == doctest::Approx(1.0));
}

TEST_CASE("tensor basis rows sum to one and match marginal products") {
    SplineBasis bu = SplineBasis::uniform(1, 2, 0.0, 1.0);
    SplineBasis bv = SplineBasis::uniform(1, 2, 0.0, 1.0);
    std::vector<double> u{0.3};
    std::vector<double> v{0.7};
    const auto t = tensor_basis(bu, bv, u, v);
    REQUIRE(t.cols() == 4);
    CHECK(t.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    const auto ru = bu.row(0.3);
    const auto rv = bv.row(0.7);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            CHECK(t(0, a * 2 + b) == doctest::Approx(ru[a] * rv[b]).epsilon(1e-12));
}

TEST_CASE("tensor basis cubic rows sum to one at random interior points") {
    SplineBasis bu = SplineBasis::uniform(3, 4, 0.0, 1.0);
    SplineBasis bv = SplineBasis::uniform(3, 4, 0.0, 1.0);
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> u{rng.uniform()};
        std::vector<double> v{rng.uniform()};
        CHECK(tensor_basis(bu, bv, u, v).row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("tensor basis rejects length mismatch") {
    SplineBasis b = SplineBasis::uniform(3, 4, 0.0, 1.0);
    std::vector<double> u{0.1, 0.2};
    std::vector<double> v{0.1};
    CHECK_THROWS_AS(tensor_basis(b, b, u, v), std::invalid_argument);
}

TEST_CASE("ridge penalty layouts") {
    SUBCASE("one penalized block of size 3 is the identity") {
        std::vector<int> sizes{3};
        const auto block = ridge_penalty(sizes, std::vector<bool>{true});
        CHECK(block.matrix.isApprox(Eigen::MatrixXd::Identity(3, 3)));
    }
    SUBCASE("all blocks unpenalized gives the zero matrix") {
        std::vector<int> sizes{2, 3};
        const auto block = ridge_penalty(sizes, std::vector<bool>{false, false});
        CHECK(block.matrix.isZero(0.0));
    }
    SUBCASE("mixed blocks give diag(1,1,0)") {
        std::vector<int> sizes{2, 1};
        const auto block = ridge_penalty(sizes, std::vector<bool>{true, false});
        Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
        expected(0, 0) = expected(1, 1) = 1.0;
        CHECK(block.matrix.isApprox(expected));
    }
}

TEST_CASE("ridge penalty is exactly idempotent") {
    std::vector<int> sizes{1, 8, 6, 16, 5, 3};
    const auto block =
        ridge_penalty(sizes, std::vector<bool>{false, true, true, true, true, false});
    CHECK((block.matrix * block.matrix - block.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
