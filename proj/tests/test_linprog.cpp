#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "unlock/linprog.hpp"

using namespace unlock;

TEST_CASE("trivial equality system") {
    // min x0 + x1 s.t. x0 + x1 = 1
    Eigen::MatrixXd a(1, 2);
    a << 1, 1;
    Eigen::VectorXd b(1);
    b << 1;
    Eigen::VectorXd c(2);
    c << 1, 1;
    auto r = simplex_solve(a, b, c);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0));
}

TEST_CASE("chooses the cheaper vertex") {
    // min 2 x0 + x1 s.t. x0 + x1 = 1 -> x = (0, 1)
    Eigen::MatrixXd a(1, 2);
    a << 1, 1;
    Eigen::VectorXd b(1);
    b << 1;
    Eigen::VectorXd c(2);
    c << 2, 1;
    auto r = simplex_solve(a, b, c);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x(0) == doctest::Approx(0.0));
    CHECK(r.x(1) == doctest::Approx(1.0));
}

TEST_CASE("detects infeasibility") {
    // x0 = 1 and x0 = 2 cannot both hold
    Eigen::MatrixXd a(2, 1);
    a << 1, 1;
    Eigen::VectorXd b(2);
    b << 1, 2;
    auto r = simplex_solve(a, b, Eigen::VectorXd::Zero(1));
    CHECK(r.status == LpStatus::Infeasible);
}

TEST_CASE("detects unboundedness") {
    // min -x0 s.t. x0 - x1 = 0
    Eigen::MatrixXd a(1, 2);
    a << 1, -1;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd c(2);
    c << -1, 0;
    auto r = simplex_solve(a, b, c);
    CHECK(r.status == LpStatus::Unbounded);
}

TEST_CASE("handles negative rhs rows") {
    // x0 - x1 = -2, x0 + x1 = 4 -> x = (1, 3)
    Eigen::MatrixXd a(2, 2);
    a << 1, -1, 1, 1;
    Eigen::VectorXd b(2);
    b << -2, 4;
    auto r = simplex_solve(a, b, Eigen::VectorXd::Ones(2));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == doctest::Approx(3.0));
}

TEST_CASE("redundant rows survive phase 1") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 1, 2, 2;
    Eigen::VectorXd b(2);
    b << 1, 2;
    auto r = simplex_solve(a, b, Eigen::VectorXd::Ones(2));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0));
}

TEST_CASE("random LPs match feasibility brute force") {
    // Small random instances: verify optimality by checking the simplex
    // objective against every basic feasible solution.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-2, 2);
    int solved = 0;
    for (int inst = 0; inst < 200; ++inst) {
        int m = 2, n = 5;
        Eigen::MatrixXd a(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = u(rng);
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < n; ++j) x0(j) = std::abs(u(rng));
        Eigen::VectorXd b = a * x0;  // feasible by construction
        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) c(j) = std::abs(u(rng)) + 0.1;  // bounded below

        auto r = simplex_solve(a, b, c);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK((a * r.x - b).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK(r.x.minCoeff() >= -1e-9);

        // enumerate all bases
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> cols(n);
        for (int j = 0; j < n; ++j) cols[j] = j;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                Eigen::MatrixXd basis(m, 2);
                basis.col(0) = a.col(p);
                basis.col(1) = a.col(q);
                Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
                if (!lu.isInvertible()) continue;
                Eigen::VectorXd xb = lu.solve(b);
                if (xb.minCoeff() < -1e-10) continue;
                best = std::min(best, c(p) * xb(0) + c(q) * xb(1));
            }
        if (std::isfinite(best)) {
            CHECK(r.objective <= best + 1e-7);
            ++solved;
        }
    }
    CHECK(solved > 100);
}
