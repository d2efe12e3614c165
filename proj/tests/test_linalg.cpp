#include <doctest.h>

#include <cmath>

#include "gadc/dense.hpp"
#include "gadc/rng.hpp"
#include "gadc/sparse.hpp"

using namespace gadc;

TEST_CASE("dense matmul against hand-computed 2x2") {
    DenseMatrix a(2, 2), b(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    b(0, 0) = 5; b(0, 1) = 6; b(1, 0) = 7; b(1, 1) = 8;
    const DenseMatrix c = a * b;
    CHECK(c(0, 0) == 19);
    CHECK(c(0, 1) == 22);
    CHECK(c(1, 0) == 43);
    CHECK(c(1, 1) == 50);
}

TEST_CASE("csr from triplets merges duplicates and sorts columns") {
    const CsrMatrix m = csr_from_triplets(2, 3, {0, 0, 1, 0}, {2, 0, 1, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(m.nnz() == 3);
    CHECK(m.at(0, 0) == 2.0);
    CHECK(m.at(0, 2) == 5.0);  // 1 + 4 merged
    CHECK(m.at(1, 1) == 3.0);
    CHECK(m.col[0] == 0);      // ascending within row
    CHECK(m.col[1] == 2);
}

TEST_CASE("spmm equals dense multiply") {
    rng::Engine eng(11);
    const std::size_t n = 15, d = 4;
    std::vector<std::size_t> ti, tj;
    std::vector<double> tv;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (eng.uniform01() < 0.2) {
                ti.push_back(i);
                tj.push_back(j);
                tv.push_back(eng.normal());
            }
    const CsrMatrix a = csr_from_triplets(n, n, ti, tj, tv);
    DenseMatrix x(n, d);
    for (double& v : x.a) v = eng.normal();
    CHECK(max_abs_diff(spmm(a, x), a.to_dense() * x) < 1e-14);
}

TEST_CASE("linear solver inverts a random well-conditioned system") {
    rng::Engine eng(3);
    const std::size_t n = 40;
    DenseMatrix a(n, n);
    for (double& v : a.a) v = 0.1 * eng.normal();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 3.0;  // diagonally dominant
    DenseMatrix x_true(n, 3);
    for (double& v : x_true.a) v = eng.normal();
    const DenseMatrix b = a * x_true;
    const DenseMatrix x = solve_linear_system(a, b);
    CHECK(max_abs_diff(x, x_true) < 1e-10);
}

TEST_CASE("linear solver reports singular systems") {
    DenseMatrix a(2, 2);
    a(0, 0) = 1.0; a(0, 1) = 2.0;
    a(1, 0) = 2.0; a(1, 1) = 4.0;  // rank 1
    DenseMatrix b(2, 1, 1.0);
    CHECK_THROWS_AS(solve_linear_system(a, b), numeric_error);
}

TEST_CASE("smallest singular value of a diagonal matrix") {
    DenseMatrix a(3, 3);
    a(0, 0) = 4.0;
    a(1, 1) = 0.5;
    a(2, 2) = 2.0;
    CHECK(smallest_singular_value(a) == doctest::Approx(0.5).epsilon(1e-10));
}
