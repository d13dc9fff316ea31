#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kscal/sym_matrix.hpp"

using namespace kscal;
using Catch::Approx;

namespace {

template <std::size_t P>
double frob_diff(const Mat<P>& x, const Mat<P>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
            const double d = x(i, j) - y(i, j);
            s += d * d;
        }
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("matrix product and transpose on a worked example") {
    Mat<2> x;
    x(0, 0) = 1.0; x(0, 1) = 2.0;
    x(1, 0) = 3.0; x(1, 1) = 4.0;
    Mat<2> y;
    y(0, 0) = 5.0; y(0, 1) = 6.0;
    y(1, 0) = 7.0; y(1, 1) = 8.0;

    const Mat<2> p = x * y;
    REQUIRE(p(0, 0) == 19.0);
    REQUIRE(p(0, 1) == 22.0);
    REQUIRE(p(1, 0) == 43.0);
    REQUIRE(p(1, 1) == 50.0);

    const Mat<2> t = x.transpose();
    REQUIRE(t(0, 1) == 3.0);
    REQUIRE(t(1, 0) == 2.0);

    const ParamVec<2> v = x * ParamVec<2>{1.0, -1.0};
    REQUIRE(v[0] == -1.0);
    REQUIRE(v[1] == -1.0);

    REQUIRE(frob_diff(Mat<2>::identity() * x * Mat<2>::identity() * y, p) == 0.0);
}

TEST_CASE("symmetrized construction averages off-diagonal entries") {
    Mat<2> m;
    m(0, 0) = 2.0; m(0, 1) = 1.0;
    m(1, 0) = 3.0; m(1, 1) = 5.0;
    const SymMat<2> s = SymMat<2>::symmetrized(m);
    REQUIRE(s(0, 1) == 2.0);
    REQUIRE(s(1, 0) == 2.0);
    REQUIRE(s(0, 0) == 2.0);
    REQUIRE(s.trace() == 7.0);

    SymMat<2> t;
    t.set(0, 1, -4.0);
    REQUIRE(t(1, 0) == -4.0);
}

TEST_CASE("jacobi eigenvalues match the closed form for a 2x2") {
    // [[2,1],[1,2]] has eigenvalues 1 and 3 with eigenvectors (1,-1), (1,1).
    SymMat<2> m;
    m.set(0, 0, 2.0);
    m.set(1, 1, 2.0);
    m.set(0, 1, 1.0);
    const auto e = jacobi_eigen(m);
    const double lo = std::min(e.values[0], e.values[1]);
    const double hi = std::max(e.values[0], e.values[1]);
    REQUIRE(lo == Approx(1.0).margin(1e-12));
    REQUIRE(hi == Approx(3.0).margin(1e-12));

    // Reconstruction V diag(lambda) V^T == M.
    Mat<2> d;
    d(0, 0) = e.values[0];
    d(1, 1) = e.values[1];
    const Mat<2> rec = e.vectors * d * e.vectors.transpose();
    REQUIRE(frob_diff(rec, m.as_mat()) < 1e-12);

    // Columns orthonormal.
    const Mat<2> g = e.vectors.transpose() * e.vectors;
    REQUIRE(frob_diff(g, Mat<2>::identity()) < 1e-12);
}

TEST_CASE("jacobi handles a 3x3 with a known spectrum") {
    // diag(1,2,3) conjugated stays {1,2,3}; use an exact small case instead:
    // [[4,0,0],[0,1,2],[0,2,1]] has eigenvalues {4, 3, -1}.
    SymMat<3> m;
    m.set(0, 0, 4.0);
    m.set(1, 1, 1.0);
    m.set(2, 2, 1.0);
    m.set(1, 2, 2.0);
    auto e = jacobi_eigen(m);
    std::array<double, 3> vals{e.values[0], e.values[1], e.values[2]};
    std::sort(vals.begin(), vals.end());
    REQUIRE(vals[0] == Approx(-1.0).margin(1e-12));
    REQUIRE(vals[1] == Approx(3.0).margin(1e-12));
    REQUIRE(vals[2] == Approx(4.0).margin(1e-12));
}

TEST_CASE("symmetric inverse matches the adjugate formula") {
    // [[4,1],[1,2]] det 7, inverse (1/7)[[2,-1],[-1,4]].
    SymMat<2> m;
    m.set(0, 0, 4.0);
    m.set(1, 1, 2.0);
    m.set(0, 1, 1.0);
    const SymMat<2> inv = sym_inverse(m);
    REQUIRE(inv(0, 0) == Approx(2.0 / 7.0).epsilon(1e-12));
    REQUIRE(inv(1, 1) == Approx(4.0 / 7.0).epsilon(1e-12));
    REQUIRE(inv(0, 1) == Approx(-1.0 / 7.0).margin(1e-12));

    // Works for indefinite matrices too.
    SymMat<2> ind;
    ind.set(0, 0, 1.0);
    ind.set(1, 1, -2.0);
    const SymMat<2> iv = sym_inverse(ind);
    REQUIRE(iv(0, 0) == Approx(1.0).epsilon(1e-12));
    REQUIRE(iv(1, 1) == Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("singular matrices are rejected with the condition estimate") {
    SymMat<2> rank1;
    rank1.set(0, 0, 1.0);
    rank1.set(0, 1, 1.0);
    rank1.set(1, 1, 1.0);
    REQUIRE_THROWS_AS(sym_inverse(rank1), SingularMatrixError);

    SymMat<2> zero;
    REQUIRE_THROWS_AS(sym_inverse(zero), SingularMatrixError);
}

TEST_CASE("inverse square root satisfies A M A = I") {
    SymMat<2> m;
    m.set(0, 0, 4.0);
    m.set(1, 1, 1.0);
    m.set(0, 1, 0.5);
    const SymMat<2> a = sym_inverse_sqrt(m);
    const Mat<2> ama = a.as_mat() * m.as_mat() * a.as_mat();
    REQUIRE(frob_diff(ama, Mat<2>::identity()) < 1e-12);

    // Diagonal case has an explicit answer.
    const SymMat<2> d = SymMat<2>::diagonal({4.0, 9.0});
    const SymMat<2> ds = sym_inverse_sqrt(d);
    REQUIRE(ds(0, 0) == Approx(0.5).epsilon(1e-14));
    REQUIRE(ds(1, 1) == Approx(1.0 / 3.0).epsilon(1e-14));
    REQUIRE(ds(0, 1) == Approx(0.0).margin(1e-15));
}

TEST_CASE("inverse square root rejects non positive definite input") {
    SymMat<2> neg;
    neg.set(0, 0, 1.0);
    neg.set(1, 1, -1.0);
    REQUIRE_THROWS_AS(sym_inverse_sqrt(neg), NotPositiveDefiniteError);

    SymMat<2> sing;
    sing.set(0, 0, 1.0);
    REQUIRE_THROWS_AS(sym_inverse_sqrt(sing), NotPositiveDefiniteError);
}

TEST_CASE("one dimensional matrices reduce to scalars") {
    SymMat<1> m;
    m.set(0, 0, 16.0);
    REQUIRE(jacobi_eigen(m).values[0] == 16.0);
    REQUIRE(sym_inverse(m)(0, 0) == Approx(1.0 / 16.0).epsilon(1e-15));
    REQUIRE(sym_inverse_sqrt(m)(0, 0) == Approx(0.25).epsilon(1e-15));
}
