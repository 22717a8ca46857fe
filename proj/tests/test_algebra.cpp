#include <doctest.h>

#include <random>

#include "gridstrength/algebra.hpp"

using namespace gs;

namespace {

double max_abs_diff(const Mat2& a, const Mat2& b) {
    return std::max({std::abs(a.m11 - b.m11), std::abs(a.m12 - b.m12),
                     std::abs(a.m21 - b.m21), std::abs(a.m22 - b.m22)});
}

double residual_vs_identity(const BlockMatrix& m, const BlockMatrix& minv) {
    const BlockMatrix p = m * minv;
    double worst = 0.0;
    for (int r = 0; r < p.dim(); ++r)
        for (int c = 0; c < p.dim(); ++c)
            worst = std::max(worst, std::abs(p.at(r, c) - (r == c ? 1.0 : 0.0)));
    return worst;
}

}  // namespace

TEST_CASE("complex numbers embed as commuting 2x2 blocks") {
    const Mat2 a = mat2_of_complex({1.0, 2.0});
    const ClarkeVec prod = a * ClarkeVec{3.0, 4.0};
    CHECK(prod.d == doctest::Approx(-5.0).epsilon(1e-15));
    CHECK(prod.q == doctest::Approx(10.0).epsilon(1e-15));

    CHECK(max_abs_diff(mat2_of_complex({1.0, 0.0}), Mat2::identity()) == 0.0);

    const Mat2 j = mat2_of_complex({0.0, 1.0});
    CHECK(max_abs_diff(j * j, -Mat2::identity()) == 0.0);
}

TEST_CASE("embedding closure: products and sums stay representable") {
    std::mt19937 rng(11u);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Complex z1{u(rng), u(rng)};
        const Complex z2{u(rng), u(rng)};
        const Mat2 m1 = mat2_of_complex(z1);
        const Mat2 m2 = mat2_of_complex(z2);
        const Mat2 prod = m1 * m2;
        const Mat2 sum = m1 + m2;
        CHECK(prod.complex_representable(1e-12));
        CHECK(sum.complex_representable(1e-12));
        CHECK(max_abs_diff(prod, mat2_of_complex(z1 * z2)) < 1e-12);
        CHECK(max_abs_diff(sum, mat2_of_complex(z1 + z2)) < 1e-15);
        CHECK(max_abs_diff(m1 * m2, m2 * m1) < 1e-15);  // they commute
    }
}

TEST_CASE("rotation matrices act like unit phasors") {
    const ClarkeVec up = rotation(M_PI / 2.0) * ClarkeVec{1.0, 0.0};
    CHECK(std::abs(up.d) < 1e-15);
    CHECK(up.q == doctest::Approx(1.0).epsilon(1e-15));

    std::mt19937 rng(12u);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = ang(rng), b = ang(rng);
        CHECK(max_abs_diff(rotation(a) * rotation(b), rotation(a + b)) < 1e-14);
    }
    CHECK(max_abs_diff(rotation(0.7).transpose() * rotation(0.7), Mat2::identity()) < 1e-15);
}

TEST_CASE("projectors and the conjugator") {
    const ClarkeVec conj = conjugator() * ClarkeVec{3.0, 4.0};
    CHECK(conj.d == 3.0);
    CHECK(conj.q == -4.0);
    CHECK(max_abs_diff(conjugator() * conjugator(), Mat2::identity()) == 0.0);

    const ClarkeVec re = projector_re() * ClarkeVec{3.0, 4.0};
    CHECK(re.d == 3.0);
    CHECK(re.q == 0.0);
    const ClarkeVec im = projector_im() * ClarkeVec{3.0, 4.0};
    CHECK(im.d == 4.0);
    CHECK(im.q == 0.0);

    // conjugation swaps the embedding orientation: C mat2(z) C = mat2(conj z)
    const Mat2 z = mat2_of_complex({0.4, -1.3});
    CHECK(max_abs_diff(conjugator() * z * conjugator(), mat2_of_complex({0.4, 1.3})) < 1e-15);
}

TEST_CASE("Mat2 inverse and the singular guard") {
    const Mat2 m = mat2_of_complex({0.3, -0.7});
    CHECK(max_abs_diff(m * m.inverse(), Mat2::identity()) < 1e-15);
    CHECK(max_abs_diff(m.inverse(), mat2_of_complex(1.0 / Complex{0.3, -0.7})) < 1e-15);

    CHECK_THROWS_AS((Mat2{1.0, 2.0, 2.0, 4.0}.inverse()), SingularMatrix);
    CHECK_THROWS_AS(Mat2{}.inverse(), SingularMatrix);
}

TEST_CASE("block inverse of a one-block reactance") {
    BlockMatrix y(1);
    y.set_block(0, 0, mat2_of_complex({0.0, 0.1}));
    const BlockMatrix z = block_invert(y);
    CHECK(max_abs_diff(z.block(0, 0), mat2_of_complex({0.0, -10.0})) < 1e-12);
}

TEST_CASE("block inverse residual on random dense matrices") {
    std::mt19937 rng(13u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        BlockMatrix m(3);  // 6x6 real
        for (int r = 0; r < m.dim(); ++r)
            for (int c = 0; c < m.dim(); ++c) m.at(r, c) = u(rng) + (r == c ? 3.0 : 0.0);
        const BlockMatrix minv = block_invert(m);
        CHECK(residual_vs_identity(m, minv) < 1e-10);
    }
}

TEST_CASE("block inverse keeps complex-representable structure") {
    std::mt19937 rng(14u);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    BlockMatrix m(4);
    for (int i = 0; i < 4; ++i)
        for (int jj = 0; jj < 4; ++jj) {
            Complex z{u(rng), u(rng)};
            if (i == jj) z += 3.0;  // keep it well away from singular
            m.set_block(i, jj, mat2_of_complex(z));
        }
    REQUIRE(m.complex_representable(1e-12));
    const BlockMatrix minv = block_invert(m);
    CHECK(minv.complex_representable(1e-10));
    CHECK(residual_vs_identity(m, minv) < 1e-10);
}

TEST_CASE("block solve matches the inverse and handles complex right sides") {
    std::mt19937 rng(15u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BlockMatrix m(3);
    for (int r = 0; r < m.dim(); ++r)
        for (int c = 0; c < m.dim(); ++c) m.at(r, c) = u(rng) + (r == c ? 4.0 : 0.0);
    std::vector<double> rhs(size_t(m.dim()));
    for (auto& v : rhs) v = u(rng);

    const std::vector<double> x = block_solve(m, rhs);
    const std::vector<double> back = m * x;
    for (size_t k = 0; k < rhs.size(); ++k) CHECK(std::abs(back[k] - rhs[k]) < 1e-12);

    const std::vector<Complex> xc = block_solve(m, unflatten(rhs));
    const std::vector<double> xc_flat = flatten(xc);
    for (size_t k = 0; k < rhs.size(); ++k) CHECK(xc_flat[k] == doctest::Approx(x[k]).epsilon(1e-14));
}

TEST_CASE("singular block matrices are rejected") {
    BlockMatrix z(2);  // all zero
    CHECK_THROWS_AS(block_invert(z), SingularMatrix);

    BlockMatrix dup(2);  // two identical rows
    for (int c = 0; c < dup.dim(); ++c) {
        dup.at(0, c) = double(c + 1);
        dup.at(1, c) = double(c + 1);
        dup.at(2, c) = 1.0;
        dup.at(3, c) = double(c * c);
    }
    CHECK_THROWS_AS(block_invert(dup), SingularMatrix);
}

TEST_CASE("block assembly places entries and leaves the rest zero") {
    const BlockMatrix m = block_assemble(3, {
        {{0, 0}, mat2_of_complex({1.0, 0.0})},
        {{1, 2}, mat2_of_complex({0.0, -5.0})},
    });
    CHECK(max_abs_diff(m.block(0, 0), Mat2::identity()) == 0.0);
    CHECK(max_abs_diff(m.block(1, 2), mat2_of_complex({0.0, -5.0})) == 0.0);
    CHECK(max_abs_diff(m.block(2, 1), Mat2{}) == 0.0);
    CHECK(max_abs_diff(m.block(2, 2), Mat2{}) == 0.0);
}

TEST_CASE("flatten and unflatten are inverse bijections") {
    const std::vector<Complex> v{{1.0, -2.0}, {0.25, 0.0}, {-3.5, 7.0}};
    const std::vector<double> f = flatten(v);
    REQUIRE(f.size() == 6);
    CHECK(f[0] == 1.0);
    CHECK(f[1] == -2.0);
    const std::vector<Complex> back = unflatten(f);
    for (size_t k = 0; k < v.size(); ++k) CHECK(back[k] == v[k]);
}

TEST_CASE("ClarkeVec angle stays in the half-open principal range") {
    CHECK(ClarkeVec{1.0, 0.0}.angle() == 0.0);
    CHECK(ClarkeVec{-1.0, 0.0}.angle() == doctest::Approx(M_PI));
    CHECK(ClarkeVec{0.0, -1.0}.angle() == doctest::Approx(-M_PI / 2.0));
    CHECK(ClarkeVec{3.0, 4.0}.magnitude() == doctest::Approx(5.0));
}
