#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "gridstrength/errors.hpp"

namespace gs {

using Complex = std::complex<double>;

// Dynamic Clarke/Park vector (d, q). Interchangeable with d + jq.
struct ClarkeVec {
    double d = 0.0;
    double q = 0.0;

    ClarkeVec() = default;
    ClarkeVec(double d_, double q_) : d(d_), q(q_) {}
    explicit ClarkeVec(Complex z) : d(z.real()), q(z.imag()) {}

    Complex to_complex() const { return {d, q}; }
    double magnitude() const { return std::hypot(d, q); }
    // in (-pi, pi]
    double angle() const {
        double a = std::atan2(q, d);
        if (a <= -M_PI) a = M_PI;
        return a;
    }

    ClarkeVec operator+(ClarkeVec o) const { return {d + o.d, q + o.q}; }
    ClarkeVec operator-(ClarkeVec o) const { return {d - o.d, q - o.q}; }
    ClarkeVec operator*(double s) const { return {d * s, q * s}; }
    ClarkeVec operator-() const { return {-d, -q}; }
};

// Real 2x2 matrix. Complex z = a + jb embeds as [[a, -b], [b, a]]; matrices of
// that shape commute and multiply like complex numbers.
struct Mat2 {
    double m11 = 0.0, m12 = 0.0;
    double m21 = 0.0, m22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2 operator+(const Mat2& o) const {
        return {m11 + o.m11, m12 + o.m12, m21 + o.m21, m22 + o.m22};
    }
    Mat2 operator-(const Mat2& o) const {
        return {m11 - o.m11, m12 - o.m12, m21 - o.m21, m22 - o.m22};
    }
    Mat2 operator*(double s) const { return {m11 * s, m12 * s, m21 * s, m22 * s}; }
    Mat2 operator-() const { return {-m11, -m12, -m21, -m22}; }
    Mat2 operator*(const Mat2& o) const {
        return {m11 * o.m11 + m12 * o.m21, m11 * o.m12 + m12 * o.m22,
                m21 * o.m11 + m22 * o.m21, m21 * o.m12 + m22 * o.m22};
    }
    ClarkeVec operator*(ClarkeVec v) const {
        return {m11 * v.d + m12 * v.q, m21 * v.d + m22 * v.q};
    }

    double det() const { return m11 * m22 - m12 * m21; }
    Mat2 transpose() const { return {m11, m21, m12, m22}; }

    Mat2 inverse() const {
        const double dt = det();
        const double scale = std::max({std::abs(m11), std::abs(m12), std::abs(m21), std::abs(m22)});
        if (std::abs(dt) <= 1e-12 * std::max(scale * scale, 1e-300))
            throw SingularMatrix(scale * scale / std::max(std::abs(dt), 1e-300));
        const double inv = 1.0 / dt;
        return {m22 * inv, -m12 * inv, -m21 * inv, m11 * inv};
    }

    bool complex_representable(double tol = 1e-12) const {
        const double scale = std::max(
            {std::abs(m11), std::abs(m12), std::abs(m21), std::abs(m22), 1.0});
        return std::abs(m11 - m22) <= tol * scale && std::abs(m12 + m21) <= tol * scale;
    }
    // valid when complex_representable(); uses the symmetric average
    Complex to_complex() const { return {0.5 * (m11 + m22), 0.5 * (m21 - m12)}; }
};

Mat2 mat2_of_complex(Complex z);
Mat2 rotation(double theta);
Mat2 projector_re();   // [a, b] -> [a, 0]
Mat2 projector_im();   // [a, b] -> [b, 0]
Mat2 conjugator();     // [a, b] -> [a, -b]

// eta' = rho + j(omega - omega0): v-dot = v * eta' in the synchronous frame.
struct ComplexFrequency {
    double rho = 0.0;    // 1/s
    double omega = 0.0;  // rad/s, relative to the fundamental
    Complex to_complex() const { return {rho, omega}; }
};

// eta'' = sigma + j*gamma: v-ddot = v * eta''. gamma generalizes RoCoF.
struct ComplexFrequency2 {
    double sigma = 0.0;  // 1/s^2
    double gamma = 0.0;  // rad/s^2
    Complex to_complex() const { return {sigma, gamma}; }
};

// n x n grid of Mat2 blocks, stored flat as a dense 2n x 2n row-major matrix.
// Network-scale operators (Y, Z, A..C'', the Z_eq and S chains) all live here;
// n is tens of buses, so dense is the right trade.
class BlockMatrix {
  public:
    BlockMatrix() = default;
    explicit BlockMatrix(int n_blocks) : n_(n_blocks), a_(4 * size_t(n_blocks) * n_blocks, 0.0) {}

    static BlockMatrix identity(int n_blocks) {
        BlockMatrix m(n_blocks);
        for (int i = 0; i < 2 * n_blocks; ++i) m.at(i, i) = 1.0;
        return m;
    }

    int blocks() const { return n_; }
    int dim() const { return 2 * n_; }

    double& at(int r, int c) { return a_[size_t(r) * dim() + c]; }
    double at(int r, int c) const { return a_[size_t(r) * dim() + c]; }

    Mat2 block(int i, int j) const {
        check(i, j);
        return {at(2 * i, 2 * j), at(2 * i, 2 * j + 1), at(2 * i + 1, 2 * j), at(2 * i + 1, 2 * j + 1)};
    }
    void set_block(int i, int j, const Mat2& b) {
        check(i, j);
        at(2 * i, 2 * j) = b.m11;
        at(2 * i, 2 * j + 1) = b.m12;
        at(2 * i + 1, 2 * j) = b.m21;
        at(2 * i + 1, 2 * j + 1) = b.m22;
    }
    void add_block(int i, int j, const Mat2& b) { set_block(i, j, block(i, j) + b); }

    BlockMatrix operator+(const BlockMatrix& o) const;
    BlockMatrix operator-(const BlockMatrix& o) const;
    BlockMatrix operator*(const BlockMatrix& o) const;
    std::vector<double> operator*(const std::vector<double>& v) const;

    bool complex_representable(double tol = 1e-10) const;

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

  private:
    void check(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_ || j >= n_)
            throw Error("block index out of range");
    }
    int n_ = 0;
    std::vector<double> a_;
};

BlockMatrix block_assemble(int n_blocks, const std::map<std::pair<int, int>, Mat2>& entries);

// Dense LU inverse; throws SingularMatrix when a pivot falls below 1e-12 of
// the matrix scale. Residual of the result is checked against 1e-10.
BlockMatrix block_invert(const BlockMatrix& m);

// LU solve m * x = rhs (rhs length 2n); same pivot guard as block_invert.
std::vector<double> block_solve(const BlockMatrix& m, const std::vector<double>& rhs);

// Convenience for complex-representable operators: per-bus complex vectors.
std::vector<Complex> block_solve(const BlockMatrix& m, const std::vector<Complex>& rhs);

inline std::vector<double> flatten(const std::vector<Complex>& v) {
    std::vector<double> out(2 * v.size());
    for (size_t k = 0; k < v.size(); ++k) {
        out[2 * k] = v[k].real();
        out[2 * k + 1] = v[k].imag();
    }
    return out;
}

inline std::vector<Complex> unflatten(const std::vector<double>& v) {
    std::vector<Complex> out(v.size() / 2);
    for (size_t k = 0; k < out.size(); ++k) out[k] = {v[2 * k], v[2 * k + 1]};
    return out;
}

}  // namespace gs
