#include "gridstrength/algebra.hpp"

#include <Eigen/Dense>

namespace gs {

Mat2 mat2_of_complex(Complex z) {
    return {z.real(), -z.imag(), z.imag(), z.real()};
}

Mat2 rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
}

Mat2 projector_re() { return {1.0, 0.0, 0.0, 0.0}; }
Mat2 projector_im() { return {0.0, 1.0, 0.0, 0.0}; }
Mat2 conjugator() { return {1.0, 0.0, 0.0, -1.0}; }

BlockMatrix BlockMatrix::operator+(const BlockMatrix& o) const {
    BlockMatrix r(n_);
    for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] + o.a_[k];
    return r;
}

BlockMatrix BlockMatrix::operator-(const BlockMatrix& o) const {
    BlockMatrix r(n_);
    for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] - o.a_[k];
    return r;
}

BlockMatrix BlockMatrix::operator*(const BlockMatrix& o) const {
    const int d = dim();
    BlockMatrix r(n_);
    using M = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        r.a_.data(), d, d) = M(a_.data(), d, d) * M(o.a_.data(), d, d);
    return r;
}

std::vector<double> BlockMatrix::operator*(const std::vector<double>& v) const {
    const int d = dim();
    std::vector<double> out(d, 0.0);
    for (int r = 0; r < d; ++r) {
        double acc = 0.0;
        const double* row = a_.data() + size_t(r) * d;
        for (int c = 0; c < d; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

bool BlockMatrix::complex_representable(double tol) const {
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            if (!block(i, j).complex_representable(tol)) return false;
    return true;
}

BlockMatrix block_assemble(int n_blocks, const std::map<std::pair<int, int>, Mat2>& entries) {
    BlockMatrix m(n_blocks);
    for (const auto& [rc, blk] : entries) m.set_block(rc.first, rc.second, blk);
    return m;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shared pivot guard: largest-magnitude entry sets the scale; any |U_ii|
// below 1e-12 of it counts as singular.
Eigen::PartialPivLU<RowMat> checked_lu(const BlockMatrix& m) {
    const int d = m.dim();
    Eigen::Map<const RowMat> a(m.data().data(), d, d);
    const double scale = a.cwiseAbs().maxCoeff();
    Eigen::PartialPivLU<RowMat> lu(a);
    const auto diag = lu.matrixLU().diagonal();
    double dmin = std::abs(diag(0)), dmax = dmin;
    for (int i = 1; i < d; ++i) {
        dmin = std::min(dmin, std::abs(diag(i)));
        dmax = std::max(dmax, std::abs(diag(i)));
    }
    if (!(dmin > 1e-12 * std::max(scale, 1e-300)))
        throw SingularMatrix(dmax / std::max(dmin, 1e-300));
    return lu;
}

}  // namespace

BlockMatrix block_invert(const BlockMatrix& m) {
    const int d = m.dim();
    auto lu = checked_lu(m);
    BlockMatrix inv(m.blocks());
    Eigen::Map<RowMat> out(inv.data().data(), d, d);
    out = lu.solve(RowMat::Identity(d, d));

    Eigen::Map<const RowMat> a(m.data().data(), d, d);
    const double resid = (a * out - RowMat::Identity(d, d)).cwiseAbs().maxCoeff();
    if (!(resid < 1e-10))
        throw SingularMatrix(1.0 / std::max(resid, 1e-300));
    return inv;
}

std::vector<double> block_solve(const BlockMatrix& m, const std::vector<double>& rhs) {
    const int d = m.dim();
    auto lu = checked_lu(m);
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), d);
    Eigen::VectorXd x = lu.solve(b);
    return {x.data(), x.data() + d};
}

std::vector<Complex> block_solve(const BlockMatrix& m, const std::vector<Complex>& rhs) {
    return unflatten(block_solve(m, flatten(rhs)));
}

}  // namespace gs
