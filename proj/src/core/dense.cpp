#include "vaecme/core/dense.hpp"

namespace vaecme {

MatrixXc to_eigen(const ComplexTensor& m)
{
    const auto r = m.rows();
    const auto c = m.cols();
    MatrixXc out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return out;
}

VectorXc to_eigen_vector(const ComplexTensor& v)
{
    VectorXc out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

ComplexTensor from_eigen(const MatrixXc& m)
{
    ComplexTensor out({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return out;
}

ComplexTensor from_eigen_vector(const VectorXc& v)
{
    ComplexTensor out({static_cast<std::size_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[static_cast<std::size_t>(i)] = v(i);
    return out;
}

namespace {

Eigen::LLT<MatrixXc> factorize(const MatrixXc& m, double ridge, bool* regularized)
{
    if (regularized)
        *regularized = false;
    Eigen::LLT<MatrixXc> llt(m);
    if (llt.info() == Eigen::Success)
        return llt;
    // relative to the mean diagonal; absolute when the matrix has no diagonal mass
    const double mean_diag = m.diagonal().real().mean();
    const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
    MatrixXc reg = m;
    reg.diagonal().array() += ridge * scale;
    llt.compute(reg);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorization failed after diagonal regularization");
    if (regularized)
        *regularized = true;
    return llt;
}

} // namespace

MatrixXc hpd_solve(const MatrixXc& m, const MatrixXc& b, double ridge, bool* regularized)
{
    return factorize(m, ridge, regularized).solve(b);
}

MatrixXc hpd_cholesky(const MatrixXc& m, double ridge, bool* regularized)
{
    return factorize(m, ridge, regularized).matrixL();
}

} // namespace vaecme
