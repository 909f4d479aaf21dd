#include "vaecme/est/lmmse.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace vaecme::est {

namespace {

constexpr double kRidge = 1e-12;

double shrink(double lambda, double s2)
{
    const double l = std::max(lambda, 0.0);
    const double d = l + s2;
    return d > 0.0 ? l / d : 0.0;
}

} // namespace

ComplexTensor cond_lmmse_dense(const ComplexTensor& mu, const ComplexTensor& c, const ComplexTensor& a,
                               const ComplexTensor& sigma, const ComplexTensor& y, bool* regularized)
{
    const MatrixXc am = to_eigen(a);
    const MatrixXc cm = to_eigen(c);
    const VectorXc m = to_eigen_vector(mu);
    if (am.cols() != m.size() || cm.rows() != m.size() || am.rows() != static_cast<Eigen::Index>(y.size()) ||
        sigma.rows() != y.size())
        throw std::invalid_argument("cond_lmmse_dense: inconsistent dimensions");
    const MatrixXc s = am * cm * am.adjoint() + to_eigen(sigma);
    const VectorXc r = to_eigen_vector(y) - am * m;
    const VectorXc w = hpd_solve(s, r, kRidge, regularized);
    return from_eigen_vector(m + cm * (am.adjoint() * w));
}

ComplexTensor cond_lmmse_information_form(const ComplexTensor& mu, const ComplexTensor& c, const ComplexTensor& a,
                                          const ComplexTensor& sigma, const ComplexTensor& y)
{
    const MatrixXc am = to_eigen(a);
    const MatrixXc cm = to_eigen(c);
    const VectorXc m = to_eigen_vector(mu);
    const auto n = m.size();
    const MatrixXc eye_m = MatrixXc::Identity(am.rows(), am.rows());
    const MatrixXc eye_n = MatrixXc::Identity(n, n);
    const MatrixXc sigma_inv = hpd_solve(to_eigen(sigma), eye_m, kRidge);
    const MatrixXc c_inv = hpd_solve(cm, eye_n, kRidge);
    const MatrixXc p = am.adjoint() * sigma_inv * am + c_inv;
    const VectorXc rhs = am.adjoint() * (sigma_inv * (to_eigen_vector(y) - am * m));
    return from_eigen_vector(m + hpd_solve(p, rhs, kRidge));
}

ComplexTensor circulant_lmmse(const ComplexTensor& mu, const CirculantSpec& c, double noise_var,
                              const ComplexTensor& ls)
{
    if (!(noise_var > 0.0))
        throw std::invalid_argument("circulant_lmmse: noise variance must be positive");
    c.validate();
    require_same_size(c.size(), mu.size(), "prior mean");
    require_same_size(c.size(), ls.size(), "observation");
    ComplexTensor d = ls - mu;
    const auto q = c.transform();
    q.apply_inplace(d.data(), Direction::forward);
    for (std::size_t k = 0; k < d.size(); ++k)
        d[k] *= c.eigenvalues[k] / (c.eigenvalues[k] + noise_var);
    q.apply_inplace(d.data(), Direction::adjoint);
    return mu + d;
}

ComplexTensor cond_lmmse_fast(const ComplexTensor& mu, const CirculantSpec& c, double noise_var,
                              const ComplexTensor& y, const channel::ObservationModel& model)
{
    return circulant_lmmse(mu, c, noise_var, model.apply_adjoint(y));
}

ComplexTensor ls_estimate(const ComplexTensor& y, const channel::ObservationModel& model)
{
    return model.apply_adjoint(y);
}

KronLmmse::KronLmmse(const channel::KronCovariance& c) : dims_(c.dims())
{
    Eigen::SelfAdjointEigenSolver<MatrixXc> er(to_eigen(c.rx));
    Eigen::SelfAdjointEigenSolver<MatrixXc> et(to_eigen(c.tx));
    if (er.info() != Eigen::Success || et.info() != Eigen::Success)
        throw NumericalError("KronLmmse: eigendecomposition failed");
    ur_ = er.eigenvectors();
    lr_ = er.eigenvalues();
    ut_ = et.eigenvectors();
    lt_ = et.eigenvalues();
}

double KronLmmse::min_eigenvalue() const
{
    double m = lr_(0) * lt_(0);
    for (Eigen::Index i = 0; i < lr_.size(); ++i)
        for (Eigen::Index j = 0; j < lt_.size(); ++j)
            m = std::min(m, lr_(i) * lt_(j));
    return m;
}

ComplexTensor KronLmmse::apply(const ComplexTensor& ls, double noise_var) const
{
    require_same_size(dims_.size(), ls.size(), "observation");
    if (!(noise_var >= 0.0))
        throw std::invalid_argument("KronLmmse: negative noise variance");
    const auto nr = static_cast<Eigen::Index>(dims_.n_rx), nt = static_cast<Eigen::Index>(dims_.n_tx);
    const Eigen::Map<const MatrixXc> x(ls.values().data(), nr, nt);
    MatrixXc t = ur_.adjoint() * x * ut_.conjugate();
    for (Eigen::Index j = 0; j < nt; ++j)
        for (Eigen::Index i = 0; i < nr; ++i)
            t(i, j) *= shrink(lr_(i) * lt_(j), noise_var);
    const MatrixXc back = ur_ * t * ut_.transpose();
    return ComplexTensor::vector(std::vector<cplx>(back.data(), back.data() + back.size()));
}

ComplexTensor genie_cov_estimate(const ComplexTensor& y, const channel::KronCovariance& c,
                                 const channel::ObservationModel& model, double noise_var)
{
    return KronLmmse(c).apply(model.apply_adjoint(y), noise_var);
}

GlobalCovariance fit_global_cov(const std::vector<ComplexTensor>& samples)
{
    if (samples.empty())
        throw std::invalid_argument("fit_global_cov: no samples");
    const auto n = static_cast<Eigen::Index>(samples[0].size());
    MatrixXc acc = MatrixXc::Zero(n, n);
    // accumulate in blocks through a GEMM
    constexpr std::size_t kBlock = 256;
    for (std::size_t b = 0; b < samples.size(); b += kBlock) {
        const std::size_t e = std::min(samples.size(), b + kBlock);
        MatrixXc h(n, static_cast<Eigen::Index>(e - b));
        for (std::size_t i = b; i < e; ++i) {
            require_same_size(static_cast<std::size_t>(n), samples[i].size(), "training sample");
            for (Eigen::Index k = 0; k < n; ++k)
                h(k, static_cast<Eigen::Index>(i - b)) = samples[i][static_cast<std::size_t>(k)];
        }
        acc.noalias() += h * h.adjoint();
    }
    acc /= static_cast<double>(samples.size());
    // exact Hermitian symmetry
    const MatrixXc sym = 0.5 * (acc + acc.adjoint());
    return {from_eigen(sym), samples.size()};
}

GlobalLmmse::GlobalLmmse(const GlobalCovariance& g)
{
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(to_eigen(g.c));
    if (es.info() != Eigen::Success)
        throw NumericalError("GlobalLmmse: eigendecomposition failed");
    u_ = es.eigenvectors();
    lambda_ = es.eigenvalues();
}

ComplexTensor GlobalLmmse::apply(const ComplexTensor& ls, double noise_var) const
{
    require_same_size(static_cast<std::size_t>(u_.rows()), ls.size(), "observation");
    VectorXc t = u_.adjoint() * to_eigen_vector(ls);
    for (Eigen::Index i = 0; i < t.size(); ++i)
        t(i) *= shrink(lambda_(i), noise_var);
    return from_eigen_vector(u_ * t);
}

ComplexTensor global_cov_estimate(const ComplexTensor& y, const GlobalCovariance& g,
                                  const channel::ObservationModel& model, double noise_var)
{
    return GlobalLmmse(g).apply(model.apply_adjoint(y), noise_var);
}

} // namespace vaecme::est
