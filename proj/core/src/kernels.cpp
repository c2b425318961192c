#include "selfreg/kernels.hpp"

#include <cmath>

#include "selfreg/common.hpp"

namespace selfreg {

KernelSpec KernelSpec::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw input_error("gaussian sigma must be positive");
    KernelSpec k;
    k.kind = KernelKind::gaussian;
    k.sigma = sigma;
    return k;
}

KernelSpec KernelSpec::linear() {
    KernelSpec k;
    k.kind = KernelKind::linear;
    return k;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
    if (degree < 1) throw input_error("polynomial degree must be >= 1");
    if (offset < 0.0) throw input_error("polynomial offset must be nonnegative");
    KernelSpec k;
    k.kind = KernelKind::polynomial;
    k.degree = degree;
    k.offset = offset;
    return k;
}

std::string KernelSpec::name() const {
    switch (kind) {
        case KernelKind::gaussian: return "gaussian";
        case KernelKind::linear: return "linear";
        case KernelKind::polynomial: return "polynomial";
    }
    return "?";
}

double eval_kernel(const KernelSpec& kernel, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw input_error("kernel arguments have different dimension");
    switch (kernel.kind) {
        case KernelKind::gaussian: {
            const double d2 = (x - y).squaredNorm();
            return std::exp(-d2 / (2.0 * kernel.sigma * kernel.sigma));
        }
        case KernelKind::linear:
            return x.dot(y);
        case KernelKind::polynomial:
            return std::pow(kernel.offset + x.dot(y), kernel.degree);
    }
    return 0.0;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& xs) {
    const long n = xs.rows();
    if (n == 0) throw input_error("gram_matrix: empty point set");
    Eigen::MatrixXd K(n, n);
    switch (kernel.kind) {
        case KernelKind::gaussian: {
            const Eigen::VectorXd sq = xs.rowwise().squaredNorm();
            K.noalias() = xs * xs.transpose();
            const double inv = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
            for (long i = 0; i < n; ++i)
                for (long j = 0; j < n; ++j)
                    K(i, j) = std::exp(-(sq(i) + sq(j) - 2.0 * K(i, j)) * inv);
            break;
        }
        case KernelKind::linear:
            K.noalias() = xs * xs.transpose();
            break;
        case KernelKind::polynomial: {
            K.noalias() = xs * xs.transpose();
            for (long i = 0; i < n; ++i)
                for (long j = 0; j < n; ++j)
                    K(i, j) = std::pow(kernel.offset + K(i, j), kernel.degree);
            break;
        }
    }
    // Exact symmetry, so eigensolvers see a symmetric matrix bit for bit.
    K = 0.5 * (K + K.transpose()).eval();
    return K;
}

Eigen::MatrixXd kernel_cross(const KernelSpec& kernel, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) throw input_error("kernel_cross: dimension mismatch");
    Eigen::MatrixXd K(a.rows(), b.rows());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < b.rows(); ++j)
            K(i, j) = eval_kernel(kernel, a.row(i), b.row(j));
    return K;
}

double sup_embedding_bound(const KernelSpec& kernel, double domain_bound) {
    if (domain_bound < 0.0) throw input_error("domain_bound must be nonnegative");
    switch (kernel.kind) {
        case KernelKind::gaussian:
            return 1.0;
        case KernelKind::linear:
            return domain_bound;
        case KernelKind::polynomial:
            return std::sqrt(std::pow(kernel.offset + domain_bound * domain_bound,
                                      kernel.degree));
    }
    return 1.0;
}

double data_local_kappa_sq(const KernelSpec& kernel, const Eigen::MatrixXd& xs) {
    if (xs.rows() == 0) throw input_error("data_local_kappa_sq: empty point set");
    double m = 0.0;
    for (long i = 0; i < xs.rows(); ++i) {
        const Eigen::VectorXd x = xs.row(i);
        m = std::max(m, eval_kernel(kernel, x, x));
    }
    return m;
}

void add_gram_jitter(Eigen::MatrixXd& gram) {
    const double jitter = 1e-10 * gram.trace();
    if (jitter > 0.0) gram.diagonal().array() += jitter;
}

RkhsFunction make_rkhs_function(Eigen::MatrixXd support, Eigen::VectorXd coeffs,
                                const KernelSpec& kernel) {
    if (support.rows() != coeffs.size())
        throw input_error("coefficient length does not match support size");
    RkhsFunction f;
    f.support = std::make_shared<const Eigen::MatrixXd>(std::move(support));
    f.coeffs = std::move(coeffs);
    f.kernel = kernel;
    return f;
}

double rkhs_eval(const RkhsFunction& f, const Eigen::VectorXd& x) {
    if (f.support->cols() != x.size())
        throw input_error("evaluation point has wrong dimension");
    double s = 0.0;
    for (long i = 0; i < f.support->rows(); ++i)
        s += f.coeffs(i) * eval_kernel(f.kernel, f.support->row(i), x);
    return s;
}

Eigen::VectorXd rkhs_eval_batch(const RkhsFunction& f, const Eigen::MatrixXd& xs) {
    if (f.support->cols() != xs.cols())
        throw input_error("evaluation points have wrong dimension");
    Eigen::VectorXd out(xs.rows());
    for (long i = 0; i < xs.rows(); ++i) out(i) = rkhs_eval(f, xs.row(i));
    return out;
}

double rkhs_norm(const RkhsFunction& f) {
    if (f.support->rows() != f.coeffs.size())
        throw input_error("coefficient length does not match support size");
    return rkhs_norm(f, gram_matrix(f.kernel, *f.support));
}

double rkhs_norm(const RkhsFunction& f, const Eigen::MatrixXd& gram) {
    if (gram.rows() != f.coeffs.size())
        throw input_error("gram size does not match coefficient length");
    const double q = f.coeffs.dot(gram * f.coeffs);
    return std::sqrt(std::max(0.0, q));
}

}  // namespace selfreg
