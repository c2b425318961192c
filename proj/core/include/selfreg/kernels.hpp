#ifndef SELFREG_KERNELS_HPP
#define SELFREG_KERNELS_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>

namespace selfreg {

/// A labeled sample; points are the rows of xs.
struct Dataset {
    Eigen::MatrixXd xs;
    Eigen::VectorXd ys;

    long n() const { return xs.rows(); }
    long dim() const { return xs.cols(); }
};

enum class KernelKind { gaussian, linear, polynomial };

struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double sigma = 1.0;   // gaussian
    int degree = 2;       // polynomial
    double offset = 0.0;  // polynomial

    static KernelSpec gaussian(double sigma);
    static KernelSpec linear();
    static KernelSpec polynomial(int degree, double offset);

    std::string name() const;
};

double eval_kernel(const KernelSpec& kernel, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

Eigen::MatrixXd gram_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& xs);

/// Rectangular kernel matrix K(i, j) = k(a_i, b_j) for rows of a and b.
Eigen::MatrixXd kernel_cross(const KernelSpec& kernel, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b);

/// kappa with sup_{|x| <= domain_bound} sqrt(k(x, x)) <= kappa, so that
/// |f(x)| <= kappa ||f|| on the domain ball.
double sup_embedding_bound(const KernelSpec& kernel, double domain_bound);

/// max_i k(x_i, x_i); the bound the empirical risk actually consumes.
double data_local_kappa_sq(const KernelSpec& kernel, const Eigen::MatrixXd& xs);

/// Diagonal jitter 1e-10 * trace, applied in place before factorizations.
void add_gram_jitter(Eigen::MatrixXd& gram);

/// A function in representer form sum_i alpha_i k(x_i, .). Training code
/// shares one support matrix across every snapshot.
struct RkhsFunction {
    std::shared_ptr<const Eigen::MatrixXd> support;
    Eigen::VectorXd coeffs;
    KernelSpec kernel;
};

RkhsFunction make_rkhs_function(Eigen::MatrixXd support, Eigen::VectorXd coeffs,
                                const KernelSpec& kernel);

double rkhs_eval(const RkhsFunction& f, const Eigen::VectorXd& x);

/// Evaluate at each row of xs.
Eigen::VectorXd rkhs_eval_batch(const RkhsFunction& f, const Eigen::MatrixXd& xs);

/// sqrt(alpha^T K alpha); builds the Gram matrix of the support.
double rkhs_norm(const RkhsFunction& f);

/// Same with a caller-supplied Gram matrix of the support.
double rkhs_norm(const RkhsFunction& f, const Eigen::MatrixXd& gram);

}  // namespace selfreg

#endif
