#ifndef SELFREG_LOSSES_HPP
#define SELFREG_LOSSES_HPP

#include <string>

namespace selfreg {

enum class LossKind { least_squares, logistic_classification, huber };

/// Convex, differentiable loss L(y, t) together with the constants the
/// analysis consumes: the derivative's Lipschitz constant M, the growth
/// envelope (B, q), and the clip level used for validation risks.
///
/// Conventions: least squares is (y - t)^2 without a 1/2 factor, so its
/// smoothness constant is 2. Huber is r^2/2 inside the kink and
/// delta * (|r| - delta/2) outside, with r = t - y.
struct LossSpec {
    LossKind kind = LossKind::least_squares;
    double clip_level = 1.0;  // M
    double delta = 1.0;       // huber only

    static LossSpec least_squares(double clip_level);
    static LossSpec logistic(double clip_level = 1.0);
    static LossSpec huber(double delta, double clip_level);

    std::string name() const;
};

double loss_value(const LossSpec& loss, double y, double t);
double loss_derivative(const LossSpec& loss, double y, double t);

/// Second derivative in t (one-sided at the huber kink). Used by the Newton
/// solver in rerm.
double loss_second_derivative(const LossSpec& loss, double y, double t);

/// Clip t to [-M, M].
double clip_value(double t, double M);

/// Lipschitz constant of t -> L'(y, t).
double smoothness_constant(const LossSpec& loss);

struct GrowthParams {
    double B;
    double q;
};

/// (B, q) with L(y, t) <= B (1 + |t|^q) for all |y| <= clip_level.
GrowthParams growth_params(const LossSpec& loss);

/// Whether clipping at clip_level can only decrease the loss for labels in
/// [-clip_level, clip_level]. True for least squares and huber; false for the
/// logistic classification loss, whose pointwise minimum sits at infinity.
bool is_clippable(const LossSpec& loss);

/// Smallest Lipschitz constant of t -> L(y, t) on [-a, a] over admissible y.
double lipschitz_on_clip(const LossSpec& loss, double a);

}  // namespace selfreg

#endif
