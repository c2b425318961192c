#include "selfreg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "selfreg/common.hpp"

namespace selfreg {

namespace {

void check_inputs(const LossSpec& loss, double y, double t) {
    if (!std::isfinite(y) || !std::isfinite(t))
        throw input_error("loss arguments must be finite");
    if (loss.kind == LossKind::huber && !(loss.delta > 0.0))
        throw input_error("huber delta must be positive");
}

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

LossSpec LossSpec::least_squares(double clip_level) {
    if (!(clip_level > 0.0)) throw input_error("clip_level must be positive");
    return LossSpec{LossKind::least_squares, clip_level, 0.0};
}

LossSpec LossSpec::logistic(double clip_level) {
    if (!(clip_level > 0.0)) throw input_error("clip_level must be positive");
    return LossSpec{LossKind::logistic_classification, clip_level, 0.0};
}

LossSpec LossSpec::huber(double delta, double clip_level) {
    if (!(delta > 0.0)) throw input_error("huber delta must be positive");
    if (!(clip_level > 0.0)) throw input_error("clip_level must be positive");
    return LossSpec{LossKind::huber, clip_level, delta};
}

std::string LossSpec::name() const {
    switch (kind) {
        case LossKind::least_squares: return "least_squares";
        case LossKind::logistic_classification: return "logistic";
        case LossKind::huber: return "huber";
    }
    return "?";
}

double loss_value(const LossSpec& loss, double y, double t) {
    check_inputs(loss, y, t);
    switch (loss.kind) {
        case LossKind::least_squares: {
            const double r = y - t;
            return r * r;
        }
        case LossKind::logistic_classification:
            return log1p_exp(-y * t);
        case LossKind::huber: {
            const double r = t - y;
            const double a = std::abs(r);
            if (a <= loss.delta) return 0.5 * r * r;
            return loss.delta * (a - 0.5 * loss.delta);
        }
    }
    return 0.0;
}

double loss_derivative(const LossSpec& loss, double y, double t) {
    check_inputs(loss, y, t);
    switch (loss.kind) {
        case LossKind::least_squares:
            return 2.0 * (t - y);
        case LossKind::logistic_classification:
            return -y * sigmoid(-y * t);
        case LossKind::huber: {
            const double r = t - y;
            if (std::abs(r) <= loss.delta) return r;
            return r > 0.0 ? loss.delta : -loss.delta;
        }
    }
    return 0.0;
}

double loss_second_derivative(const LossSpec& loss, double y, double t) {
    check_inputs(loss, y, t);
    switch (loss.kind) {
        case LossKind::least_squares:
            return 2.0;
        case LossKind::logistic_classification: {
            const double s = sigmoid(-y * t);
            return y * y * s * (1.0 - s);
        }
        case LossKind::huber:
            return std::abs(t - y) <= loss.delta ? 1.0 : 0.0;
    }
    return 0.0;
}

double clip_value(double t, double M) {
    if (!(M > 0.0)) throw input_error("clip level must be positive");
    return std::clamp(t, -M, M);
}

double smoothness_constant(const LossSpec& loss) {
    switch (loss.kind) {
        case LossKind::least_squares: return 2.0;
        case LossKind::logistic_classification: return 0.25;
        case LossKind::huber: return 1.0;
    }
    return 0.0;
}

GrowthParams growth_params(const LossSpec& loss) {
    const double M = loss.clip_level;
    switch (loss.kind) {
        case LossKind::least_squares:
            // max over |y| <= M of (y - t)^2 / (1 + t^2) is 1 + M^2, at t = 1/M.
            return {1.0 + M * M, 2.0};
        case LossKind::logistic_classification:
            // log(1 + e^{-yt}) <= log 2 + |t| <= 1 + |t| for |y| <= 1.
            return {std::max(1.0, M), 1.0};
        case LossKind::huber:
            // L <= delta |t - y| <= delta (1 + M)(1 + |t|).
            return {loss.delta * (1.0 + M), 1.0};
    }
    return {1.0, 1.0};
}

bool is_clippable(const LossSpec& loss) {
    // A convex loss is clippable at M iff t -> L(y, t) attains a minimum in
    // [-M, M] for every admissible y. For least squares and huber the minimum
    // sits at t = y; the logistic classification loss has no minimum.
    return loss.kind != LossKind::logistic_classification;
}

double lipschitz_on_clip(const LossSpec& loss, double a) {
    if (!(a >= 0.0)) throw input_error("interval bound must be nonnegative");
    switch (loss.kind) {
        case LossKind::least_squares:
            return 2.0 * (a + loss.clip_level);
        case LossKind::logistic_classification: {
            const double e = std::exp(-a);
            return 1.0 / (1.0 + e);
        }
        case LossKind::huber:
            return std::min(loss.delta, a + loss.clip_level);
    }
    return 0.0;
}

}  // namespace selfreg
