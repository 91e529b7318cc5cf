#include "dualloco/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dualloco {
namespace {

void check_label(const LossFamily& family, double y) {
    if (family.is_classification() && y != 1.0 && y != -1.0) {
        throw std::invalid_argument("classification labels must be +1 or -1");
    }
}

inline double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

// Conjugate domain for the margin losses: -y*a in [0,1] (hinge/logistic) or
// the same interval for smoothed hinge. Expressed as bounds on a directly.
inline double domain_lo(double y) { return std::min(0.0, -y); }
inline double domain_hi(double y) { return std::max(0.0, -y); }

// Root of psi(b) = log(b/(1-b)) + y*u + q*(b + y*a_old) on (0,1); psi is
// strictly increasing, so a bracketing Newton iteration cannot escape.
double logistic_update(double a_old, double y, double u, double q) {
    constexpr double kEdge = 1e-17;
    const double shift = y * u + q * y * a_old;
    const auto psi = [&](double b) { return std::log(b / (1.0 - b)) + shift + q * b; };

    double lo = kEdge;
    double hi = 1.0 - kEdge;
    if (psi(lo) >= 0.0) return -y * lo;
    if (psi(hi) <= 0.0) return -y * hi;

    // psi' = 1/(b(1-b)) + q >= 4, so |psi| <= 1e-13 pins b well inside 1e-12.
    double b = std::clamp(-y * a_old, 1e-8, 1.0 - 1e-8);
    for (int iter = 0; iter < 100; ++iter) {
        const double value = psi(b);
        if (std::abs(value) <= 1e-13) break;
        if (value > 0.0) {
            hi = b;
        } else {
            lo = b;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            b = 0.5 * (lo + hi);
            break;
        }
        const double slope = 1.0 / (b * (1.0 - b)) + q;
        double next = b - value / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        b = next;
    }
    return -y * b;
}

}  // namespace

double loss_value(const LossFamily& family, double u, double y) {
    check_label(family, y);
    switch (family.kind) {
        case LossKind::squared: {
            const double r = u - y;
            return 0.5 * r * r;
        }
        case LossKind::logistic:
            // log(1 + exp(-z)) computed without overflow for large |z|.
            {
                const double z = y * u;
                if (z > 0.0) return std::log1p(std::exp(-z));
                return -z + std::log1p(std::exp(z));
            }
        case LossKind::hinge:
            return std::max(0.0, 1.0 - y * u);
        case LossKind::smoothed_hinge: {
            const double gamma = family.smoothing;
            const double z = y * u;
            if (z >= 1.0) return 0.0;
            if (z <= 1.0 - gamma) return 1.0 - z - 0.5 * gamma;
            const double r = 1.0 - z;
            return 0.5 * r * r / gamma;
        }
    }
    throw std::logic_error("unreachable loss kind");
}

double conjugate_value(const LossFamily& family, double a, double y) {
    check_label(family, y);
    switch (family.kind) {
        case LossKind::squared:
            return 0.5 * a * a + a * y;
        case LossKind::logistic: {
            const double b = -y * a;
            if (b < 0.0 || b > 1.0) {
                throw std::domain_error("logistic conjugate needs -y*a in [0,1]");
            }
            return xlogx(b) + xlogx(1.0 - b);
        }
        case LossKind::hinge: {
            const double b = -y * a;
            if (b < 0.0 || b > 1.0) {
                throw std::domain_error("hinge conjugate needs -y*a in [0,1]");
            }
            return y * a;
        }
        case LossKind::smoothed_hinge: {
            const double b = -y * a;
            if (b < 0.0 || b > 1.0) {
                throw std::domain_error("smoothed hinge conjugate needs -y*a in [0,1]");
            }
            return y * a + 0.5 * family.smoothing * a * a;
        }
    }
    throw std::logic_error("unreachable loss kind");
}

double coordinate_update(const LossFamily& family, double current, double y, double margin,
                         double row_norm_sq, Index n, double lambda) {
    check_label(family, y);
    if (!std::isfinite(current) || !std::isfinite(y) || !std::isfinite(margin) ||
        !std::isfinite(row_norm_sq)) {
        throw std::invalid_argument("coordinate_update: non-finite input");
    }
    if (n < 1 || !(lambda > 0.0) || row_norm_sq < 0.0) {
        throw std::invalid_argument("coordinate_update: bad problem constants");
    }
    const double q = row_norm_sq / (static_cast<double>(n) * lambda);
    switch (family.kind) {
        case LossKind::squared:
            return (margin - y + q * current) / (1.0 + q);
        case LossKind::logistic:
            return logistic_update(current, y, margin, q);
        case LossKind::hinge: {
            if (q == 0.0) {
                // Zero row: the quadratic term vanishes, minimize the linear
                // part (y - margin) * a over the domain.
                const double slope = y - margin;
                if (slope > 0.0) return domain_lo(y);
                if (slope < 0.0) return domain_hi(y);
                return current;
            }
            const double unconstrained = current + (margin - y) / q;
            return std::clamp(unconstrained, domain_lo(y), domain_hi(y));
        }
        case LossKind::smoothed_hinge: {
            const double gamma = family.smoothing;
            if (gamma <= 0.0) {
                // Width-zero smoothing is plain hinge.
                LossFamily hinge_family;
                hinge_family.kind = LossKind::hinge;
                return coordinate_update(hinge_family, current, y, margin, row_norm_sq, n, lambda);
            }
            const double unconstrained = (margin - y + q * current) / (gamma + q);
            return std::clamp(unconstrained, domain_lo(y), domain_hi(y));
        }
    }
    throw std::logic_error("unreachable loss kind");
}

}  // namespace dualloco
