#pragma once

#include <cmath>
#include <string>

#include "carleman/weights/field.hpp"

namespace carleman::weights {

struct CarlemanParams {
    double lambda = 1.0;
    double mu = 1.0;
    double d = 1.0;
    double epsilon = 0.1;

    void validate() const {
        require(lambda > 0.0, ErrorKind::precondition, "lambda must be positive");
        require(mu > 0.0, ErrorKind::precondition, "mu must be positive");
        require(epsilon > 0.0 && epsilon <= 1.0, ErrorKind::precondition, "epsilon must lie in (0, 1]");
    }
};

enum class ThetaSign { normal, hat };

/// Values of the exponential family at one point. theta is also carried as
/// its logarithm lambda * alpha, which stays finite when theta underflows.
struct ThetaSample {
    double varphi = 0.0, varphi_t = 0.0;
    double alpha = 0.0, alpha_t = 0.0, alpha_tt = 0.0;
    double log_theta = 0.0, theta = 0.0;
};

/// varphi = e^{s mu psi}/w(t), alpha = (e^{s mu psi} - e^{mu d})/w(t), theta =
/// e^{lambda alpha}, w(t) = (t - ta)(tb - t), s = +1 (normal) or -1 (hat).
class ThetaFamily {
public:
    ThetaFamily(CarlemanParams params, double psi_sup, double ta, double tb, ThetaSign sign = ThetaSign::normal)
        : p_(params), ta_(ta), tb_(tb), sign_(sign) {
        require(params.lambda >= 0.0 && params.mu >= 0.0, ErrorKind::precondition, "lambda and mu must be nonnegative");
        require(tb > ta, ErrorKind::precondition, "time window must satisfy ta < tb");
        require(params.d > psi_sup, ErrorKind::precondition,
                "d = " + std::to_string(params.d) + " must exceed sup psi = " + std::to_string(psi_sup));
        e_d_ = std::exp(params.mu * params.d);
    }

    const CarlemanParams& params() const { return p_; }
    double ta() const { return ta_; }
    double tb() const { return tb_; }
    ThetaSign sign() const { return sign_; }

    /// Evaluates the family for weight value psi with time derivatives psi_t, psi_tt.
    ThetaSample at(double t, double psi, double psi_t = 0.0, double psi_tt = 0.0) const {
        require(t > ta_ && t < tb_, ErrorKind::singularity,
                "weight evaluated at t = " + std::to_string(t) + " outside the open window (" + std::to_string(ta_) +
                    ", " + std::to_string(tb_) + ")");
        const double s = sign_ == ThetaSign::normal ? 1.0 : -1.0;
        const double mu = p_.mu;
        const double w = (t - ta_) * (tb_ - t);
        const double w1 = (ta_ + tb_) - 2.0 * t;
        const double w2 = -2.0;
        const double E = std::exp(s * mu * psi);
        const double E1 = s * mu * psi_t * E;
        const double E2 = (s * mu * psi_tt + mu * mu * psi_t * psi_t) * E;
        const double num = E - e_d_;
        ThetaSample r;
        r.varphi = E / w;
        r.varphi_t = E1 / w - E * w1 / (w * w);
        r.alpha = num / w;
        r.alpha_t = E1 / w - num * w1 / (w * w);
        r.alpha_tt = E2 / w - 2.0 * E1 * w1 / (w * w) - num * (w2 / (w * w) - 2.0 * w1 * w1 / (w * w * w));
        r.log_theta = p_.lambda * r.alpha;
        r.theta = std::exp(r.log_theta);
        return r;
    }

private:
    CarlemanParams p_;
    double ta_, tb_;
    ThetaSign sign_;
    double e_d_;
};

/// d = (|phi|_inf + |phi~|_inf)(1 + 1e-9), strictly above both weights.
inline double default_d(double sup_phi, double sup_phi_tilde) {
    return (std::abs(sup_phi) + std::abs(sup_phi_tilde)) * (1.0 + 1e-9);
}

} // namespace carleman::weights
