#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "trust/game_model.hpp"

namespace trust {

using GuiltVector = std::array<double, kGuiltTypes>;

/**
 * Dirichlet-Multinomial belief over the partner's guilt type.
 *
 * Each observation adds, per type, the probability that the modeled partner
 * of that type would have chosen the observed action. This is the analytic
 * stand-in for the full interactive-state Bayes filter: parameters start at
 * one and only ever grow, by at most one per observation.
 */
class DirMultBelief {
public:
    constexpr DirMultBelief() = default;

    explicit DirMultBelief(const GuiltVector& params) : params_(params)
    {
        for (double a : params_)
            if (!(a > 0.0) || !std::isfinite(a))
                throw std::domain_error("Dirichlet parameters must be positive and finite");
    }

    static constexpr DirMultBelief prior() { return DirMultBelief(); }

    const GuiltVector& params() const { return params_; }

    GuiltVector predictive() const
    {
        const double total = params_[0] + params_[1] + params_[2];
        return {params_[0] / total, params_[1] / total, params_[2] / total};
    }

    [[nodiscard]] DirMultBelief update(const GuiltVector& likelihoods) const
    {
        DirMultBelief next = *this;
        for (int i = 0; i < kGuiltTypes; ++i) {
            const double l = likelihoods[i];
            if (!(l >= 0.0 && l <= 1.0))
                throw std::domain_error("likelihood outside [0,1]: " + std::to_string(l));
            next.params_[i] += l;
        }
        return next;
    }

    friend bool operator==(const DirMultBelief&, const DirMultBelief&) = default;

private:
    GuiltVector params_{1.0, 1.0, 1.0};
};

} // namespace trust
