#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "genf/errors.hpp"

namespace genf::theory {

// Inputs to the analytic error-propagation bounds.
//   l1, l2      : Lipschitz-style constants of the one-step map (linear and
//                 quadratic growth terms of the propagated deviation)
//   alpha       : one-step generator inaccuracy factor
//   sigma_i     : one-step input scale; the recursion starts at alpha*sigma_i^2
//   sigma_d     : direct-model input scale
//   beta0..2    : deviation sensitivities (synthetic input, horizon growth,
//                 direct-input deviation)
//   horizon     : total steps ahead N
//   synth_steps : synthetic prefix length L used by the hybrid strategy
struct TheoryParams {
    double l1 = 0.0;
    double l2 = 0.0;
    double alpha = 0.0;
    double sigma_i = 0.0;
    double sigma_d = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    int horizon = 1;
    int synth_steps = 0;
};

struct RecurrenceResult {
    double value = 0.0;
    bool saturated = false;  // overflowed double range; value is +infinity
};

namespace detail {
constexpr double kSaturationCeiling = 1e300;
}

// Propagated one-step deviation bound:
//   b(1)   = alpha * sigma_i^2
//   b(k+1) = b(k) * (l1 + 1 + b(k) * l2)
// The sequence grows doubly exponentially for positive parameters; once it
// leaves the representable range the result saturates to +infinity and the
// flag is set (callers can then report "bound vacuous" instead of garbage).
inline RecurrenceResult recurrence_b(double alpha, double sigma_i, double l1, double l2,
                                     int k) {
    if (k < 1) throw ContractError("recurrence_b requires k >= 1");
    double b = alpha * sigma_i * sigma_i;
    for (int i = 1; i < k; ++i) {
        b = b * (l1 + 1.0 + b * l2);
        if (!std::isfinite(b) || b > detail::kSaturationCeiling) {
            return {std::numeric_limits<double>::infinity(), true};
        }
    }
    if (!std::isfinite(b)) return {std::numeric_limits<double>::infinity(), true};
    return {b, false};
}

inline RecurrenceResult recurrence_b(const TheoryParams& p, int k) {
    return recurrence_b(p.alpha, p.sigma_i, p.l1, p.l2, k);
}

// Upper bound on the N-step error of the pure direct strategy.
inline double u_direct(const TheoryParams& p) {
    if (p.horizon < 1) throw ContractError("u_direct requires horizon >= 1");
    return (p.horizon - 1) * p.beta1 + p.sigma_d * p.sigma_d * p.beta2;
}

// Upper bound for the pure iterative strategy: b(N)^2.
inline RecurrenceResult u_iterative(const TheoryParams& p) {
    if (p.horizon < 1) throw ContractError("u_iterative requires horizon >= 1");
    const RecurrenceResult b = recurrence_b(p, p.horizon);
    if (b.saturated) return b;
    const double v = b.value * b.value;
    if (!std::isfinite(v) || v > detail::kSaturationCeiling)
        return {std::numeric_limits<double>::infinity(), true};
    return {v, false};
}

// Upper bound for the hybrid strategy with L synthetic steps followed by a
// direct hop of N-L:  b(L)^2 * beta0 + (N-L-1) * beta1 + sigma_d^2 * beta2.
// L = 0 reduces to the direct bound.
inline RecurrenceResult u_hybrid(const TheoryParams& p, int l) {
    if (p.horizon < 1) throw ContractError("u_hybrid requires horizon >= 1");
    if (l < 0 || l >= p.horizon)
        throw ContractError("u_hybrid requires 0 <= L < horizon, got L=" + std::to_string(l));
    const double tail = (p.horizon - l - 1) * p.beta1 + p.sigma_d * p.sigma_d * p.beta2;
    if (l == 0) return {tail, false};
    const RecurrenceResult b = recurrence_b(p, l);
    if (b.saturated) return b;
    const double v = b.value * b.value * p.beta0 + tail;
    if (!std::isfinite(v) || v > detail::kSaturationCeiling)
        return {std::numeric_limits<double>::infinity(), true};
    return {v, false};
}

// All three strategy bounds for one parameter set (hybrid at p.synth_steps).
struct StrategyBounds {
    double direct = 0.0;
    RecurrenceResult iterative;
    RecurrenceResult hybrid;
};

inline StrategyBounds bounds(const TheoryParams& p) {
    return {u_direct(p), u_iterative(p), u_hybrid(p, p.synth_steps)};
}

// Outcome of the analytic advantage condition.  condition_holds reports
// whether beta0 lies strictly below the threshold
//   min{ beta1 / b(1)^2,  (b(N)^2 - sigma_d^2 beta2) / b(N-1)^2 },
// under which the hybrid bound beats both pure strategies for some L.
// any_l_regime additionally reports whether the two pure bounds are within
// rel_tol of each other (then every 0 < L < N wins, not just the best one).
struct AdvantageReport {
    bool condition_holds = false;
    double threshold = 0.0;
    std::optional<int> best_l;  // argmin over 1..N-1 of the hybrid bound
    bool any_l_regime = false;
    std::string reason;  // populated when condition_holds is false
};

inline AdvantageReport advantage_check(const TheoryParams& p, double any_l_rel_tol = 0.05) {
    if (p.horizon < 2)
        throw ConfigError("advantage_check requires horizon >= 2 (no interior L exists)");
    AdvantageReport rep;
    const double inf = std::numeric_limits<double>::infinity();

    const RecurrenceResult b1 = recurrence_b(p, 1);
    const RecurrenceResult bn = recurrence_b(p, p.horizon);
    const RecurrenceResult bn1 = recurrence_b(p, p.horizon - 1);
    if (bn.saturated || bn1.saturated) {
        // Iterative bound is vacuous: the ratio test is meaningless.
        rep.reason = "iterative recurrence saturated; bounds not comparable";
        return rep;
    }

    const double b1sq = b1.value * b1.value;
    const double r1 = b1sq > 0.0 ? p.beta1 / b1sq : inf;
    const double num2 = bn.value * bn.value - p.sigma_d * p.sigma_d * p.beta2;
    if (num2 <= 0.0) {
        rep.reason = "iterative bound does not exceed the irreducible direct term";
        rep.threshold = 0.0;
        return rep;
    }
    const double bn1sq = bn1.value * bn1.value;
    const double r2 = bn1sq > 0.0 ? num2 / bn1sq : inf;
    rep.threshold = std::min(r1, r2);
    rep.condition_holds = p.beta0 < rep.threshold;
    if (!rep.condition_holds) {
        rep.reason = "beta0 not below threshold";
        return rep;
    }

    double best = inf;
    for (int l = 1; l < p.horizon; ++l) {
        const RecurrenceResult u = u_hybrid(p, l);
        if (u.saturated) continue;
        if (u.value < best) {
            best = u.value;
            rep.best_l = l;
        }
    }

    const double ud = u_direct(p);
    const RecurrenceResult ui = u_iterative(p);
    if (!ui.saturated) {
        const double scale = std::max(std::abs(ud), std::abs(ui.value));
        rep.any_l_regime = scale > 0.0 && std::abs(ud - ui.value) <= any_l_rel_tol * scale;
    }
    return rep;
}

}  // namespace genf::theory
