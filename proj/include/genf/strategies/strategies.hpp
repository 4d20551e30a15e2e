#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>

#include "genf/cwgan/cwgan.hpp"
#include "genf/errors.hpp"
#include "genf/predictor/lstm_baseline.hpp"
#include "genf/predictor/predictor.hpp"

namespace genf::strategies {

using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Model adapters. The forecasting operations below are written against these
// small type-erased interfaces so that trained networks and hand-written test
// doubles are interchangeable. Wrappers capture the wrapped parameters by
// reference; the caller keeps them alive for the adapter's lifetime.
// ---------------------------------------------------------------------------

// A model that maps one M x K window to a scalar forecast of one feature a
// fixed number of steps past the window end.
struct ScalarForecaster {
    int horizon = 0;         // steps past the window end the forecast refers to
    int target_feature = 0;  // which column the scalar describes
    std::function<double(const Matrix&)> predict;
};

// A model that maps one M x K window to the next row (1 x K).
struct OneStepModel {
    std::function<Matrix(const Matrix&)> step;
};

// A model that appends `steps` plausible future rows to a window, returning
// them as a steps x K matrix (it does not modify the window itself).
using ExtendFn = std::function<Matrix(const Matrix&, int steps)>;

inline ScalarForecaster scalar_forecaster(const predictor::PredictorParams& p) {
    if (p.out_features != 1)
        throw ContractError("scalar forecaster needs a single-output head, got " +
                            std::to_string(p.out_features) + " outputs");
    ScalarForecaster f;
    f.horizon = p.horizon;
    f.target_feature = p.target_feature;
    f.predict = [params = &p](const Matrix& w) {
        return predictor::predictor_forward(*params, w)(0, 0);
    };
    return f;
}

inline ScalarForecaster scalar_forecaster(const predictor::LstmBaselineParams& p) {
    if (p.out_features != 1)
        throw ContractError("scalar forecaster needs a single-output head, got " +
                            std::to_string(p.out_features) + " outputs");
    ScalarForecaster f;
    f.horizon = p.horizon;
    f.target_feature = p.target_feature;
    f.predict = [params = &p](const Matrix& w) {
        return predictor::lstm_baseline_forward(*params, w)(0, 0);
    };
    return f;
}

inline OneStepModel one_step_model(const predictor::PredictorParams& p) {
    if (p.horizon != 1)
        throw ContractError("one-step model must be trained at horizon 1, got " +
                            std::to_string(p.horizon));
    if (p.out_features != p.features)
        throw ContractError("one-step model must emit every feature: " +
                            std::to_string(p.out_features) + " outputs for " +
                            std::to_string(p.features) + " features");
    OneStepModel m;
    m.step = [params = &p](const Matrix& w) {
        return predictor::predictor_forward(*params, w);
    };
    return m;
}

// Deterministic one-step view of a trained generator: the noise input is
// pinned to zero so repeated calls agree.
inline OneStepModel one_step_model(const cwgan::GeneratorParams& p) {
    OneStepModel m;
    m.step = [params = &p](const Matrix& w) {
        return cwgan::generator_forward(*params, w,
                                        Eigen::VectorXd::Zero(params->features));
    };
    return m;
}

// Stochastic window extension from a trained generator. One fixed seed per
// adapter: calling it twice on the same window reproduces the same rows.
inline ExtendFn generator_extender(const cwgan::GeneratorParams& p, std::uint64_t seed) {
    return [params = &p, seed](const Matrix& w, int steps) {
        return cwgan::generate_recursive(*params, w, steps, seed);
    };
}

// ---------------------------------------------------------------------------
// Forecasting operations
// ---------------------------------------------------------------------------

// One forward pass of a model trained for exactly this horizon.
inline double forecast_direct(const ScalarForecaster& model, const Matrix& window, int n) {
    if (n < 1) throw ContractError("forecast: horizon must be >= 1");
    if (model.horizon != n)
        throw ContractError("forecast: model was trained for horizon " +
                            std::to_string(model.horizon) + ", requested " + std::to_string(n));
    if (!model.predict) throw ContractError("forecast: model has no predict function");
    return model.predict(window);
}

// n chained one-step predictions: each emitted row is appended to the window
// (oldest row dropped) and fed back. The forecast is the target feature of
// the last emitted row.
inline double forecast_iterative(const OneStepModel& model, Matrix window, int n,
                                 int target_feature) {
    if (n < 1) throw ContractError("forecast: horizon must be >= 1");
    if (window.rows() < 1 || window.cols() < 1)
        throw ContractError("forecast: empty window");
    if (target_feature < 0 || target_feature >= window.cols())
        throw ContractError("forecast: target feature " + std::to_string(target_feature) +
                            " out of range for " + std::to_string(window.cols()) + " features");
    if (!model.step) throw ContractError("forecast: model has no step function");

    const Eigen::Index m = window.rows();
    Matrix last;
    for (int s = 0; s < n; ++s) {
        last = model.step(std::as_const(window));
        if (last.rows() != 1 || last.cols() != window.cols())
            throw ContractError("forecast: one-step model emitted " +
                                std::to_string(last.rows()) + "x" + std::to_string(last.cols()) +
                                ", expected 1x" + std::to_string(window.cols()));
        if (m > 1) window.topRows(m - 1) = window.bottomRows(m - 1).eval();
        window.row(m - 1) = last.row(0);
    }
    return last(0, target_feature);
}

// Slide a window past `synthetic.rows()` generated rows: the oldest rows are
// dropped and the synthetic rows appended, keeping the row count fixed.
inline Matrix extend_window(const Matrix& window, const Matrix& synthetic) {
    const Eigen::Index m = window.rows();
    const Eigen::Index l = synthetic.rows();
    if (l < 0 || l > m)
        throw ContractError("extend: cannot append " + std::to_string(l) + " rows to a " +
                            std::to_string(m) + "-row window");
    if (l > 0 && synthetic.cols() != window.cols())
        throw ContractError("extend: synthetic rows have " + std::to_string(synthetic.cols()) +
                            " features, window has " + std::to_string(window.cols()));
    Matrix out(m, window.cols());
    out.topRows(m - l) = window.bottomRows(m - l);
    if (l > 0) out.bottomRows(l) = synthetic;
    return out;
}

// Generate l rows, slide the window past them, then take one direct forecast
// from a model trained (on equally rewritten windows) against targets n steps
// past the original window end. With l == 0 this is forecast_direct exactly:
// same code path, bit-identical result.
inline double forecast_genf(const ExtendFn& extend, const ScalarForecaster& model,
                            const Matrix& window, int l, int n) {
    if (n < 1) throw ContractError("forecast: horizon must be >= 1");
    if (l < 0) throw ConfigError("forecast: synthetic step count must be >= 0");
    if (l >= n)
        throw ConfigError("forecast: synthetic step count " + std::to_string(l) +
                          " must stay below the horizon " + std::to_string(n));
    if (l == 0) return forecast_direct(model, window, n);
    if (!extend) throw ContractError("forecast: no window extender supplied");
    const Matrix synthetic = extend(window, l);
    if (synthetic.rows() != l || synthetic.cols() != window.cols())
        throw ContractError("forecast: extender returned " + std::to_string(synthetic.rows()) +
                            "x" + std::to_string(synthetic.cols()) + ", expected " +
                            std::to_string(l) + "x" + std::to_string(window.cols()));
    return forecast_direct(model, extend_window(window, synthetic), n);
}

// ---------------------------------------------------------------------------
// Strategy descriptors
// ---------------------------------------------------------------------------

enum class StrategyKind { kDirect, kIterative, kGenerative };

inline std::string strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::kDirect: return "direct";
        case StrategyKind::kIterative: return "iterative";
        case StrategyKind::kGenerative: return "genf";
    }
    throw ContractError("unknown strategy kind");
}

// One experiment cell: a strategy at horizon n, with l synthetic steps for
// the generative strategy (l is meaningful only there; 0 degenerates to the
// direct strategy).
struct StrategySpec {
    StrategyKind kind = StrategyKind::kDirect;
    int horizon = 1;      // n
    int synth_steps = 0;  // l

    void validate() const {
        if (horizon < 1) throw ConfigError("strategy: horizon must be >= 1");
        if (kind == StrategyKind::kGenerative) {
            if (synth_steps < 0)
                throw ConfigError("strategy: synthetic step count must be >= 0");
            if (synth_steps >= horizon)
                throw ConfigError("strategy: synthetic step count " +
                                  std::to_string(synth_steps) +
                                  " must stay below the horizon " + std::to_string(horizon));
        } else if (synth_steps != 0) {
            throw ConfigError("strategy: only the generative strategy takes synthetic steps");
        }
    }
};

}  // namespace genf::strategies
