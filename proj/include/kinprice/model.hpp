#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace kinprice {

/// Thrown when a model or run parameter violates its invariant. `key()` is the
/// configuration key of the offending field so callers can report it verbatim.
class ParameterError : public std::invalid_argument {
public:
    ParameterError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Two-branch reference-point value function. Gains (x >= reference) use
/// `gain_slope`, losses use `loss_slope`; loss aversion means loss_slope >= gain_slope.
struct ValueFunctionSpec {
    double reference = 0.0;
    double gain_slope = 2.0;
    double loss_slope = 3.0;

    void validate() const;
    bool operator==(const ValueFunctionSpec&) const = default;
};

enum class NoiseLaw { uniform, truncated_gaussian };

struct ModelParams {
    double alpha1 = 0.5;   // weight of the partner's opinion
    double alpha2 = 0.0;   // weight of the value function
    double beta = 1.0;     // price speed of evaluation
    double sigma2 = 0.01;  // opinion noise variance
    double zeta2 = 0.1;    // price noise variance
    double a = 0.0;        // herding offset
    double b = 1.0;        // herding slope
    double gamma_D = 1.0;  // diffusion exponent
    double gamma_F = 0.0;  // fundamentalist reaction strength
    double rho = 1.0;      // chartist density
    double rho_F = 0.0;    // fundamentalist density
    double S_F = 1.0;      // fundamental price
    double t_C = 1.0;      // time constant in the crash fixed point
    ValueFunctionSpec value_fn{};
    NoiseLaw noise = NoiseLaw::uniform;

    /// Throws ParameterError naming the first violated constraint.
    void validate() const;
    bool operator==(const ModelParams&) const = default;
};

/// Quasi-invariant rescaling: interaction strengths and noise variances are
/// multiplied by eps (time is stretched by 1/eps by the caller).
ModelParams scaled(const ModelParams& params, double eps);

// ---------------------------------------------------------------------------
// Microscopic ingredients

template <std::floating_point Scalar>
Scalar herding(Scalar y, Scalar a, Scalar b) {
    if (!(std::abs(y) <= Scalar(1))) throw std::domain_error("herding: |y| > 1");
    return a + b * (Scalar(1) - std::abs(y));
}

template <std::floating_point Scalar>
Scalar diffusion(Scalar y, Scalar gamma) {
    if (!(std::abs(y) <= Scalar(1))) throw std::domain_error("diffusion: |y| > 1");
    return std::pow(Scalar(1) - y * y, gamma);
}

/// Phi(x) = tanh(gain_slope (x - R)) for x >= R, tanh(loss_slope (x - R)) otherwise.
/// Bounded in (-1, 1), Phi(R) = 0, concave on gains and convex on losses.
template <std::floating_point Scalar>
Scalar value_function(Scalar x, const ValueFunctionSpec& spec) {
    const Scalar shift = x - Scalar(spec.reference);
    const Scalar slope = shift >= Scalar(0) ? Scalar(spec.gain_slope) : Scalar(spec.loss_slope);
    return std::tanh(slope * shift);
}

struct OpinionPair {
    double y;
    double y_star;
};

/// One value-coupled binary exchange. Returns nullopt when either post-interaction
/// opinion leaves [-1, 1]; the pair then keeps its old states.
std::optional<OpinionPair> interact_opinions(double y, double y_star, double phi, double eta,
                                             double eta_star, const ModelParams& params);

/// Pure herding exchange (no value-function coupling).
std::optional<OpinionPair> interact_opinions_herding(double y, double y_star, double eta,
                                                     double eta_star, const ModelParams& params);

/// s' = s + beta (rho Y s + rho_F gamma_F (S_F - s)) + eta s, rejected when s' < 0.
std::optional<double> update_price(double s, double mean_propensity, double eta,
                                   const ModelParams& params);

// ---------------------------------------------------------------------------
// Ensembles

struct AgentEnsemble {
    Eigen::ArrayXd y;
    double weight = 0.0;  // mass per sample; y.size() * weight == rho
};

struct PriceEnsemble {
    Eigen::ArrayXd s;
    double weight = 0.0;  // probability per sample
};

double mean_propensity(const AgentEnsemble& agents);
double mean_price(const PriceEnsemble& prices);
double second_moment(const PriceEnsemble& prices);

}  // namespace kinprice
