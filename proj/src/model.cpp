#include "kinprice/model.hpp"

namespace kinprice {

namespace {

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ParameterError(key, what);
}

void require_unit_interval(double y, const char* what) {
    if (!(std::abs(y) <= 1.0)) throw std::domain_error(std::string(what) + " outside [-1, 1]");
}

}  // namespace

void ValueFunctionSpec::validate() const {
    require(std::isfinite(reference), "value_fn.reference", "must be finite");
    require(gain_slope > 0.0 && std::isfinite(gain_slope), "value_fn.gain_slope", "must be > 0");
    require(loss_slope > 0.0 && std::isfinite(loss_slope), "value_fn.loss_slope", "must be > 0");
    require(loss_slope >= gain_slope, "value_fn.loss_slope",
            "loss aversion requires loss_slope >= gain_slope");
}

void ModelParams::validate() const {
    require(alpha1 >= 0.0 && alpha1 <= 1.0, "alpha1", "must lie in [0, 1]");
    require(alpha2 >= 0.0 && alpha2 <= 1.0, "alpha2", "must lie in [0, 1]");
    require(alpha1 + alpha2 <= 1.0, "alpha2", "alpha1 + alpha2 must be <= 1");
    require(beta > 0.0 && std::isfinite(beta), "beta", "must be > 0");
    require(sigma2 >= 0.0 && std::isfinite(sigma2), "sigma2", "must be >= 0");
    require(zeta2 >= 0.0 && std::isfinite(zeta2), "zeta2", "must be >= 0");
    require(a >= 0.0, "a", "must be >= 0");
    require(b > 0.0, "b", "must be > 0");
    require(a + b <= 1.0, "b", "a + b must be <= 1");
    require(gamma_D > 0.0 && std::isfinite(gamma_D), "gamma_D", "must be > 0");
    require(gamma_F >= 0.0 && std::isfinite(gamma_F), "gamma_F", "must be >= 0");
    require(rho > 0.0 && std::isfinite(rho), "rho", "must be > 0");
    require(rho_F >= 0.0 && std::isfinite(rho_F), "rho_F", "must be >= 0");
    require(S_F > 0.0 && std::isfinite(S_F), "S_F", "must be > 0");
    require(t_C > 0.0 && std::isfinite(t_C), "t_C", "must be > 0");
    value_fn.validate();
}

ModelParams scaled(const ModelParams& params, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ParameterError("scale_eps", "must lie in (0, 1]");
    ModelParams out = params;
    out.alpha1 *= eps;
    out.alpha2 *= eps;
    out.sigma2 *= eps;
    out.beta *= eps;
    out.zeta2 *= eps;
    return out;
}

std::optional<OpinionPair> interact_opinions(double y, double y_star, double phi, double eta,
                                             double eta_star, const ModelParams& p) {
    require_unit_interval(y, "y");
    require_unit_interval(y_star, "y_star");
    require_unit_interval(phi, "phi");

    const double h = herding(y, p.a, p.b);
    const double h_star = herding(y_star, p.a, p.b);
    const double y_new = (1.0 - p.alpha1 * h - p.alpha2) * y + p.alpha1 * h * y_star +
                         p.alpha2 * phi + diffusion(y, p.gamma_D) * eta;
    const double y_star_new = (1.0 - p.alpha1 * h_star - p.alpha2) * y_star +
                              p.alpha1 * h_star * y + p.alpha2 * phi +
                              diffusion(y_star, p.gamma_D) * eta_star;

    if (!(std::abs(y_new) <= 1.0 && std::abs(y_star_new) <= 1.0)) return std::nullopt;
    return OpinionPair{y_new, y_star_new};
}

std::optional<OpinionPair> interact_opinions_herding(double y, double y_star, double eta,
                                                     double eta_star, const ModelParams& p) {
    require_unit_interval(y, "y");
    require_unit_interval(y_star, "y_star");

    const double h = herding(y, p.a, p.b);
    const double h_star = herding(y_star, p.a, p.b);
    const double y_new = (1.0 - p.alpha1 * h) * y + p.alpha1 * h * y_star +
                         diffusion(y, p.gamma_D) * eta;
    const double y_star_new = (1.0 - p.alpha1 * h_star) * y_star + p.alpha1 * h_star * y +
                              diffusion(y_star, p.gamma_D) * eta_star;

    if (!(std::abs(y_new) <= 1.0 && std::abs(y_star_new) <= 1.0)) return std::nullopt;
    return OpinionPair{y_new, y_star_new};
}

std::optional<double> update_price(double s, double mean_propensity, double eta,
                                   const ModelParams& p) {
    if (!(s >= 0.0)) throw std::domain_error("update_price: negative price");
    const double drift = p.rho * mean_propensity * s + p.rho_F * p.gamma_F * (p.S_F - s);
    const double s_new = s + p.beta * drift + eta * s;
    if (!(s_new >= 0.0)) return std::nullopt;
    return s_new;
}

double mean_propensity(const AgentEnsemble& agents) {
    if (agents.y.size() == 0) throw std::invalid_argument("mean_propensity: empty ensemble");
    return agents.y.mean();
}

double mean_price(const PriceEnsemble& prices) {
    if (prices.s.size() == 0) throw std::invalid_argument("mean_price: empty ensemble");
    return prices.s.mean();
}

double second_moment(const PriceEnsemble& prices) {
    if (prices.s.size() == 0) throw std::invalid_argument("second_moment: empty ensemble");
    return prices.s.square().mean();
}

}  // namespace kinprice
