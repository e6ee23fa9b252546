#include "dopamine/shaping.hpp"

#include <cmath>
#include <sstream>

namespace dopamine::shaping {

ShapingConfig ShapingConfig::from_rate(double lambda, double h, double delta) {
    ShapingConfig cfg;
    cfg.lambda_rate = lambda;
    cfg.step_h = h;
    cfg.gamma = std::exp(-lambda * h);
    cfg.completion_margin_delta = delta;
    cfg.validate();
    return cfg;
}

ShapingConfig ShapingConfig::from_gamma(double gamma, double h, double delta) {
    ShapingConfig cfg;
    cfg.gamma = gamma;
    cfg.step_h = h;
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0,1)");
    cfg.lambda_rate = -std::log(gamma) / h;
    cfg.completion_margin_delta = delta;
    cfg.validate();
    return cfg;
}

void ShapingConfig::validate() const {
    if (!(lambda_rate >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(step_h > 0.0)) throw ConfigError("step_h must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0,1)");
    if (!(completion_margin_delta > 0.0 && completion_margin_delta < 1.0)) {
        throw ConfigError("delta must be in (0,1)");
    }
    const double expected = std::exp(-lambda_rate * step_h);
    if (std::fabs(expected - gamma) > 1e-12) {
        throw ConfigError("gamma inconsistent with exp(-lambda*step_h)");
    }
}

std::string ShapingConfig::to_kv() const {
    std::ostringstream os;
    os.precision(17);
    os << "lambda = " << lambda_rate << "\n"
       << "step_h = " << step_h << "\n"
       << "gamma = " << gamma << "\n"
       << "delta = " << completion_margin_delta << "\n";
    return os.str();
}

ShapingConfig ShapingConfig::from_kv_text(const std::string& text) {
    double lambda = -1.0, h = -1.0, gamma = -1.0, delta = 0.05;
    bool has_lambda = false, has_h = false, has_gamma = false;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty()) continue;
        try {
            if (key == "lambda") { lambda = std::stod(val); has_lambda = true; }
            else if (key == "step_h") { h = std::stod(val); has_h = true; }
            else if (key == "gamma") { gamma = std::stod(val); has_gamma = true; }
            else if (key == "delta") { delta = std::stod(val); }
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value for key '" + key + "': " + val);
        }
    }
    // Either (lambda, step_h) or gamma pins the discount; gamma wins if both
    // are consistent, conflicts are rejected.
    if (has_gamma) {
        const double step = has_h ? h : 1.0;
        ShapingConfig cfg = ShapingConfig::from_gamma(gamma, step, delta);
        if (has_lambda && std::fabs(std::exp(-lambda * step) - gamma) > 1e-12) {
            throw ConfigError("lambda and gamma disagree: gamma != exp(-lambda*step_h)");
        }
        return cfg;
    }
    if (has_lambda) {
        return ShapingConfig::from_rate(lambda, has_h ? h : 1.0, delta);
    }
    throw ConfigError("shaping config needs either gamma or lambda");
}

double discounted_shaping_sum(std::span<const progress::Progress> phis,
                              const ShapingConfig& cfg) {
    std::vector<double> raw;
    raw.reserve(phis.size());
    for (const auto& p : phis) raw.push_back(p.value());
    return kernels::discounted_shaping_sum(raw, cfg.gamma);
}

double euler_consistency_error(double lambda_rate, const PhiPath& phi_path, double h,
                               double horizon_T) {
    if (!(h > 0.0)) throw std::domain_error("step h must be > 0");
    if (!(horizon_T > 0.0)) throw std::domain_error("horizon must be > 0");
    const auto steps = static_cast<std::size_t>(std::llround(horizon_T / h));
    double sum = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        const double density = phi_path.derivative(t) - lambda_rate * phi_path.value(t);
        sum += h * std::exp(-lambda_rate * t) * density;
    }
    const double t_end = static_cast<double>(steps) * h;
    const double boundary =
        std::exp(-lambda_rate * t_end) * phi_path.value(t_end) - phi_path.value(0.0);
    return std::fabs(sum - boundary);
}

}  // namespace dopamine::shaping
