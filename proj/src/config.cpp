#include "kinprice/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "kinprice/csv.hpp"

namespace kinprice {

namespace {

struct Field {
    ConfigKey doc;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParameterError(std::string(key), "not a number: '" + std::string(text) + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
    Int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParameterError(std::string(key), "not an integer: '" + std::string(text) + "'");
    return v;
}

template <typename Member>
Field real(std::string_view key, std::string_view doc, Member member) {
    return {{key, doc},
            [key, member](ExperimentConfig& c, std::string_view v) {
                member(c) = parse_double(key, v);
            },
            [member](const ExperimentConfig& c) {
                return format_double(member(c));
            }};
}

template <typename Int, typename Member>
Field integer(std::string_view key, std::string_view doc, Member member) {
    return {{key, doc},
            [key, member](ExperimentConfig& c, std::string_view v) {
                member(c) = parse_int<Int>(key, v);
            },
            [member](const ExperimentConfig& c) {
                return std::to_string(member(c));
            }};
}

template <typename Member>
Field text(std::string_view key, std::string_view doc, Member member) {
    return {{key, doc},
            [key, member](ExperimentConfig& c, std::string_view v) {
                if (v.empty()) throw ParameterError(std::string(key), "must not be empty");
                member(c) = std::string(v);
            },
            [member](const ExperimentConfig& c) {
                return member(c);
            }};
}

const std::vector<Field>& fields() {
    using C = ExperimentConfig;
    static const std::vector<Field> table = {
        text("name", "experiment name (output subdirectory)", [](auto& c) -> auto& { return c.name; }),
        text("output_dir", "output root for this experiment", [](auto& c) -> auto& { return c.output_dir; }),
        real("alpha1", "weight of the partner's opinion, [0,1]", [](auto& c) -> auto& { return c.model.alpha1; }),
        real("alpha2", "weight of the value function, [0,1], alpha1+alpha2<=1", [](auto& c) -> auto& { return c.model.alpha2; }),
        real("beta", "price speed of evaluation, > 0", [](auto& c) -> auto& { return c.model.beta; }),
        real("sigma2", "opinion noise variance, >= 0", [](auto& c) -> auto& { return c.model.sigma2; }),
        real("zeta2", "price noise variance, >= 0", [](auto& c) -> auto& { return c.model.zeta2; }),
        real("a", "herding offset, >= 0", [](auto& c) -> auto& { return c.model.a; }),
        real("b", "herding slope, > 0, a+b<=1", [](auto& c) -> auto& { return c.model.b; }),
        real("gamma_D", "diffusion exponent, > 0", [](auto& c) -> auto& { return c.model.gamma_D; }),
        real("gamma_F", "fundamentalist reaction strength, >= 0", [](auto& c) -> auto& { return c.model.gamma_F; }),
        real("rho", "chartist density, > 0", [](auto& c) -> auto& { return c.model.rho; }),
        real("rho_F", "fundamentalist density, >= 0", [](auto& c) -> auto& { return c.model.rho_F; }),
        real("S_F", "fundamental price, > 0", [](auto& c) -> auto& { return c.model.S_F; }),
        real("t_C", "time constant of the crash fixed point, > 0", [](auto& c) -> auto& { return c.model.t_C; }),
        real("value_fn.reference", "value function reference point R", [](auto& c) -> auto& { return c.model.value_fn.reference; }),
        real("value_fn.gain_slope", "slope scale on gains, > 0", [](auto& c) -> auto& { return c.model.value_fn.gain_slope; }),
        real("value_fn.loss_slope", "slope scale on losses, >= gain_slope", [](auto& c) -> auto& { return c.model.value_fn.loss_slope; }),
        {{"noise", "noise law: uniform | truncated_gaussian"},
         [](C& c, std::string_view v) {
             if (v == "uniform") c.model.noise = NoiseLaw::uniform;
             else if (v == "truncated_gaussian") c.model.noise = NoiseLaw::truncated_gaussian;
             else throw ParameterError("noise", "expected uniform or truncated_gaussian");
         },
         [](const C& c) {
             return std::string(c.model.noise == NoiseLaw::uniform ? "uniform" : "truncated_gaussian");
         }},
        integer<std::int64_t>("mc.n_agents", "opinion samples", [](auto& c) -> auto& { return c.mc.n_agents; }),
        integer<std::int64_t>("mc.n_prices", "price samples", [](auto& c) -> auto& { return c.mc.n_prices; }),
        real("mc.dt", "microscopic time step", [](auto& c) -> auto& { return c.mc.dt; }),
        real("mc.t_end", "macroscopic horizon", [](auto& c) -> auto& { return c.mc.t_end; }),
        real("mc.interaction_rate", "pair meeting rate per unit chartist density", [](auto& c) -> auto& { return c.mc.interaction_rate; }),
        real("mc.price_rate", "price updates per sample per unit time", [](auto& c) -> auto& { return c.mc.price_rate; }),
        integer<std::uint64_t>("mc.seed", "RNG seed", [](auto& c) -> auto& { return c.mc.seed; }),
        integer<std::int64_t>("mc.snapshot_every", "steps between histogram snapshots, 0 = first/last only", [](auto& c) -> auto& { return c.mc.snapshot_every; }),
        real("mc.scale_eps", "quasi-invariant scaling factor in (0,1]", [](auto& c) -> auto& { return c.mc.scale_eps; }),
        real("mc.crash_floor", "crash when S < crash_floor * S(0)", [](auto& c) -> auto& { return c.mc.crash_floor; }),
        integer<std::int64_t>("mc.opinion_bins", "opinion histogram bins", [](auto& c) -> auto& { return c.mc.opinion_bins; }),
        integer<std::int64_t>("mc.price_bins", "price histogram bins (log-spaced)", [](auto& c) -> auto& { return c.mc.price_bins; }),
        real("mc.price_hist_min", "price histogram lower edge / S_F", [](auto& c) -> auto& { return c.mc.price_hist_min; }),
        real("mc.price_hist_max", "price histogram upper edge / S_F", [](auto& c) -> auto& { return c.mc.price_hist_max; }),
        real("init.opinion_center", "initial opinions: center of the uniform law", [](auto& c) -> auto& { return c.init.opinion_center; }),
        real("init.opinion_half_width", "initial opinions: half width", [](auto& c) -> auto& { return c.init.opinion_half_width; }),
        real("init.price_mean", "initial prices: lognormal mean", [](auto& c) -> auto& { return c.init.price_mean; }),
        real("init.price_log_var", "initial prices: log-variance", [](auto& c) -> auto& { return c.init.price_log_var; }),
        integer<std::int64_t>("fp.opinion_cells", "FP opinion cells on [-1,1]", [](auto& c) -> auto& { return c.fp.opinion_cells; }),
        integer<std::int64_t>("fp.price_cells", "FP price cells (log-spaced)", [](auto& c) -> auto& { return c.fp.price_grid.cells; }),
        real("fp.s_min_rel", "FP price domain lower edge / S_F", [](auto& c) -> auto& { return c.fp.price_grid.s_min_rel; }),
        real("fp.s_max_rel", "FP price domain upper edge / S_F", [](auto& c) -> auto& { return c.fp.price_grid.s_max_rel; }),
        real("fp.dt", "FP time step", [](auto& c) -> auto& { return c.fp.dt; }),
        real("fp.t_end", "FP horizon", [](auto& c) -> auto& { return c.fp.t_end; }),
        integer<std::int64_t>("fp.snapshot_every", "FP steps between grid snapshots", [](auto& c) -> auto& { return c.fp.snapshot_every; }),
        real("steady.tol", "steady state: L1 change per unit time", [](auto& c) -> auto& { return c.steady.tol; }),
        integer<std::int64_t>("steady.max_steps", "steady state: step limit", [](auto& c) -> auto& { return c.steady.max_steps; }),
        integer<std::int64_t>("analysis.tail_k", "Hill order statistics, 0 = floor(n^(2/3))", [](auto& c) -> auto& { return c.tail_k; }),
    };
    return table;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

void ExperimentConfig::validate() const {
    model.validate();
    mc.validate(model);
    init.validate();
    if (fp.opinion_cells < 2) throw ParameterError("fp.opinion_cells", "need at least 2 cells");
    if (fp.price_grid.cells < 2) throw ParameterError("fp.price_cells", "need at least 2 cells");
    if (!(fp.price_grid.s_min_rel > 0.0 && fp.price_grid.s_max_rel > fp.price_grid.s_min_rel))
        throw ParameterError("fp.s_min_rel", "need 0 < s_min_rel < s_max_rel");
    if (!(fp.dt > 0.0)) throw ParameterError("fp.dt", "must be > 0");
    if (!(fp.t_end >= 0.0)) throw ParameterError("fp.t_end", "must be >= 0");
    if (fp.snapshot_every < 0) throw ParameterError("fp.snapshot_every", "must be >= 0");
    if (!(steady.tol > 0.0)) throw ParameterError("steady.tol", "must be > 0");
    if (steady.max_steps < 1) throw ParameterError("steady.max_steps", "must be >= 1");
    if (tail_k != 0 && tail_k < 20) throw ParameterError("analysis.tail_k", "must be 0 or >= 20");
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& f : fields()) out.push_back(f.doc);
        return out;
    }();
    return keys;
}

ExperimentConfig parse_config(std::string_view input) {
    ExperimentConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!input.empty()) {
        ++line_no;
        const auto nl = input.find('\n');
        std::string_view line = input.substr(0, nl);
        input = nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParameterError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));

        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(),
                                     [&](const Field& f) { return f.doc.key == key; });
        if (it == table.end()) throw ParameterError(std::string(key), "unknown key");
        if (!seen.insert(std::string(key)).second)
            throw ParameterError(std::string(key), "repeated key");
        it->set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string format_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        out += std::string(f.doc.key) + " = " + f.get(cfg) + '\n';
    }
    return out;
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    write_atomic(path, format_config(cfg));
}

}  // namespace kinprice
