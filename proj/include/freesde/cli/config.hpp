#pragma once

#include "freesde/models.hpp"
#include "freesde/rmt/matrix_sde.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace freesde::cli {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 1024;
};

struct RunConfig {
    ModelSpec model;
    std::vector<double> times;
    /// Empty means auto: support widened by 5% on each side, 1024 points
    /// clustered toward the support edges.
    std::optional<GridSpec> x_grid;
    double eps0 = 1e-3;
    std::string output_dir = ".";
    bool svg = false;
    rmt::SimConfig sim;
    double compare_threshold = 0.08;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::string> model;
    std::optional<double> theta, sigma, k, a;
    std::optional<std::vector<double>> times;
    std::optional<std::string> out;
    bool svg = false;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        require(allowed.count(key) > 0, Errc::invalid_config, where + ": unknown field '" + key + "'");
}

inline double number_field(const nlohmann::json& j, const char* key, const std::string& where) {
    require(j.at(key).is_number(), Errc::invalid_config, where + ": field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::size_t count_field(const nlohmann::json& j, const char* key, const std::string& where) {
    require(j.at(key).is_number_integer() && j.at(key).get<long long>() >= 0, Errc::invalid_config,
            where + ": field '" + key + "' must be a nonnegative integer");
    return j.at(key).get<std::size_t>();
}

inline rmt::SimConfig parse_simulation(const nlohmann::json& j) {
    const std::string where = "simulation";
    require(j.is_object(), Errc::invalid_config, where + " must be an object");
    reject_unknown(j, {"N", "dt", "n_paths", "seed", "scheme", "picard_iterations", "allow_near_blowup"}, where);
    rmt::SimConfig s;
    if (j.contains("N")) s.N = static_cast<int>(count_field(j, "N", where));
    if (j.contains("dt")) s.dt = number_field(j, "dt", where);
    if (j.contains("n_paths")) s.n_paths = static_cast<int>(count_field(j, "n_paths", where));
    if (j.contains("seed")) {
        require(j["seed"].is_number_unsigned(), Errc::invalid_config, where + ": field 'seed' must be an unsigned integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("scheme")) {
        const auto scheme = j["scheme"].is_string() ? j["scheme"].get<std::string>() : std::string();
        require(scheme == "euler" || scheme == "picard", Errc::invalid_config,
                where + ": field 'scheme' must be \"euler\" or \"picard\"");
        s.scheme = scheme == "euler" ? rmt::Scheme::euler : rmt::Scheme::picard;
    }
    if (j.contains("picard_iterations"))
        s.picard_iterations = static_cast<int>(count_field(j, "picard_iterations", where));
    if (j.contains("allow_near_blowup")) {
        require(j["allow_near_blowup"].is_boolean(), Errc::invalid_config,
                where + ": field 'allow_near_blowup' must be a boolean");
        s.allow_near_blowup = j["allow_near_blowup"].get<bool>();
    }
    return s;
}

/// 1-based line of a byte offset, for parse diagnostics.
inline std::size_t line_of(const std::string& text, std::size_t byte) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())), '\n'));
}

}  // namespace detail

inline nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(Errc::invalid_config, source + ":" + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
    }
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), Errc::invalid_config, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path);
}

/// Builds a RunConfig from the config JSON (may be empty) and overrides.
/// Flags win over file values.
inline RunConfig make_run_config(const nlohmann::json& file, const Overrides& flags) {
    const nlohmann::json j = file.is_null() ? nlohmann::json::object() : file;
    require(j.is_object(), Errc::invalid_config, "config must be a JSON object");
    detail::reject_unknown(j, {"model", "times", "x_grid", "eps0", "output_dir", "svg", "simulation", "compare_threshold"},
                           "config");
    RunConfig cfg;

    nlohmann::json model = j.contains("model") ? j["model"] : nlohmann::json::object();
    require(model.is_object(), Errc::invalid_config, "config: field 'model' must be an object");
    if (flags.model && (!model.contains("model") || model["model"] != *flags.model))
        model = nlohmann::json{{"model", *flags.model}};
    if (flags.theta) model["theta"] = *flags.theta;
    if (flags.sigma) model["sigma"] = *flags.sigma;
    if (flags.k) model["k"] = *flags.k;
    if (flags.a) model["a"] = *flags.a;
    require(model.contains("model"), Errc::invalid_config, "no model given (config 'model' or --model)");
    cfg.model = parse_model_spec(model);

    if (flags.times) {
        cfg.times = *flags.times;
    } else if (j.contains("times")) {
        require(j["times"].is_array(), Errc::invalid_config, "config: field 'times' must be an array");
        for (const auto& v : j["times"]) {
            require(v.is_number(), Errc::invalid_config, "config: 'times' entries must be numbers");
            cfg.times.push_back(v.get<double>());
        }
    }
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        require(std::isfinite(cfg.times[i]) && cfg.times[i] >= 0.0, Errc::invalid_config, "times must be nonnegative");
        require(i == 0 || cfg.times[i] > cfg.times[i - 1], Errc::invalid_config, "times must be strictly increasing");
    }

    if (j.contains("x_grid") && !(j["x_grid"].is_string() && j["x_grid"] == "auto")) {
        const auto& g = j["x_grid"];
        require(g.is_object(), Errc::invalid_config, "config: 'x_grid' must be \"auto\" or {lo, hi, n}");
        detail::reject_unknown(g, {"lo", "hi", "n"}, "x_grid");
        require(g.contains("lo") && g.contains("hi") && g.contains("n"), Errc::invalid_config,
                "x_grid: needs lo, hi and n");
        GridSpec grid{detail::number_field(g, "lo", "x_grid"), detail::number_field(g, "hi", "x_grid"),
                      detail::count_field(g, "n", "x_grid")};
        require(grid.hi > grid.lo, Errc::invalid_config, "x_grid: hi must exceed lo");
        require(grid.n >= 16, Errc::invalid_config, "x_grid: n must be at least 16");
        cfg.x_grid = grid;
    }
    if (j.contains("eps0")) {
        cfg.eps0 = detail::number_field(j, "eps0", "config");
        require(cfg.eps0 > 0.0, Errc::invalid_config, "config: eps0 must be positive");
    }
    if (j.contains("output_dir")) {
        require(j["output_dir"].is_string(), Errc::invalid_config, "config: 'output_dir' must be a string");
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    if (flags.out) cfg.output_dir = *flags.out;
    if (j.contains("svg")) {
        require(j["svg"].is_boolean(), Errc::invalid_config, "config: 'svg' must be a boolean");
        cfg.svg = j["svg"].get<bool>();
    }
    cfg.svg = cfg.svg || flags.svg;
    if (j.contains("simulation")) cfg.sim = detail::parse_simulation(j["simulation"]);
    if (const char* seed = std::getenv("FREESDE_SEED")) {
        try {
            cfg.sim.seed = std::stoull(seed);
        } catch (const std::exception&) {
            fail(Errc::invalid_config, std::string("FREESDE_SEED is not an unsigned integer: ") + seed);
        }
    }
    if (j.contains("compare_threshold")) {
        cfg.compare_threshold = detail::number_field(j, "compare_threshold", "config");
        require(cfg.compare_threshold > 0.0, Errc::invalid_config, "config: compare_threshold must be positive");
    }
    return cfg;
}

/// Comma-separated reals, e.g. "0.1,0.2,0.5".
inline std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        item = item.substr(first, item.find_last_not_of(" \t") - first + 1);
        try {
            out.push_back(parse_real(item));
        } catch (const Error&) {
            fail(Errc::invalid_config, "not a number in list: '" + item + "'");
        }
    }
    return out;
}

}  // namespace freesde::cli
