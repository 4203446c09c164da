#include "mlbpgd/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long r = 0;
    try {
        r = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected integer, got '" + v + "'");
    }
    if (used != v.size())
        throw ConfigError(key + ": trailing characters in '" + v + "'");
    return r;
}

double to_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity")
        return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double r = 0.0;
    try {
        r = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected number, got '" + v + "'");
    }
    if (used != v.size())
        throw ConfigError(key + ": trailing characters in '" + v + "'");
    return r;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty list entry");
        out.push_back(static_cast<int>(to_int(key, item)));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "experiment") {
        if (parse_experiment(value) != cfg.experiment)
            throw ConfigError("config file is for experiment '" + value +
                              "', but '" + experiment_name(cfg.experiment) +
                              "' was requested");
    } else if (key == "grid_exponent") {
        cfg.grid_exponent = static_cast<int>(to_int(key, value));
    } else if (key == "levels") {
        cfg.levels = static_cast<int>(to_int(key, value));
    } else if (key == "smoothing") {
        cfg.smoothing = to_int_list(key, value);
    } else if (key == "kappa") {
        cfg.trigger.kappa = to_double(key, value);
    } else if (key == "epsilon") {
        cfg.trigger.epsilon = to_double(key, value);
    } else if (key == "epsilon_x") {
        cfg.trigger.epsilon_x = to_double(key, value);
    } else if (key == "armijo_sigma") {
        cfg.armijo.sigma = to_double(key, value);
    } else if (key == "armijo_beta") {
        cfg.armijo.beta = to_double(key, value);
    } else if (key == "armijo_alpha_bar") {
        cfg.armijo.alpha_bar = to_double(key, value);
    } else if (key == "psf_dim") {
        cfg.psf_dim = static_cast<int>(to_int(key, value));
    } else if (key == "psf_sigma") {
        cfg.psf_sigma = to_double(key, value);
    } else if (key == "noise_lambda") {
        cfg.noise_lambda = to_double(key, value);
    } else if (key == "angles") {
        cfg.angles = to_int_list(key, value);
    } else if (key == "detectors") {
        cfg.detectors = to_int_list(key, value);
    } else if (key == "iters") {
        cfg.iters = static_cast<int>(to_int(key, value));
    } else if (key == "ls_iters") {
        cfg.ls_iters = static_cast<int>(to_int(key, value));
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "input_image") {
        cfg.input_image = value;
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

} // namespace

const char* experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Deconv: return "deconv";
        case ExperimentKind::Tomo: return "tomo";
        case ExperimentKind::DDesign: return "ddesign";
        case ExperimentKind::Selftest: return "selftest";
    }
    return "?";
}

ExperimentKind parse_experiment(const std::string& name) {
    if (name == "deconv") return ExperimentKind::Deconv;
    if (name == "tomo") return ExperimentKind::Tomo;
    if (name == "ddesign") return ExperimentKind::DDesign;
    if (name == "selftest") return ExperimentKind::Selftest;
    throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig cfg;
    cfg.experiment = kind;
    switch (kind) {
        case ExperimentKind::Deconv:
            cfg.grid_exponent = 6;  // 63 x 63
            cfg.levels = 3;
            cfg.smoothing = {1, 10, 10};
            cfg.psf_dim = 9;
            cfg.psf_sigma = 1.5;
            cfg.noise_lambda = 1000.0;
            cfg.iters = 200;
            // restriction can keep at most a 31/63 share of the gradient
            // norm on this grid, so the share threshold sits just under it
            cfg.trigger.kappa = 0.45;
            break;
        case ExperimentKind::Tomo:
            cfg.grid_exponent = 6;
            cfg.levels = 3;
            cfg.smoothing = {1, 5, 10};
            cfg.angles = {40, 20, 20};
            cfg.detectors = {63, 31, 15};
            cfg.noise_lambda = std::numeric_limits<double>::infinity();
            cfg.iters = 200;
            cfg.trigger.kappa = 0.45;
            break;
        case ExperimentKind::DDesign:
            cfg.grid_exponent = 4;  // 15 x 15 image
            cfg.levels = 2;
            cfg.smoothing = {1, 3};
            cfg.angles = {60, 60};
            cfg.detectors = {15, 7};
            cfg.noise_lambda = std::numeric_limits<double>::infinity();
            cfg.iters = 150;
            cfg.ls_iters = 300;
            // the design experiment triggers on iterate movement alone, so
            // the gradient clauses are set far below their firing range
            cfg.trigger.kappa = 1e-6;
            cfg.trigger.epsilon = 1e-9;
            break;
        case ExperimentKind::Selftest:
            break;
    }
    return cfg;
}

ExperimentConfig load_config(ExperimentKind kind, const std::string& path) {
    ExperimentConfig cfg = default_config(kind);
    if (path.empty()) return cfg;

    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": empty key or value");
        apply_key(cfg, key, value);
    }
    return cfg;
}

void ExperimentConfig::reconcile() {
    if (experiment == ExperimentKind::Selftest || levels < 1) return;

    auto fit = [&](std::vector<int>& list) {
        if (list.empty() || static_cast<int>(list.size()) == levels) return;
        list.resize(static_cast<std::size_t>(levels), list.back());
    };
    fit(smoothing);
    fit(angles);
    if ((experiment == ExperimentKind::DDesign || experiment == ExperimentKind::Tomo) &&
        !detectors.empty() && static_cast<int>(detectors.size()) != levels) {
        detectors.clear();
        for (int l = 0; l < levels; ++l) detectors.push_back(side_at(l));
    }
}

void ExperimentConfig::validate() const {
    if (experiment == ExperimentKind::Selftest) return;

    if (grid_exponent < 2 || grid_exponent > 12)
        throw ConfigError("grid_exponent must be in [2, 12]");
    if (levels < 1) throw ConfigError("levels must be >= 1");
    if (grid_exponent - (levels - 1) < 2)
        throw ConfigError("too many levels: coarsest side would drop below 3");
    if (static_cast<int>(smoothing.size()) != levels)
        throw ConfigError("smoothing must list one entry per level");
    for (int s : smoothing)
        if (s < 1) throw ConfigError("smoothing entries must be >= 1");
    if (iters < 1) throw ConfigError("iters must be >= 1");
    if (!(noise_lambda > 0.0)) throw ConfigError("noise_lambda must be positive");

    try {
        trigger.validate();
        armijo.validate();
    } catch (const ArgError& e) {
        throw ConfigError(e.what());
    }

    switch (experiment) {
        case ExperimentKind::Deconv:
            if (psf_dim < 1 || psf_dim % 2 == 0)
                throw ConfigError("psf_dim must be odd and positive");
            if (!(psf_sigma > 0.0)) throw ConfigError("psf_sigma must be positive");
            break;
        case ExperimentKind::Tomo:
        case ExperimentKind::DDesign: {
            if (static_cast<int>(angles.size()) != levels ||
                static_cast<int>(detectors.size()) != levels)
                throw ConfigError("angles and detectors must list one entry per level");
            for (int a : angles)
                if (a < 1) throw ConfigError("angle counts must be >= 1");
            for (int l = 0; l < levels; ++l) {
                if (detectors[l] < 1) throw ConfigError("detector counts must be >= 1");
                if (experiment == ExperimentKind::DDesign) {
                    if (detectors[l] != side_at(l))
                        throw ConfigError(
                            "design experiment needs detectors = image side per level");
                    if (angles[l] != angles[0])
                        throw ConfigError(
                            "design experiment keeps the angle count fixed across levels");
                }
            }
            if (experiment == ExperimentKind::DDesign && ls_iters < 1)
                throw ConfigError("ls_iters must be >= 1");
            break;
        }
        case ExperimentKind::Selftest:
            break;
    }
}

} // namespace mlbpgd
