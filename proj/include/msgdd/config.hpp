#ifndef MSGDD_CONFIG_HPP
#define MSGDD_CONFIG_HPP

#include "msgdd/types.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace msgdd {

// Shortest decimal form that parses back to the exact same double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ModelConfig {
    int scales = 4;
    int base_channels = 64;
    int input_channels = 1;
    int output_channels = 1;
    double init_std = 0.02;
    std::string init = "scaled"; // "scaled" (N(0, init_std)) or "paper-literal" (N(0, 1))
    bool tap_norm = true;        // instance-norm on the 1x1 tap heads before tanh

    bool operator==(const ModelConfig&) const = default;
};

struct OptimizerConfig {
    double learning_rate = 0.0002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int batch_size = 0; // 0 = pick by image size (16 at <=64px, 8 above)
    int epochs = 30;
    double clip_norm = 0.0; // 0 = off

    bool operator==(const OptimizerConfig&) const = default;
};

struct RunConfig {
    ModelConfig model;
    OptimizerConfig optimizer;

    int image_size = 256;
    std::string dataset_root;
    int train_count = 699;
    int val_count = 100;
    int test_count = 200;
    std::string aug = "flips"; // none | flips | flips_affine

    int k_l1 = 4;          // 1, 2 or 4 decoder-scale L1 terms
    double lambda_l1 = 100.0;
    std::uint64_t seed = 0;
    std::string out_dir = "runs/out";
    int tap_grid_every = 0; // emit the tap-grid image every N epochs, 0 = off
    std::string variant = "msgdd"; // msgdd | pix2pix_like | unet_only

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

struct ConfigKey {
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<bool(RunConfig&, const std::string&)> set;
};

inline bool parse_int_value(const std::string& s, long long& out) {
    char* end = nullptr;
    out = std::strtoll(s.c_str(), &end, 10);
    return end && *end == '\0' && !s.empty();
}

inline bool parse_double_value(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end && *end == '\0' && !s.empty();
}

inline bool parse_bool_value(const std::string& s, bool& out) {
    if (s == "true" || s == "1") { out = true; return true; }
    if (s == "false" || s == "0") { out = false; return true; }
    return false;
}

inline const std::vector<ConfigKey>& config_keys() {
    auto int_key = [](const char* name, auto member) {
        return ConfigKey{
            name,
            [member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& v) {
                long long x;
                if (!parse_int_value(v, x)) return false;
                c.*member = static_cast<int>(x);
                return true;
            }};
    };
    auto dbl_key = [](const char* name, auto member) {
        return ConfigKey{
            name,
            [member](const RunConfig& c) { return format_double(c.*member); },
            [member](RunConfig& c, const std::string& v) {
                double x;
                if (!parse_double_value(v, x)) return false;
                c.*member = x;
                return true;
            }};
    };
    auto str_key = [](const char* name, auto member) {
        return ConfigKey{name, [member](const RunConfig& c) { return c.*member; },
                         [member](RunConfig& c, const std::string& v) {
                             c.*member = v;
                             return true;
                         }};
    };

    static const std::vector<ConfigKey> keys = {
        str_key("aug", &RunConfig::aug),
        {"base_channels",
         [](const RunConfig& c) { return std::to_string(c.model.base_channels); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x)) return false;
             c.model.base_channels = static_cast<int>(x);
             return true;
         }},
        {"batch_size",
         [](const RunConfig& c) { return std::to_string(c.optimizer.batch_size); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x)) return false;
             c.optimizer.batch_size = static_cast<int>(x);
             return true;
         }},
        {"beta1",
         [](const RunConfig& c) { return format_double(c.optimizer.beta1); },
         [](RunConfig& c, const std::string& v) {
             double x;
             if (!parse_double_value(v, x)) return false;
             c.optimizer.beta1 = x;
             return true;
         }},
        {"beta2",
         [](const RunConfig& c) { return format_double(c.optimizer.beta2); },
         [](RunConfig& c, const std::string& v) {
             double x;
             if (!parse_double_value(v, x)) return false;
             c.optimizer.beta2 = x;
             return true;
         }},
        {"clip_norm",
         [](const RunConfig& c) { return format_double(c.optimizer.clip_norm); },
         [](RunConfig& c, const std::string& v) {
             double x;
             if (!parse_double_value(v, x)) return false;
             c.optimizer.clip_norm = x;
             return true;
         }},
        str_key("dataset_root", &RunConfig::dataset_root),
        {"epochs",
         [](const RunConfig& c) { return std::to_string(c.optimizer.epochs); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x)) return false;
             c.optimizer.epochs = static_cast<int>(x);
             return true;
         }},
        int_key("image_size", &RunConfig::image_size),
        {"init",
         [](const RunConfig& c) { return c.model.init; },
         [](RunConfig& c, const std::string& v) {
             c.model.init = v;
             return true;
         }},
        {"init_std",
         [](const RunConfig& c) { return format_double(c.model.init_std); },
         [](RunConfig& c, const std::string& v) {
             double x;
             if (!parse_double_value(v, x)) return false;
             c.model.init_std = x;
             return true;
         }},
        {"input_channels",
         [](const RunConfig& c) { return std::to_string(c.model.input_channels); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x)) return false;
             c.model.input_channels = static_cast<int>(x);
             return true;
         }},
        int_key("k_l1", &RunConfig::k_l1),
        dbl_key("lambda_l1", &RunConfig::lambda_l1),
        {"learning_rate",
         [](const RunConfig& c) { return format_double(c.optimizer.learning_rate); },
         [](RunConfig& c, const std::string& v) {
             double x;
             if (!parse_double_value(v, x)) return false;
             c.optimizer.learning_rate = x;
             return true;
         }},
        str_key("out_dir", &RunConfig::out_dir),
        {"output_channels",
         [](const RunConfig& c) { return std::to_string(c.model.output_channels); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x)) return false;
             c.model.output_channels = static_cast<int>(x);
             return true;
         }},
        {"scales",
         [](const RunConfig& c) { return std::to_string(c.model.scales); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x)) return false;
             c.model.scales = static_cast<int>(x);
             return true;
         }},
        {"seed",
         [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) {
             long long x;
             if (!parse_int_value(v, x) || x < 0) return false;
             c.seed = static_cast<std::uint64_t>(x);
             return true;
         }},
        int_key("tap_grid_every", &RunConfig::tap_grid_every),
        {"tap_norm",
         [](const RunConfig& c) { return c.model.tap_norm ? "true" : "false"; },
         [](RunConfig& c, const std::string& v) { return parse_bool_value(v, c.model.tap_norm); }},
        int_key("test_count", &RunConfig::test_count),
        int_key("train_count", &RunConfig::train_count),
        int_key("val_count", &RunConfig::val_count),
        str_key("variant", &RunConfig::variant),
    };
    return keys;
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : detail::config_keys()) {
        if (k.name == key) {
            if (!k.set(cfg, value))
                throw Error("core", "bad value '" + value + "' for config key '" + key + "'");
            return;
        }
    }
    throw Error("core", "unknown config key '" + key + "'");
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& k : detail::config_keys()) out << k.name << " = " << k.get(cfg) << "\n";
    return out.str();
}

// Flat `key = value` lines, '#' starts a comment.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("core", "config line " + std::to_string(lineno) + " is not 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        set_config_key(cfg, key, value);
    }
    return cfg;
}

struct ValidationResult {
    RunConfig config; // normalized (defaults filled)
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

inline ValidationResult validate_config(const RunConfig& input) {
    ValidationResult res;
    res.config = input;
    RunConfig& c = res.config;
    auto fail = [&](const std::string& msg) { res.errors.push_back(msg); };

    if (c.model.scales < 1) fail("scales must be >= 1");
    if (c.model.base_channels < 1) fail("base_channels must be >= 1");
    if (c.model.input_channels < 1) fail("input_channels must be >= 1");
    if (c.model.output_channels < 1) fail("output_channels must be >= 1");
    if (!(c.model.init_std > 0)) fail("init_std must be positive");
    if (c.model.init != "scaled" && c.model.init != "paper-literal")
        fail("init must be 'scaled' or 'paper-literal'");

    if (c.model.scales >= 1 && c.model.scales < 31) {
        const int div = 1 << c.model.scales;
        if (c.image_size < div || c.image_size % div != 0)
            fail("image_size " + std::to_string(c.image_size) + " not divisible by 2^" +
                 std::to_string(c.model.scales) + " = " + std::to_string(div));
        else if (!is_power_of_two(c.image_size))
            fail("image_size must be a power of two");
    }

    if (!(c.optimizer.learning_rate > 0)) fail("learning rate must be positive");
    if (c.optimizer.beta1 < 0 || c.optimizer.beta1 >= 1) fail("beta1 must be in [0, 1)");
    if (c.optimizer.beta2 < 0 || c.optimizer.beta2 >= 1) fail("beta2 must be in [0, 1)");
    if (c.optimizer.epochs < 1) fail("epochs must be >= 1");
    if (c.optimizer.batch_size < 0) fail("batch_size must be >= 0 (0 = auto)");
    if (c.optimizer.clip_norm < 0) fail("clip_norm must be >= 0 (0 = off)");

    if (c.k_l1 != 1 && c.k_l1 != 2 && c.k_l1 != 4) fail("k_l1 must be one of 1, 2, 4");
    if (!(c.lambda_l1 > 0)) fail("lambda_l1 must be positive");
    if (c.train_count < 1) fail("train_count must be >= 1");
    if (c.val_count < 0 || c.test_count < 0) fail("split counts must be >= 0");
    if (c.aug != "none" && c.aug != "flips" && c.aug != "flips_affine")
        fail("aug must be one of none, flips, flips_affine");
    if (c.variant != "msgdd" && c.variant != "pix2pix_like" && c.variant != "unet_only")
        fail("variant must be one of msgdd, pix2pix_like, unet_only");
    if (c.tap_grid_every < 0) fail("tap_grid_every must be >= 0");

    if (c.optimizer.batch_size == 0)
        c.optimizer.batch_size = c.image_size <= 64 ? 16 : 8;

    return res;
}

} // namespace msgdd

#endif
