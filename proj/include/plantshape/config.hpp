#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "augment.hpp"
#include "lstm.hpp"
#include "neat.hpp"
#include "synth.hpp"
#include "tasksim.hpp"
#include "tracker.hpp"

namespace plantshape {

// Synth-stage settings beyond the plant parameters themselves.
struct SynthConfig {
    PlantParams plant;
    long steps = 864;
    long schedule_interval = 72; // steps per light interval (6 h)
    double seedling_height = 1.0;
};

struct PipelineSettings {
    std::uint64_t master_seed = 1;
    int generations = 200;
    std::string scenario_set = "left_target";
};

// Every constant of every stage, loadable from a flat sectioned key-value
// file. Unknown keys are rejected; all defaults match the module docs.
struct PipelineConfig {
    TrackerConfig tracker;
    AugmentConfig augment;
    TrainConfig train;
    neat::NeatParams neat_params;
    RolloutLimits task;
    SynthConfig synth;
    PipelineSettings pipeline;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = int(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = int(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

} // namespace detail

// Parses and validates a config file. Defaults are pre-filled; every known
// key overrides one field. Errors carry the offending line number.
inline PipelineConfig validate_config(std::istream& is) {
    PipelineConfig cfg;
    // sensible file-facing defaults for fields with no universal value
    cfg.tracker.px_per_cm = 4.0;
    cfg.tracker.anchor_px = {160, 180};

    using Setter = std::function<void(const std::string&, std::size_t)>;
    std::map<std::string, Setter> keys;

    auto fail = [](std::size_t line, const std::string& msg) {
        throw ConfigError("line " + std::to_string(line) + ": " + msg);
    };
    auto as_double = [&](const std::string& v, std::size_t line) {
        try {
            std::size_t pos;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return d;
        } catch (...) {
            fail(line, "expected a number, got '" + v + "'");
            return 0.0;
        }
    };
    auto as_long = [&](const std::string& v, std::size_t line) {
        try {
            std::size_t pos;
            long d = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return d;
        } catch (...) {
            fail(line, "expected an integer, got '" + v + "'");
            return 0L;
        }
    };

    auto dbl = [&](double& field) {
        return Setter([&field, as_double](const std::string& v, std::size_t l) {
            field = as_double(v, l);
        });
    };
    auto integer = [&](int& field) {
        return Setter(
            [&field, as_long](const std::string& v, std::size_t l) { field = int(as_long(v, l)); });
    };
    auto lng = [&](long& field) {
        return Setter(
            [&field, as_long](const std::string& v, std::size_t l) { field = as_long(v, l); });
    };

    // tracker
    keys["tracker.theta1"] = [&](const std::string& v, std::size_t l) {
        cfg.tracker.theta1 = as_double(v, l);
        if (!(cfg.tracker.theta1 > 0.0 && cfg.tracker.theta1 < 1.0))
            fail(l, "theta1 must be in (0,1)");
    };
    keys["tracker.theta2"] = [&](const std::string& v, std::size_t l) {
        cfg.tracker.theta2 = as_double(v, l);
        if (cfg.tracker.theta2 <= 0.0) fail(l, "theta2 must be > 0");
    };
    keys["tracker.downsample"] = [&](const std::string& v, std::size_t l) {
        cfg.tracker.downsample = int(as_long(v, l));
        if (cfg.tracker.downsample < 1) fail(l, "downsample must be >= 1");
    };
    keys["tracker.px_per_cm"] = [&](const std::string& v, std::size_t l) {
        cfg.tracker.px_per_cm = as_double(v, l);
        if (cfg.tracker.px_per_cm <= 0.0) fail(l, "px_per_cm must be > 0");
    };
    keys["tracker.anchor_col"] = integer(cfg.tracker.anchor_px.x);
    keys["tracker.anchor_row"] = integer(cfg.tracker.anchor_px.y);

    // augment
    keys["augment.theta3"] = [&](const std::string& v, std::size_t l) {
        cfg.augment.theta3 = int(as_long(v, l));
        if (cfg.augment.theta3 < 1) fail(l, "theta3 must be >= 1");
    };
    keys["augment.omega"] = [&](const std::string& v, std::size_t l) {
        cfg.augment.omega = as_double(v, l);
        if (cfg.augment.omega < 0.0) fail(l, "omega must be >= 0");
    };
    keys["augment.n_noisy"] = [&](const std::string& v, std::size_t l) {
        cfg.augment.n_noisy = int(as_long(v, l));
        if (cfg.augment.n_noisy < 0) fail(l, "n_noisy must be >= 0");
    };
    keys["augment.jump_factor"] = [&](const std::string& v, std::size_t l) {
        cfg.augment.jump_factor = as_double(v, l);
        if (cfg.augment.jump_factor <= 0.0) fail(l, "jump_factor must be > 0");
    };
    keys["augment.generic_indices"] = [&](const std::string& v, std::size_t l) {
        cfg.augment.generic_indices.clear();
        std::istringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (!tok.empty()) cfg.augment.generic_indices.push_back(as_long(tok, l));
        }
    };
    keys["augment.exclusions"] = [&](const std::string& v, std::size_t l) {
        // semicolon-separated x_min:x_max:y_min:y_max rectangles
        cfg.augment.exclusions.clear();
        std::istringstream ss(v);
        std::string rect;
        while (std::getline(ss, rect, ';')) {
            rect = detail::trim(rect);
            if (rect.empty()) continue;
            std::istringstream rs(rect);
            std::string part;
            std::vector<double> vals;
            while (std::getline(rs, part, ':')) vals.push_back(as_double(detail::trim(part), l));
            if (vals.size() != 4) fail(l, "exclusion rectangle needs x_min:x_max:y_min:y_max");
            cfg.augment.exclusions.push_back({vals[0], vals[1], vals[2], vals[3]});
        }
    };

    // train
    keys["train.batch_size"] = [&](const std::string& v, std::size_t l) {
        cfg.train.batch_size = int(as_long(v, l));
        if (cfg.train.batch_size < 1) fail(l, "batch_size must be >= 1");
    };
    keys["train.max_epochs"] = integer(cfg.train.max_epochs);
    keys["train.lr"] = dbl(cfg.train.lr);
    keys["train.patience"] = integer(cfg.train.patience);
    keys["train.split"] = [&](const std::string& v, std::size_t l) {
        std::istringstream ss(v);
        std::string tok;
        std::vector<double> parts;
        while (std::getline(ss, tok, ',')) parts.push_back(as_double(detail::trim(tok), l));
        if (parts.size() != 3) fail(l, "split needs three comma-separated fractions");
        cfg.train.split_train = parts[0];
        cfg.train.split_val = parts[1];
        cfg.train.split_test = parts[2];
        if (std::abs(parts[0] + parts[1] + parts[2] - 1.0) > 1e-9)
            fail(l, "split fractions must sum to 1");
    };

    // neat
    keys["neat.population"] = [&](const std::string& v, std::size_t l) {
        cfg.neat_params.population = int(as_long(v, l));
        if (cfg.neat_params.population < 2) fail(l, "population must be >= 2");
    };
    keys["neat.c1"] = dbl(cfg.neat_params.c1);
    keys["neat.c2"] = dbl(cfg.neat_params.c2);
    keys["neat.c3"] = dbl(cfg.neat_params.c3);
    keys["neat.delta_threshold"] = dbl(cfg.neat_params.delta_threshold);
    keys["neat.weight_mutate_rate"] = dbl(cfg.neat_params.weight_mutate_rate);
    keys["neat.weight_mutate_power"] = dbl(cfg.neat_params.weight_mutate_power);
    keys["neat.add_connection_rate"] = dbl(cfg.neat_params.add_connection_rate);
    keys["neat.add_node_rate"] = dbl(cfg.neat_params.add_node_rate);
    keys["neat.crossover_rate"] = dbl(cfg.neat_params.crossover_rate);
    keys["neat.stagnation_limit"] = integer(cfg.neat_params.stagnation_limit);
    keys["neat.weight_min"] = dbl(cfg.neat_params.weight_min);
    keys["neat.weight_max"] = dbl(cfg.neat_params.weight_max);
    keys["neat.survival_threshold"] = dbl(cfg.neat_params.survival_threshold);
    keys["neat.elitism"] = integer(cfg.neat_params.elitism);

    // task
    keys["task.max_steps"] = integer(cfg.task.max_steps);
    keys["task.target_height"] = dbl(cfg.task.target_height);

    // synth
    keys["synth.growth_rate"] = dbl(cfg.synth.plant.growth_rate);
    keys["synth.phototropic_gain"] = dbl(cfg.synth.plant.phototropic_gain);
    keys["synth.nutation_amp"] = dbl(cfg.synth.plant.nutation_amp);
    keys["synth.nutation_period"] = dbl(cfg.synth.plant.nutation_period);
    keys["synth.stiffening_halflife"] = dbl(cfg.synth.plant.stiffening_halflife);
    keys["synth.steps"] = lng(cfg.synth.steps);
    keys["synth.schedule_interval"] = lng(cfg.synth.schedule_interval);
    keys["synth.seedling_height"] = dbl(cfg.synth.seedling_height);

    // pipeline
    keys["pipeline.master_seed"] = [&](const std::string& v, std::size_t l) {
        cfg.pipeline.master_seed = std::uint64_t(as_long(v, l));
    };
    keys["pipeline.generations"] = integer(cfg.pipeline.generations);
    keys["pipeline.scenario_set"] = [&](const std::string& v, std::size_t l) {
        if (v != "left_target" && v != "middle_target")
            fail(l, "scenario_set must be left_target or middle_target");
        cfg.pipeline.scenario_set = v;
    };

    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        auto it = keys.find(full);
        if (it == keys.end()) {
            int best_dist = 1 << 20;
            std::string best;
            for (const auto& [k, _] : keys) {
                const int d = detail::edit_distance(full, k);
                if (d < best_dist) {
                    best_dist = d;
                    best = k;
                }
            }
            fail(line_no, "unknown key '" + full + "' (did you mean '" + best + "'?)");
        }
        it->second(value, line_no);
    }

    // cross-field validation with the module validators
    cfg.train.validate();
    cfg.neat_params.validate();
    cfg.augment.validate();
    cfg.synth.plant.validate();
    return cfg;
}

inline PipelineConfig validate_config(const std::string& text) {
    std::istringstream is(text);
    return validate_config(is);
}

} // namespace plantshape
