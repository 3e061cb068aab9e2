#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "jointkge/model.hpp"
#include "jointkge/trainer.hpp"

// Flat key=value config files. '#' starts a comment, whitespace around keys
// and values is trimmed, later keys override earlier ones.

namespace jointkge {

class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config: " + path);
        KeyValueConfig cfg;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": expected key=value");
            cfg.values_[trim(trimmed.substr(0, eq))] = trim(trimmed.substr(eq + 1));
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return std::stod(it->second);
    }
    size_t get_size(const std::string& key, size_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return static_cast<size_t>(std::stoull(it->second));
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    std::map<std::string, std::string> values_;
};

inline EncoderKind parse_encoder(const std::string& s) {
    if (s == "nbow") return EncoderKind::Nbow;
    if (s == "lstm") return EncoderKind::Lstm;
    if (s == "alstm") return EncoderKind::Alstm;
    throw std::runtime_error("unknown encoder '" + s + "' (expected nbow|lstm|alstm)");
}

inline Dissim parse_dissim(const std::string& s) {
    if (s == "l1") return Dissim::L1;
    if (s == "sq_l2" || s == "l2") return Dissim::SqL2;
    throw std::runtime_error("unknown dissimilarity '" + s + "' (expected l1|sq_l2)");
}

inline ModelConfig model_config_from(const KeyValueConfig& kv) {
    ModelConfig cfg;
    cfg.d = kv.get_size("d", cfg.d);
    cfg.encoder = parse_encoder(kv.get_string("encoder", "nbow"));
    cfg.dissim = parse_dissim(kv.get_string("dissimilarity", "l1"));
    cfg.margin = kv.get_double("margin", cfg.margin);
    cfg.l2_weight = kv.get_double("l2_weight", cfg.l2_weight);
    cfg.lr_structure = kv.get_double("lr_structure", cfg.lr_structure);
    cfg.lr_text = kv.get_double("lr_text", cfg.lr_text);
    cfg.validate();
    return cfg;
}

inline TrainConfig train_config_from(const KeyValueConfig& kv) {
    TrainConfig cfg;
    cfg.batch_size = kv.get_size("batch_size", cfg.batch_size);
    cfg.epochs = kv.get_size("epochs", cfg.epochs);
    cfg.p_rel = kv.get_double("p_rel", cfg.p_rel);
    cfg.seed = kv.get_size("seed", cfg.seed);
    cfg.patience = kv.get_size("patience", cfg.patience);
    cfg.eval_every = kv.get_size("eval_every", cfg.eval_every);
    cfg.eval_threads = kv.get_size("eval_threads", cfg.eval_threads);
    cfg.validate();
    return cfg;
}

}  // namespace jointkge
