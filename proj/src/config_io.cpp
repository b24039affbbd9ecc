#include "estrnn/config_io.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <variant>

#include "estrnn/errors.hpp"

namespace estrnn {

namespace {

template <class Cfg>
struct Field {
    const char* name;
    std::variant<int Cfg::*, double Cfg::*, bool Cfg::*, std::string Cfg::*, std::uint64_t Cfg::*> ptr;
};

const std::vector<Field<ModelConfig>>& model_fields() {
    static const std::vector<Field<ModelConfig>> f = {
        {"n_blocks", &ModelConfig::n_blocks},
        {"n_channels", &ModelConfig::n_channels},
        {"growth_rate", &ModelConfig::growth_rate},
        {"rdb_layers", &ModelConfig::rdb_layers},
        {"n_past", &ModelConfig::n_past},
        {"n_future", &ModelConfig::n_future},
        {"use_fusion", &ModelConfig::use_fusion},
        {"use_rdb_cell", &ModelConfig::use_rdb_cell},
        {"use_gsa", &ModelConfig::use_gsa},
        {"downsample_factor", &ModelConfig::downsample_factor},
        {"hidden_channels", &ModelConfig::hidden_channels},
        {"se_reduction", &ModelConfig::se_reduction},
        {"global_skip", &ModelConfig::global_skip},
    };
    return f;
}

const std::vector<Field<TrainConfig>>& train_fields() {
    static const std::vector<Field<TrainConfig>> f = {
        {"recipe", &TrainConfig::recipe},
        {"epochs", &TrainConfig::epochs},
        {"batch_size", &TrainConfig::batch_size},
        {"subseq_len", &TrainConfig::subseq_len},
        {"patch", &TrainConfig::patch},
        {"lr0", &TrainConfig::lr0},
        {"schedule", &TrainConfig::schedule},
        {"step_decay", &TrainConfig::step_decay},
        {"step_every", &TrainConfig::step_every},
        {"eta_min", &TrainConfig::eta_min},
        {"loss", &TrainConfig::loss},
        {"charbonnier_eps", &TrainConfig::charbonnier_eps},
        {"beta1", &TrainConfig::beta1},
        {"beta2", &TrainConfig::beta2},
        {"adam_eps", &TrainConfig::adam_eps},
        {"flip_augment", &TrainConfig::flip_augment},
        {"grad_clip", &TrainConfig::grad_clip},
        {"val_every", &TrainConfig::val_every},
        {"checkpoint_every", &TrainConfig::checkpoint_every},
        {"steps_per_epoch", &TrainConfig::steps_per_epoch},
        {"seed", &TrainConfig::seed},
    };
    return f;
}

const std::vector<Field<SynthesisConfig>>& synth_fields() {
    static const std::vector<Field<SynthesisConfig>> f = {
        {"n_subframes", &SynthesisConfig::n_subframes},
        {"crf", &SynthesisConfig::crf},
        {"gamma", &SynthesisConfig::gamma},
        {"stride", &SynthesisConfig::stride},
        {"noise_sigma", &SynthesisConfig::noise_sigma},
        {"center_mode", &SynthesisConfig::center_mode},
        {"train_frac", &SynthesisConfig::train_frac},
        {"val_frac", &SynthesisConfig::val_frac},
        {"test_frac", &SynthesisConfig::test_frac},
        {"seed", &SynthesisConfig::seed},
    };
    return f;
}

template <class Cfg>
std::string key_list(const std::vector<Field<Cfg>>& fields) {
    std::string s;
    for (const auto& f : fields) {
        if (!s.empty()) s += ", ";
        s += f.name;
    }
    return s;
}

template <class Cfg>
Json fields_to_json(const Cfg& cfg, const std::vector<Field<Cfg>>& fields) {
    Json j = Json::object();
    for (const auto& f : fields) {
        std::visit([&](auto ptr) { j[f.name] = cfg.*ptr; }, f.ptr);
    }
    return j;
}

template <class Cfg>
void assign_from_json(Cfg& cfg, const Field<Cfg>& f, const Json& v, const std::string& where) {
    std::visit(
        [&](auto ptr) {
            using T = std::remove_reference_t<decltype(cfg.*ptr)>;
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(where + ": expected boolean");
                cfg.*ptr = v.get<bool>();
            } else if constexpr (std::is_same_v<T, int>) {
                if (!v.is_number_integer()) throw ConfigError(where + ": expected integer");
                cfg.*ptr = v.get<int>();
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_integer()) throw ConfigError(where + ": expected integer");
                cfg.*ptr = v.get<std::uint64_t>();
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(where + ": expected number");
                cfg.*ptr = v.get<double>();
            } else {
                if (!v.is_string()) throw ConfigError(where + ": expected string");
                cfg.*ptr = v.get<std::string>();
            }
        },
        f.ptr);
}

template <class Cfg>
void fields_apply_json(Cfg& cfg, const std::vector<Field<Cfg>>& fields, const Json& j,
                       const std::string& section) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, v] : j.items()) {
        auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const auto& f) { return key == f.name; });
        if (it == fields.end()) {
            throw ConfigError("unknown key '" + section + "." + key + "' (valid keys: " +
                              key_list(fields) + ")");
        }
        assign_from_json(cfg, *it, v, section + "." + key);
    }
}

Json parse_override_value(const std::string& value) {
    // Accept bare strings alongside JSON literals, so both loss=mse and
    // n_blocks=9 work without quoting.
    Json v = Json::parse(value, nullptr, false);
    if (v.is_discarded()) return Json(value);
    if (v.is_object() || v.is_array()) return Json(value);
    return v;
}

template <class Cfg>
void fields_apply_override(Cfg& cfg, const std::vector<Field<Cfg>>& fields, const std::string& key,
                           const std::string& value, const std::string& section) {
    auto it =
        std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.name; });
    if (it == fields.end()) {
        throw ConfigError("unknown key '" + section + "." + key + "' (valid keys: " +
                          key_list(fields) + ")");
    }
    assign_from_json(cfg, *it, parse_override_value(value), section + "." + key);
}

}  // namespace

Json config_to_json(const ModelConfig& cfg) { return fields_to_json(cfg, model_fields()); }
Json config_to_json(const TrainConfig& cfg) { return fields_to_json(cfg, train_fields()); }
Json config_to_json(const SynthesisConfig& cfg) { return fields_to_json(cfg, synth_fields()); }

void config_apply_json(ModelConfig& cfg, const Json& j, const std::string& section) {
    fields_apply_json(cfg, model_fields(), j, section);
}
void config_apply_json(TrainConfig& cfg, const Json& j, const std::string& section) {
    fields_apply_json(cfg, train_fields(), j, section);
}
void config_apply_json(SynthesisConfig& cfg, const Json& j, const std::string& section) {
    fields_apply_json(cfg, synth_fields(), j, section);
}

void config_apply_override(ModelConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& section) {
    fields_apply_override(cfg, model_fields(), key, value, section);
}
void config_apply_override(TrainConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& section) {
    fields_apply_override(cfg, train_fields(), key, value, section);
}
void config_apply_override(SynthesisConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& section) {
    fields_apply_override(cfg, synth_fields(), key, value, section);
}

std::vector<std::string> config_keys(const ModelConfig&) {
    std::vector<std::string> out;
    for (const auto& f : model_fields()) out.push_back(f.name);
    return out;
}
std::vector<std::string> config_keys(const TrainConfig&) {
    std::vector<std::string> out;
    for (const auto& f : train_fields()) out.push_back(f.name);
    return out;
}
std::vector<std::string> config_keys(const SynthesisConfig&) {
    std::vector<std::string> out;
    for (const auto& f : synth_fields()) out.push_back(f.name);
    return out;
}

std::string model_config_to_string(const ModelConfig& cfg) {
    return config_to_json(cfg).dump();
}

ModelConfig model_config_from_string(const std::string& text) {
    Json j = Json::parse(text);
    ModelConfig cfg;
    config_apply_json(cfg, j, "model");
    cfg.validate();
    return cfg;
}

}  // namespace estrnn
