#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "estrnn/config.hpp"
#include "estrnn/tensor.hpp"

namespace estrnn {

// Flat ordered registry of named weight arrays. Order and shapes are fully
// determined by the ModelConfig. Values are kept float32-representable so
// the on-disk container (32-bit payload) round-trips bit-exactly.
class ParamSet {
public:
    ParamSet() = default;

    // Fan-in-scaled uniform init for weights, zero biases.
    static ParamSet init(const ModelConfig& cfg, std::uint64_t seed);

    void add(std::string name, Tensor value);

    bool has(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);

    std::size_t count() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_[i].first; }
    const Tensor& tensor(std::size_t i) const { return entries_[i].second; }
    Tensor& tensor(std::size_t i) { return entries_[i].second; }

    std::int64_t scalar_count() const;

    // Model checkpoint container: magic, format version, ModelConfig as JSON
    // text, then the ordered arrays with shapes and little-endian float32
    // payloads. Layout documented in the README.
    void save(const std::filesystem::path& path, const ModelConfig& cfg) const;
    static std::pair<ParamSet, ModelConfig> load(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Rounds every element to the nearest float32 value.
void quantize_to_f32(Tensor& t);

}  // namespace estrnn
