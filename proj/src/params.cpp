#include "estrnn/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "estrnn/config_io.hpp"
#include "estrnn/errors.hpp"
#include "estrnn/layers.hpp"
#include "estrnn/rng.hpp"
#include "estrnn/serialize.hpp"

namespace estrnn {

void quantize_to_f32(Tensor& t) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(static_cast<float>(t[i]));
    }
}

ParamSet ParamSet::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ParamSet ps;
    for (const LayerSpec& layer : describe_layers(cfg)) {
        Tensor w(layer.weight_shape());
        const std::int64_t fan_in =
            (layer.kind == LayerKind::Linear)
                ? layer.cin
                : static_cast<std::int64_t>(layer.cin) * layer.k * layer.k;
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        quantize_to_f32(w);
        ps.add(layer.name + ".weight", std::move(w));
        ps.add(layer.name + ".bias", Tensor({layer.cout}));
    }
    return ps;
}

void ParamSet::add(std::string name, Tensor value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(value));
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

std::int64_t ParamSet::scalar_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : entries_) n += t.size();
    return n;
}

namespace {
constexpr char kMagic[8] = {'E', 'S', 'T', 'R', 'N', 'N', 'P', 'S'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void ParamSet::save(const std::filesystem::path& path, const ModelConfig& cfg) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    io::write_u32(out, kFormatVersion);
    io::write_string(out, model_config_to_string(cfg.resolved()));
    io::write_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, t] : entries_) {
        io::write_string(out, name);
        io::write_u32(out, static_cast<std::uint32_t>(t.ndim()));
        for (int d : t.shape()) io::write_u32(out, static_cast<std::uint32_t>(d));
        io::write_f32_array(out, t.data(), t.size());
    }
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::pair<ParamSet, ModelConfig> ParamSet::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("'" + path.string() + "' is not a parameter checkpoint (bad magic)");
    }
    const std::uint32_t version = io::read_u32(in);
    if (version != kFormatVersion) {
        throw IoError("unsupported checkpoint format version " + std::to_string(version));
    }
    ModelConfig cfg = model_config_from_string(io::read_string(in));
    const std::uint32_t n = io::read_u32(in);
    ParamSet ps;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = io::read_string(in);
        const std::uint32_t ndim = io::read_u32(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(io::read_u32(in));
        Tensor t(shape);
        io::read_f32_array(in, t.data(), t.size());
        ps.add(std::move(name), std::move(t));
    }
    if (!in) throw IoError("truncated checkpoint '" + path.string() + "'");
    return {std::move(ps), cfg};
}

}  // namespace estrnn
