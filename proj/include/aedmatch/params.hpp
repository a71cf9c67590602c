#pragma once

#include <aedmatch/autodiff.hpp>
#include <aedmatch/errors.hpp>
#include <aedmatch/tensor.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aedmatch {

/// Named parameter tensors in insertion order, with Adam moments.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor first_moment;
        Tensor second_moment;
    };

    void add(const std::string& name, Tensor value) {
        if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
        index_[name] = entries_.size();
        Tensor m(value.rows(), value.cols()), v(value.rows(), value.cols());
        entries_.push_back({name, std::move(value), std::move(m), std::move(v)});
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
        return it->second;
    }

    const Tensor& value(const std::string& name) const { return entries_[index(name)].value; }
    Tensor& value(const std::string& name) { return entries_[index(name)].value; }

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<Entry>& entries() noexcept { return entries_; }

    std::uint64_t step() const noexcept { return step_; }
    void set_step(std::uint64_t s) noexcept { step_ = s; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    bool operator==(const ParamStore& o) const {
        if (step_ != o.step_ || entries_.size() != o.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto &a = entries_[i], &b = o.entries_[i];
            if (a.name != b.name || a.value != b.value || a.first_moment != b.first_moment ||
                a.second_moment != b.second_moment)
                return false;
        }
        return true;
    }

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
    std::uint64_t step_ = 0;
};

/// Binds store parameters onto a tape on first use and collects their
/// gradients after backward.
class TapeParams {
public:
    TapeParams(ad::Tape& tape, const ParamStore& store, bool trainable = true)
        : tape_(tape), store_(store), bound_(store.size()), trainable_(trainable) {}

    ad::Var operator[](const std::string& name) {
        const std::size_t i = store_.index(name);
        if (!bound_[i]) {
            const Tensor& v = store_.entries()[i].value;
            bound_[i] = trainable_ ? tape_.variable(v) : tape_.constant(v);
        }
        return *bound_[i];
    }

    /// Gradient per store entry (zeros for parameters the forward never read).
    std::vector<Tensor> gradients() const {
        std::vector<Tensor> out;
        out.reserve(bound_.size());
        for (std::size_t i = 0; i < bound_.size(); ++i) {
            const Tensor& v = store_.entries()[i].value;
            if (bound_[i] && bound_[i]->grad().size() == v.size())
                out.push_back(bound_[i]->grad());
            else
                out.emplace_back(v.rows(), v.cols());
        }
        return out;
    }

    ad::Tape& tape() { return tape_; }

private:
    ad::Tape& tape_;
    const ParamStore& store_;
    std::vector<std::optional<ad::Var>> bound_;
    bool trainable_;
};

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam update. `grads` is parallel to the store entries.
inline void adam_step(ParamStore& store, const std::vector<Tensor>& grads, const AdamConfig& cfg = {}) {
    if (grads.size() != store.size()) throw NumericError("adam_step: gradient count does not match parameters");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].same_shape(store.entries()[i].value))
            throw NumericError("adam_step: gradient shape mismatch for " + store.entries()[i].name);
        if (!grads[i].all_finite())
            throw NumericError("adam_step: non-finite gradient for " + store.entries()[i].name);
    }
    store.set_step(store.step() + 1);
    const double t = static_cast<double>(store.step());
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto& e = store.entries()[i];
        for (std::size_t k = 0; k < e.value.size(); ++k) {
            const double g = grads[i][k];
            e.first_moment[k] = cfg.beta1 * e.first_moment[k] + (1.0 - cfg.beta1) * g;
            e.second_moment[k] = cfg.beta2 * e.second_moment[k] + (1.0 - cfg.beta2) * g * g;
            const double mhat = e.first_moment[k] / c1;
            const double vhat = e.second_moment[k] / c2;
            e.value[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoints: one JSON document.
//
//   {"format": "aedmatch-checkpoint", "version": 1, "meta": {...caller data...},
//    "step": 12,
//    "params": [{"name": "...", "shape": [r, c], "values": [...], "m": [...], "v": [...]}, ...]}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const ParamStore& store, const nlohmann::json& meta) {
    nlohmann::json j;
    j["format"] = "aedmatch-checkpoint";
    j["version"] = kCheckpointVersion;
    j["meta"] = meta;
    j["step"] = store.step();
    auto params = nlohmann::json::array();
    for (const auto& e : store.entries()) {
        const auto flat = [](const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
        params.push_back({{"name", e.name},
                          {"shape", {e.value.rows(), e.value.cols()}},
                          {"values", flat(e.value)},
                          {"m", flat(e.first_moment)},
                          {"v", flat(e.second_moment)}});
    }
    j["params"] = std::move(params);
    return j;
}

inline ParamStore checkpoint_from_json(const nlohmann::json& j, nlohmann::json* meta_out = nullptr) {
    if (j.value("format", "") != "aedmatch-checkpoint") throw DataError("not an aedmatch checkpoint");
    if (j.value("version", 0) != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
    ParamStore store;
    for (const auto& p : j.at("params")) {
        const auto shape = p.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2) throw DataError("checkpoint parameter shape must have two dims");
        store.add(p.at("name").get<std::string>(), Tensor(shape[0], shape[1], p.at("values").get<std::vector<double>>()));
        auto& e = store.entries().back();
        e.first_moment = Tensor(shape[0], shape[1], p.at("m").get<std::vector<double>>());
        e.second_moment = Tensor(shape[0], shape[1], p.at("v").get<std::vector<double>>());
    }
    store.set_step(j.at("step").get<std::uint64_t>());
    if (meta_out) *meta_out = j.at("meta");
    return store;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParamStore& store, const nlohmann::json& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(store, meta).dump() << '\n';
}

inline ParamStore load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j, meta_out);
}

}  // namespace aedmatch
