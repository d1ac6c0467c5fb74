#include "selfie/backend_registry.hpp"

#include "selfie/error.hpp"
#include "selfie/harness.hpp"
#include "selfie/toy_lm.hpp"

namespace selfie {

namespace {

ToyConfig toy_config(const BackendConfig& c, ToyKind kind) {
    ToyConfig t;
    t.kind = kind;
    t.seed = c.seed;
    t.vocab_size = c.vocab_size;
    t.d = c.d;
    t.layers = c.layers;
    t.tau = c.tau;
    t.words = c.words;
    return t;
}

}  // namespace

BackendConfig BackendConfig::from_json(const nlohmann::json& j) {
    BackendConfig c;
    try {
        c.name = j.value("name", c.name);
        c.kind = j.value("kind", c.kind);
        c.seed = j.value("seed", c.seed);
        c.vocab_size = j.value("vocab_size", c.vocab_size);
        c.d = j.value("d", c.d);
        c.layers = j.value("L", c.layers);
        c.tau = j.value("tau", c.tau);
        c.words = j.value("words", c.words);
        c.weights = j.value("weights", c.weights);
        c.extra = j.value("extra", c.extra);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, std::string("invalid backend section: ") + e.what());
    }
    if (c.kind != "toy" && c.kind != "external") {
        fail(ErrorCode::config_error, "backend kind must be 'toy' or 'external', got '" + c.kind + "'");
    }
    return c;
}

nlohmann::json BackendConfig::to_json() const {
    nlohmann::json j = {{"name", name}, {"kind", kind},   {"seed", seed}, {"vocab_size", vocab_size},
                        {"d", d},       {"L", layers},    {"tau", tau}};
    if (!words.empty()) j["words"] = words;
    if (!weights.empty()) j["weights"] = weights;
    if (!extra.empty()) j["extra"] = extra;
    return j;
}

BackendRegistry::BackendRegistry() {
    factories_["echo"] = [](const BackendConfig& c) {
        return std::make_unique<ToyLM>(toy_config(c, ToyKind::echo));
    };
    factories_["mix"] = [](const BackendConfig& c) {
        return std::make_unique<ToyLM>(toy_config(c, ToyKind::mix));
    };
}

BackendRegistry& BackendRegistry::instance() {
    static BackendRegistry registry;
    return registry;
}

void BackendRegistry::register_factory(const std::string& name, BackendFactory factory) {
    factories_[name] = std::move(factory);
}

bool BackendRegistry::contains(const std::string& name) const { return factories_.contains(name); }

std::vector<std::string> BackendRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) out.push_back(k);
    return out;
}

std::shared_ptr<const FrozenLM> BackendRegistry::create(const BackendConfig& config) const {
    const bool toy_name = config.name == "echo" || config.name == "mix";
    if (config.kind == "toy" && !toy_name) {
        fail(ErrorCode::config_error, "unknown toy backend '" + config.name + "' (expected echo or mix)");
    }
    const auto it = factories_.find(config.name);
    if (it == factories_.end()) {
        fail(ErrorCode::unsupported, "no backend registered under '" + config.name +
                                         "'; external backends must be linked in and registered");
    }
    std::shared_ptr<const FrozenLM> lm = it->second(config);
    if (!lm->capabilities().concurrent_safe) lm = std::make_shared<SerializedLM>(lm);
    return lm;
}

}  // namespace selfie
