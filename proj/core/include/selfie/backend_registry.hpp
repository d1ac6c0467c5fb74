#pragma once

#include <functional>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "selfie/lm.hpp"

namespace selfie {

/// Backend section of a run config:
///   {"name": "echo", "kind": "toy", "seed": 0, "vocab_size": 32, "d": 32, "L": 4, "tau": 1.0}
/// External backends additionally carry a "weights" path and whatever keys
/// their factory reads from `extra`.
struct BackendConfig {
    std::string name = "echo";
    std::string kind = "toy";
    std::uint64_t seed = 0;
    std::size_t vocab_size = 32;
    std::size_t d = 32;
    std::size_t layers = 4;
    double tau = 1.0;
    std::vector<std::string> words;
    std::string weights;
    nlohmann::json extra = nlohmann::json::object();

    static BackendConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

using BackendFactory = std::function<std::unique_ptr<FrozenLM>(const BackendConfig&)>;

/// Process-wide map from backend name to factory. "echo" and "mix" (kind
/// toy) are always present; real-model integrations register themselves
/// under kind external.
class BackendRegistry {
public:
    static BackendRegistry& instance();

    void register_factory(const std::string& name, BackendFactory factory);
    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;

    /// Builds the backend; non-concurrent-safe backends come back wrapped
    /// in a SerializedLM.
    std::shared_ptr<const FrozenLM> create(const BackendConfig& config) const;

private:
    BackendRegistry();
    std::map<std::string, BackendFactory> factories_;
};

}  // namespace selfie
