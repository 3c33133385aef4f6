#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "core/errors.hpp"

namespace linecolor {

// Strict-schema JSON reading, shared by every config parser: unknown keys are
// rejected (no silent typos), present keys overwrite defaults, type errors
// surface as config errors naming the key.
inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

}  // namespace linecolor
