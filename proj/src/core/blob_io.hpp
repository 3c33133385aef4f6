#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace linecolor {

// Self-describing container: magic + JSON manifest + named little-endian blobs.
// Used for checkpoints, serialized conditioning tensors, and preprocessed
// training examples. Doubles are written as f64; f32 payloads are widened on
// read.
struct BlobEntry {
    std::vector<int> shape;
    std::vector<double> data;
};

struct BlobFile {
    nlohmann::json meta;
    std::map<std::string, BlobEntry> entries;

    void put(const std::string& name, std::vector<int> shape, std::vector<double> data);
    const BlobEntry& get(const std::string& name) const;
    bool has(const std::string& name) const { return entries.count(name) > 0; }

    void save(const std::string& path) const;
    static BlobFile load(const std::string& path);
};

}  // namespace linecolor
