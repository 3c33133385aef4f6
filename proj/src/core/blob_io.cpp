#include "core/blob_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "core/errors.hpp"

namespace linecolor {

namespace {
constexpr char kMagic[4] = {'L', 'C', 'B', 'L'};
constexpr std::uint32_t kVersion = 1;

size_t shape_count(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}
}  // namespace

void BlobFile::put(const std::string& name, std::vector<int> shape, std::vector<double> data) {
    if (shape_count(shape) != data.size())
        throw RuntimeFailure("blob '" + name + "': shape/count mismatch");
    entries[name] = BlobEntry{std::move(shape), std::move(data)};
}

const BlobEntry& BlobFile::get(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw DataError("blob '" + name + "' missing from container");
    return it->second;
}

void BlobFile::save(const std::string& path) const {
    nlohmann::json header;
    header["meta"] = meta;
    auto& list = header["entries"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, e] : entries) {
        list.push_back({{"name", name}, {"dtype", "f64"}, {"shape", e.shape}, {"offset", offset}, {"count", e.data.size()}});
        offset += e.data.size() * sizeof(double);
    }
    std::string header_str = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(kMagic, 4);
    std::uint32_t ver = kVersion;
    f.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    std::uint64_t hlen = header_str.size();
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(header_str.data(), static_cast<std::streamsize>(hlen));
    for (const auto& [name, e] : entries) {
        (void)name;
        f.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    }
    if (!f) throw DataError("write failed: " + path);
}

BlobFile BlobFile::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad container magic: " + path);
    std::uint32_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    if (ver != kVersion) throw DataError("unsupported container version in " + path);
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header_str(hlen, '\0');
    f.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw DataError("truncated container header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad container manifest in " + path + ": " + e.what());
    }

    BlobFile out;
    out.meta = header.value("meta", nlohmann::json::object());
    std::streampos data_start = f.tellg();
    for (const auto& item : header.at("entries")) {
        std::string name = item.at("name");
        std::string dtype = item.at("dtype");
        std::vector<int> shape = item.at("shape").get<std::vector<int>>();
        std::uint64_t offset = item.at("offset");
        std::uint64_t count = item.at("count");
        if (shape_count(shape) != count) throw DataError("blob '" + name + "': manifest shape/count mismatch");

        BlobEntry e;
        e.shape = std::move(shape);
        e.data.resize(count);
        f.seekg(data_start + static_cast<std::streamoff>(offset));
        if (dtype == "f64") {
            f.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(count * sizeof(double)));
        } else if (dtype == "f32") {
            std::vector<float> tmp(count);
            f.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(count * sizeof(float)));
            for (size_t i = 0; i < count; ++i) e.data[i] = tmp[i];
        } else {
            throw DataError("blob '" + name + "': unsupported dtype " + dtype);
        }
        if (!f) throw DataError("truncated blob '" + name + "' in " + path);
        out.entries[name] = std::move(e);
    }
    return out;
}

}  // namespace linecolor
