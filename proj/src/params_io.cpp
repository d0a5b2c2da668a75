#include "crednet/params_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crednet::ad {

namespace {

static_assert(std::endian::native == std::endian::little,
              "parameter snapshots assume a little-endian host");

constexpr char kMagic[4] = {'C', 'N', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("parameter snapshot truncated");
    return v;
}

} // namespace

void save_params(const std::string& path, const NamedParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, params.size());
    for (const auto& [name, t] : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, 2);
        put<std::uint64_t>(out, t.rows());
        put<std::uint64_t>(out, t.cols());
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

NamedParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + " is not a parameter snapshot");
    auto version = get<std::uint32_t>(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
    auto count = get<std::uint64_t>(in);
    NamedParams params;
    params.reserve(count);
    for (std::uint64_t r = 0; r < count; ++r) {
        auto name_len = get<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        auto rank = get<std::uint32_t>(in);
        if (rank != 2) throw std::runtime_error("unsupported tensor rank " + std::to_string(rank));
        auto rows = get<std::uint64_t>(in);
        auto cols = get<std::uint64_t>(in);
        std::vector<double> values(rows * cols);
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in) throw std::runtime_error("parameter snapshot truncated");
        params.emplace_back(std::move(name),
                            Tensor(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                                   std::move(values)));
    }
    return params;
}

} // namespace crednet::ad
