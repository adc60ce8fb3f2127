#include "cor/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace cor {

namespace {

constexpr char kTag[8] = {'C', 'O', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw CheckpointError("checkpoint: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

TensorPtr ParamStore::add(const std::string& name, TensorPtr t) {
    if (index_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    entries_.emplace_back(name, t);
    return t;
}

const TensorPtr& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("unknown parameter name: " + name);
    return entries_[it->second].second;
}

std::vector<TensorPtr> ParamStore::trainable() const {
    std::vector<TensorPtr> out;
    for (const auto& [name, t] : entries_) {
        if (t->requires_grad) out.push_back(t);
    }
    return out;
}

void ParamStore::zero_grad() {
    for (const auto& [name, t] : entries_) t->zero_grad();
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("checkpoint: cannot open for writing: " + path.string());
    os.write(kTag, 8);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, t] : store.entries()) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(t->shape.size()));
        for (int d : t->shape) write_u32(os, static_cast<std::uint32_t>(d));
    }
    for (const auto& [name, t] : store.entries()) {
        for (double v : t->data) write_f32(os, static_cast<float>(v));
    }
    if (!os) throw CheckpointError("checkpoint: write failure: " + path.string());
}

void load_checkpoint(ParamStore& store, const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open: " + path.string());
    char tag[8];
    is.read(tag, 8);
    if (!is || std::memcmp(tag, kTag, 8) != 0) throw CheckpointError("checkpoint: bad format tag");
    const std::uint32_t version = read_u32(is);
    if (version != kVersion) {
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = read_u32(is);
    if (count != store.size()) throw CheckpointError("checkpoint: parameter count mismatch");
    for (const auto& [name, t] : store.entries()) {
        const std::uint32_t len = read_u32(is);
        std::string fname(len, '\0');
        is.read(fname.data(), len);
        if (!is || fname != name) throw CheckpointError("checkpoint: parameter name mismatch");
        const std::uint32_t rank = read_u32(is);
        if (rank != t->shape.size()) {
            throw CheckpointError("checkpoint: rank mismatch for " + name);
        }
        for (int d : t->shape) {
            if (read_u32(is) != static_cast<std::uint32_t>(d)) {
                throw CheckpointError("checkpoint: shape mismatch for " + name);
            }
        }
    }
    for (const auto& [name, t] : store.entries()) {
        for (double& v : t->data) v = static_cast<double>(read_f32(is));
        if (!is) throw CheckpointError("checkpoint: truncated payload at " + name);
    }
}

}  // namespace cor
