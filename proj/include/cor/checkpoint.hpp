#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cor/tensor.hpp"

namespace cor {

// Ordered collection of named parameters. Declaration order is the payload
// order in checkpoint files.
class ParamStore {
  public:
    TensorPtr add(const std::string& name, TensorPtr t);
    const TensorPtr& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    const std::vector<std::pair<std::string, TensorPtr>>& entries() const { return entries_; }
    std::vector<TensorPtr> trainable() const;
    std::size_t size() const { return entries_.size(); }
    void zero_grad();

  private:
    std::vector<std::pair<std::string, TensorPtr>> entries_;
    std::map<std::string, std::size_t> index_;
};

// Checkpoint file layout: format tag "CORCKPT", u32 version, u32 entry
// count, per-entry {u32 name length, name bytes, u32 rank, u32 dims...},
// then one little-endian float32 payload per entry in declaration order.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);

// Loads values into an existing store; names, order, and shapes must match.
void load_checkpoint(ParamStore& store, const std::filesystem::path& path);

}  // namespace cor
