#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "voxsr/tensor/array.hpp"

namespace voxsr::tensor {

/// Ordered collection of named parameter arrays. Networks register their
/// weights here so the optimizer, checkpoints and freeze logic all see the
/// same objects.
class ParamStore {
 public:
  Array& add(const std::string& name, Array array);
  Array& get(const std::string& name);
  const Array& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Array> arrays() const;
  std::vector<Array> arrays_with_prefix(const std::string& prefix) const;
  const std::vector<std::pair<std::string, Array>>& items() const { return items_; }

  void set_requires_grad(const std::string& prefix, bool value);
  std::int64_t total_parameters() const;

 private:
  std::vector<std::pair<std::string, Array>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Flat binary container: a JSON manifest describing (name, shape, dtype,
/// byte offset) per tensor plus arbitrary metadata, followed by the raw
/// little-endian float64 payload.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& meta);

/// Loads metadata only (to build the architecture before loading weights).
nlohmann::json load_checkpoint_meta(const std::string& path);

/// Copies stored tensors into an existing store. Every tensor in the file
/// must match a registered parameter by name and shape, and vice versa;
/// mismatches raise with the offending name.
void load_checkpoint_into(const std::string& path, ParamStore& store);

}  // namespace voxsr::tensor
