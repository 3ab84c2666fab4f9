#include "voxsr/tensor/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "voxsr/common/error.hpp"

namespace voxsr::tensor {

namespace {
constexpr char kMagic[8] = {'V', 'S', 'R', 'C', 'K', 'P', 'T', '1'};
}

Array& ParamStore::add(const std::string& name, Array array) {
  if (index_.count(name)) fail_arg("param store: duplicate parameter '", name, "'");
  index_[name] = items_.size();
  items_.emplace_back(name, std::move(array));
  return items_.back().second;
}

Array& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail_arg("param store: unknown parameter '", name, "'");
  return items_[it->second].second;
}

const Array& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail_arg("param store: unknown parameter '", name, "'");
  return items_[it->second].second;
}

std::vector<Array> ParamStore::arrays() const {
  std::vector<Array> out;
  out.reserve(items_.size());
  for (const auto& [_, a] : items_) out.push_back(a);
  return out;
}

std::vector<Array> ParamStore::arrays_with_prefix(const std::string& prefix) const {
  std::vector<Array> out;
  for (const auto& [name, a] : items_) {
    if (name.rfind(prefix, 0) == 0) out.push_back(a);
  }
  return out;
}

void ParamStore::set_requires_grad(const std::string& prefix, bool value) {
  for (auto& [name, a] : items_) {
    if (name.rfind(prefix, 0) == 0) a.set_requires_grad(value);
  }
}

std::int64_t ParamStore::total_parameters() const {
  std::int64_t total = 0;
  for (const auto& [_, a] : items_) total += a.size();
  return total;
}

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["meta"] = meta;
  auto& tensors = manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, a] : store.items()) {
    nlohmann::json t;
    t["name"] = name;
    t["shape"] = a.shape();
    t["dtype"] = "f64";
    t["offset"] = offset;
    t["numel"] = a.size();
    tensors.push_back(std::move(t));
    offset += static_cast<std::uint64_t>(a.size()) * sizeof(double);
  }
  const std::string manifest_str = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail("cannot open '", path, "' for writing");
  os.write(kMagic, 8);
  const std::uint64_t mlen = manifest_str.size();
  os.write(reinterpret_cast<const char*>(&mlen), 8);
  os.write(manifest_str.data(), static_cast<std::streamsize>(mlen));
  for (const auto& [_, a] : store.items()) {
    os.write(reinterpret_cast<const char*>(a.values().data()),
             static_cast<std::streamsize>(a.values().size() * sizeof(double)));
  }
  if (!os) fail("write failed for '", path, "'");
}

namespace {

nlohmann::json read_manifest(std::ifstream& is, const std::string& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) fail("'", path, "': not a checkpoint file");
  std::uint64_t mlen = 0;
  is.read(reinterpret_cast<char*>(&mlen), 8);
  std::string manifest_str(mlen, '\0');
  is.read(manifest_str.data(), static_cast<std::streamsize>(mlen));
  if (!is) fail("'", path, "': truncated checkpoint manifest");
  return nlohmann::json::parse(manifest_str);
}

}  // namespace

nlohmann::json load_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open '", path, "' for reading");
  return read_manifest(is, path)["meta"];
}

void load_checkpoint_into(const std::string& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open '", path, "' for reading");
  const nlohmann::json manifest = read_manifest(is, path);
  const std::streampos payload_start = is.tellg();

  std::size_t matched = 0;
  for (const auto& t : manifest["tensors"]) {
    const std::string name = t["name"];
    if (!store.contains(name)) {
      fail("'", path, "': checkpoint tensor '", name, "' has no matching parameter");
    }
    Array& a = store.get(name);
    const Shape shape = t["shape"].get<Shape>();
    if (shape != a.shape()) {
      fail("'", path, "': tensor '", name, "' has shape ", shape_str(shape),
           " but the model expects ", shape_str(a.shape()));
    }
    is.seekg(payload_start + static_cast<std::streamoff>(t["offset"].get<std::uint64_t>()));
    is.read(reinterpret_cast<char*>(a.values().data()),
            static_cast<std::streamsize>(a.values().size() * sizeof(double)));
    if (!is) fail("'", path, "': truncated payload for tensor '", name, "'");
    ++matched;
  }
  if (matched != store.items().size()) {
    for (const auto& [name, _] : store.items()) {
      bool found = false;
      for (const auto& t : manifest["tensors"]) {
        if (t["name"] == name) { found = true; break; }
      }
      if (!found) fail("'", path, "': checkpoint is missing parameter '", name, "'");
    }
  }
}

}  // namespace voxsr::tensor
