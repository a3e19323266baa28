#pragma once

#include <fstream>

#include <json.hpp>

#include "hopman/nn/layers.hpp"

namespace hopman::nn {

inline constexpr u32 kCheckpointMagic = 0x43504f48;  // "HOPC"
inline constexpr u32 kCheckpointVersion = 1;

// Versioned binary parameter blob with an embedded JSON header.
template <typename T>
void save_checkpoint(const std::string& path, const ParamStore<T>& ps, nlohmann::json meta) {
  nlohmann::json tensors = nlohmann::json::array();
  u64 offset = 0;
  for (const auto& [name, p] : ps.params()) {
    tensors.push_back({{"name", name}, {"shape", p->val.shape}, {"offset", offset}});
    offset += u64(p->val.numel()) * sizeof(T);
  }
  meta["tensors"] = tensors;
  meta["dtype"] = sizeof(T) == 4 ? "f32" : "f64";
  meta["format_version"] = kCheckpointVersion;
  const std::string header = meta.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open for write: " + path);
  const u32 magic = kCheckpointMagic, version = kCheckpointVersion;
  const u64 hlen = header.size();
  f.write(reinterpret_cast<const char*>(&magic), 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(header.data(), std::streamsize(header.size()));
  for (const auto& [name, p] : ps.params())
    f.write(reinterpret_cast<const char*>(p->val.data()),
            std::streamsize(size_t(p->val.numel()) * sizeof(T)));
  if (!f) throw DataError("checkpoint: short write: " + path);
}

inline nlohmann::json read_checkpoint_header(std::ifstream& f, const std::string& path) {
  u32 magic = 0, version = 0;
  u64 hlen = 0;
  f.read(reinterpret_cast<char*>(&magic), 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&hlen), 8);
  if (!f || magic != kCheckpointMagic)
    throw DataError("checkpoint: bad magic in " + path);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported format version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ") in " + path);
  std::string header(hlen, '\0');
  f.read(header.data(), std::streamsize(hlen));
  if (!f) throw DataError("checkpoint: truncated header in " + path);
  return nlohmann::json::parse(header);
}

inline nlohmann::json peek_checkpoint_meta(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open: " + path);
  return read_checkpoint_header(f, path);
}

// Loads parameters into an already-constructed store; names and shapes must
// match the store exactly. Returns the header metadata.
template <typename T>
nlohmann::json load_checkpoint(const std::string& path, ParamStore<T>& ps) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open: " + path);
  nlohmann::json meta = read_checkpoint_header(f, path);
  const std::string want = sizeof(T) == 4 ? "f32" : "f64";
  if (meta.at("dtype").get<std::string>() != want)
    throw DataError("checkpoint: dtype mismatch in " + path);
  size_t count = 0;
  for (const auto& t : meta.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    auto p = ps.get(name);
    const std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    if (shape != p->val.shape)
      throw DataError("checkpoint: shape mismatch for " + name + " in " + path);
    f.read(reinterpret_cast<char*>(p->val.data()),
           std::streamsize(size_t(p->val.numel()) * sizeof(T)));
    ++count;
  }
  if (!f) throw DataError("checkpoint: truncated payload in " + path);
  if (count != ps.params().size())
    throw DataError("checkpoint: parameter count mismatch in " + path);
  return meta;
}

}  // namespace hopman::nn
