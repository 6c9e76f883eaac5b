#pragma once

#include <bit>
#include <utility>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "distract/core/error.hpp"
#include "distract/core/tensor.hpp"
#include "distract/model/config.hpp"

namespace distract {

/// Parameters plus free-form key=value metadata (configuration, vocabulary
/// fingerprint, epoch, validation loss).
struct ModelCheckpoint {
  std::map<std::string, std::string> metadata;
  ParameterSet tensors;

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;
};

// On-disk layout, all integers little-endian:
//
//   magic        8 bytes  "DSTRCKPT"
//   version      u32      kCheckpointVersion
//   meta_len     u64      byte length of the metadata block
//   metadata     UTF-8    "key=value\n" lines, keys sorted
//   count        u32      number of tensor records
//   per tensor:  u32 name_len, name bytes, u32 rank, u64 dims[rank],
//                f64 data[prod(dims)]
inline constexpr char kCheckpointMagic[8] = {'D', 'S', 'T', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw LoadError(std::string("checkpoint truncated while reading ") + what);
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::string read_bytes(std::istream& in, std::uint64_t n, const char* what) {
  // Guard against absurd lengths from corrupt headers before allocating.
  if (n > (std::uint64_t{1} << 40)) throw LoadError(std::string("checkpoint: implausible ") + what + " length");
  std::string s(static_cast<std::size_t>(n), '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw LoadError(std::string("checkpoint truncated while reading ") + what);
  return s;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt) {
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) {
    require(k.find_first_of("=\n") == std::string::npos && v.find('\n') == std::string::npos,
            "checkpoint: metadata key/value contains a separator: " + k);
    meta += k + "=" + v + "\n";
  }
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::write_le<std::uint64_t>(out, d);
    for (double x : t.data()) detail::write_le<double>(out, x);
  }
}

inline ModelCheckpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw LoadError("checkpoint: bad magic bytes (not a checkpoint file)");
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw LoadError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");

  ModelCheckpoint ckpt;
  const auto meta_len = detail::read_le<std::uint64_t>(in, "metadata length");
  std::istringstream meta(detail::read_bytes(in, meta_len, "metadata"));
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LoadError("checkpoint: malformed metadata line '" + line + "'");
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const auto count = detail::read_le<std::uint32_t>(in, "tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = detail::read_le<std::uint32_t>(in, "tensor name length");
    std::string name = detail::read_bytes(in, name_len, "tensor name");
    const auto rank = detail::read_le<std::uint32_t>(in, "tensor rank");
    if (rank > 8) throw LoadError("checkpoint: implausible rank for tensor '" + name + "'");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(detail::read_le<std::uint64_t>(in, "tensor dims"));
    const std::size_t n = Tensor::element_count(shape);
    if (n > (std::size_t{1} << 36)) throw LoadError("checkpoint: implausible size for tensor '" + name + "'");
    std::vector<double> data(n);
    for (double& x : data) x = detail::read_le<double>(in, "tensor data");
    if (!ckpt.tensors.emplace(name, Tensor(std::move(shape), std::move(data))).second)
      throw LoadError("checkpoint: duplicate tensor '" + name + "'");
  }
  return ckpt;
}

inline void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot open '" + tmp + "' for writing");
    write_checkpoint(out, ckpt);
    if (!out.flush()) throw LoadError("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw LoadError("cannot move checkpoint into place at '" + path + "'");
}

inline ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

// Model configuration <-> metadata entries.

inline void store_model_config(const ModelConfig& c, std::map<std::string, std::string>& meta) {
  meta["vocab_size"] = std::to_string(c.vocab_size);
  meta["embed_dim"] = std::to_string(c.embed_dim);
  meta["hidden_dim"] = std::to_string(c.hidden_dim);
  meta["attention_dim"] = std::to_string(c.attention_dim);
  meta["bidirectional"] = c.bidirectional ? "true" : "false";
  meta["two_level"] = c.two_level ? "true" : "false";
  meta["distract_content"] = c.distract_content ? "true" : "false";
  meta["distract_attention"] = c.distract_attention ? "true" : "false";
}

inline ModelConfig model_config_from(const std::map<std::string, std::string>& meta) {
  auto get = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw LoadError(std::string("checkpoint: metadata lacks '") + key + "'");
    return it->second;
  };
  auto number = [&](const char* key) {
    try {
      return static_cast<std::size_t>(std::stoull(get(key)));
    } catch (const std::logic_error&) {
      throw LoadError(std::string("checkpoint: bad value for '") + key + "'");
    }
  };
  auto flag = [&](const char* key) { return get(key) == "true"; };
  ModelConfig c;
  c.vocab_size = number("vocab_size");
  c.embed_dim = number("embed_dim");
  c.hidden_dim = number("hidden_dim");
  c.attention_dim = number("attention_dim");
  c.bidirectional = flag("bidirectional");
  c.two_level = flag("two_level");
  c.distract_content = flag("distract_content");
  c.distract_attention = flag("distract_attention");
  return c;
}

}  // namespace distract
