/* Copyright 2026 The OVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OVSNET_IO_HPP
#define OVSNET_IO_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ovsnet/embedding.hpp"
#include "ovsnet/errors.hpp"
#include "ovsnet/mask.hpp"
#include "ovsnet/random.hpp"

namespace ovsnet {

// Binary carriers, both little-endian and platform-independent:
//
// EMB1 embedding file:
//    magic   "EMB1"  (4 bytes)
//    count   u32 LE
//    dim     u32 LE
//    payload count * dim float32 LE, row-major
// Labels, when present, live in a JSON sidecar "<path>.labels.json" holding
// an array of `count` strings (row index -> label).
//
// MSK1 mask file:
//    magic   "MSK1"  (4 bytes)
//    width   u32 LE
//    height  u32 LE
//    payload height * width u16 LE class ids, row-major; 65535 = ignore

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline std::uint32_t get_u32le(const std::string& buf, std::size_t offset) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset + 1]))
          << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset + 2]))
          << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset + 3]))
          << 24);
}

inline std::uint16_t get_u16le(const std::string& buf, std::size_t offset) {
  return static_cast<std::uint16_t>(
      static_cast<std::uint16_t>(static_cast<unsigned char>(buf[offset])) |
      (static_cast<std::uint16_t>(static_cast<unsigned char>(buf[offset + 1]))
       << 8));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read failed: " + path.string());
  return buf;
}

inline void write_file(const std::filesystem::path& path,
                       std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".labels.json");
}

}  // namespace detail

inline void write_emb1(const std::filesystem::path& path,
                       const EmbeddingSet& set) {
  set.validate();
  std::string buf;
  buf.reserve(12 + static_cast<std::size_t>(set.count()) *
                       static_cast<std::size_t>(set.dim()) * 4);
  buf += "EMB1";
  detail::put_u32le(buf, static_cast<std::uint32_t>(set.count()));
  detail::put_u32le(buf, static_cast<std::uint32_t>(set.dim()));
  for (Eigen::Index r = 0; r < set.count(); ++r) {
    for (Eigen::Index c = 0; c < set.dim(); ++c) {
      const float f = static_cast<float>(set.values(r, c));
      if (!std::isfinite(f)) {
        throw DataError("write_emb1: value at (" + std::to_string(r) + ", " +
                        std::to_string(c) +
                        ") is not representable as finite float32");
      }
      detail::put_u32le(buf, std::bit_cast<std::uint32_t>(f));
    }
  }
  detail::write_file(path, buf);
  if (set.labels) {
    nlohmann::json j = *set.labels;
    detail::write_file(detail::sidecar_path(path), j.dump(2) + "\n");
  }
}

inline EmbeddingSet read_emb1(const std::filesystem::path& path) {
  const std::string buf = detail::read_file(path);
  if (buf.size() < 12 || buf.compare(0, 4, "EMB1") != 0) {
    throw DataError("read_emb1: bad magic in " + path.string());
  }
  const std::uint32_t count = detail::get_u32le(buf, 4);
  const std::uint32_t dim = detail::get_u32le(buf, 8);
  if (count > 0 && dim == 0) {
    throw DataError("read_emb1: zero dimension with nonzero count in " +
                    path.string());
  }
  const std::uint64_t expected =
      12 + static_cast<std::uint64_t>(count) * dim * 4;
  if (buf.size() != expected) {
    throw DataError("read_emb1: " + path.string() + " holds " +
                    std::to_string(buf.size()) + " bytes, expected " +
                    std::to_string(expected));
  }
  EmbeddingSet set;
  set.values.resize(count, dim);
  std::size_t offset = 12;
  for (std::uint32_t r = 0; r < count; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c, offset += 4) {
      const float f = std::bit_cast<float>(detail::get_u32le(buf, offset));
      if (!std::isfinite(f)) {
        throw DataError("read_emb1: non-finite value at row " +
                        std::to_string(r) + " in " + path.string());
      }
      set.values(r, c) = static_cast<double>(f);
    }
  }
  const auto sidecar = detail::sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(sidecar));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("read_emb1: malformed label sidecar " +
                      sidecar.string() + ": " + e.what());
    }
    if (!j.is_array()) {
      throw DataError("read_emb1: label sidecar must be a JSON array: " +
                      sidecar.string());
    }
    std::vector<std::string> labels;
    labels.reserve(j.size());
    for (const auto& item : j) {
      if (!item.is_string()) {
        throw DataError("read_emb1: non-string label in " + sidecar.string());
      }
      labels.push_back(item.get<std::string>());
    }
    set.labels = std::move(labels);
  }
  set.validate();
  return set;
}

inline void write_msk1(const std::filesystem::path& path, const SegMask& mask) {
  mask.validate();
  std::string buf;
  buf.reserve(12 + mask.labels.size() * 2);
  buf += "MSK1";
  detail::put_u32le(buf, static_cast<std::uint32_t>(mask.width));
  detail::put_u32le(buf, static_cast<std::uint32_t>(mask.height));
  for (const std::uint16_t v : mask.labels) detail::put_u16le(buf, v);
  detail::write_file(path, buf);
}

inline SegMask read_msk1(const std::filesystem::path& path) {
  const std::string buf = detail::read_file(path);
  if (buf.size() < 12 || buf.compare(0, 4, "MSK1") != 0) {
    throw DataError("read_msk1: bad magic in " + path.string());
  }
  const std::uint32_t width = detail::get_u32le(buf, 4);
  const std::uint32_t height = detail::get_u32le(buf, 8);
  if (width == 0 || height == 0) {
    throw DataError("read_msk1: zero dimension in " + path.string());
  }
  const std::uint64_t expected =
      12 + static_cast<std::uint64_t>(width) * height * 2;
  if (buf.size() != expected) {
    throw DataError("read_msk1: " + path.string() + " holds " +
                    std::to_string(buf.size()) + " bytes, expected " +
                    std::to_string(expected));
  }
  SegMask mask(static_cast<int>(height), static_cast<int>(width));
  std::size_t offset = 12;
  for (std::size_t i = 0; i < mask.labels.size(); ++i, offset += 2) {
    mask.labels[i] = detail::get_u16le(buf, offset);
  }
  return mask;
}

/// Deterministic stand-in for a text encoder: hashes (label, seed) into a
/// seeded generator, draws a standard-normal vector, and L2-normalizes.
/// Identical inputs give bit-identical vectors on every platform.
inline Embedding pseudo_encode(std::string_view label, int dim,
                               std::uint64_t seed) {
  if (dim < 2) {
    throw ConfigError("pseudo_encode: dim must be >= 2, got " +
                      std::to_string(dim));
  }
  Rng rng(hash_combine(fnv1a64(label), seed));
  Embedding v(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    const double n = v.norm();
    if (n > 1e-30) return v / n;
  }
}

/// Checksum over the serialized form of an embedding set (labels plus
/// float32 payload), stable across platforms.
inline std::string hash_embedding_set(const EmbeddingSet& set) {
  std::string material;
  if (set.labels) {
    for (const auto& l : *set.labels) {
      material += l;
      material += '\n';
    }
  }
  for (Eigen::Index r = 0; r < set.count(); ++r) {
    for (Eigen::Index c = 0; c < set.dim(); ++c) {
      detail::put_u32le(material, std::bit_cast<std::uint32_t>(
                                      static_cast<float>(set.values(r, c))));
    }
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(material)));
  return out;
}

// Canonical JSON: keys sorted (nlohmann objects already are), two-space
// indent, every floating-point number rendered with exactly six decimals.
// Manifests produced this way diff cleanly between runs.
namespace detail {

inline void canonical_dump(const nlohmann::json& j, std::string& out,
                           int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        canonical_dump(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        canonical_dump(item, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", j.get<double>());
      out += buf;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

inline std::string canonical_json(const nlohmann::json& j) {
  std::string out;
  detail::canonical_dump(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace ovsnet

#endif  // OVSNET_IO_HPP
