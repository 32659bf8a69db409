// src/checkpoint.cpp

// Copyright 2026 The scenesep Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scenesep/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace scenesep {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'A', 'R', 'C', 'H', 'V', '1'};

[[noreturn]] void ckpt_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("checkpoint: " + path + ": " + what);
}

}  // namespace

void Archive::put(const std::string& name, const tg::Tensor& t) {
  if (tensors_.count(name)) ckpt_fail(name, "duplicate tensor name");
  order_.push_back(name);
  tensors_.emplace(name, t);
}

bool Archive::has(const std::string& name) const { return tensors_.count(name) != 0; }

const tg::Tensor& Archive::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) ckpt_fail(name, "tensor not in archive");
  return it->second;
}

void Archive::save(const std::string& path) const {
  nlohmann::json index;
  index["format"] = 1;
  index["meta"] = meta;
  nlohmann::json list = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& name : order_) {
    const tg::Tensor& t = tensors_.at(name);
    const std::uint64_t nbytes = static_cast<std::uint64_t>(t.numel()) * sizeof(float);
    nlohmann::json e;
    e["name"] = name;
    e["dtype"] = "f32";
    e["shape"] = t.shape();
    e["offset"] = offset;
    e["nbytes"] = nbytes;
    list.push_back(e);
    offset += nbytes;
  }
  index["tensors"] = list;
  const std::string index_str = index.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) ckpt_fail(path, "cannot open for writing");
  f.write(kMagic, 8);
  const std::uint64_t len = index_str.size();
  char lenb[8];
  for (int i = 0; i < 8; ++i) lenb[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  f.write(lenb, 8);
  f.write(index_str.data(), static_cast<std::streamsize>(index_str.size()));
  for (const auto& name : order_) {
    const auto& data = tensors_.at(name).data();
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!f) ckpt_fail(path, "write failed");
}

Archive Archive::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) ckpt_fail(path, "cannot open");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    ckpt_fail(path, "bad magic");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (16 + len > bytes.size()) ckpt_fail(path, "index overruns file");

  nlohmann::json index;
  try {
    index = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const std::exception& e) {
    ckpt_fail(path, std::string("bad index: ") + e.what());
  }
  Archive a;
  for (auto& [k, v] : index.at("meta").items()) a.meta[k] = v.get<std::string>();
  const std::size_t payload_base = 16 + len;
  for (const auto& e : index.at("tensors")) {
    const std::string name = e.at("name").get<std::string>();
    if (e.at("dtype").get<std::string>() != "f32") ckpt_fail(path, name + ": unsupported dtype");
    tg::Shape shape = e.at("shape").get<tg::Shape>();
    const std::uint64_t offset = e.at("offset").get<std::uint64_t>();
    const std::uint64_t nbytes = e.at("nbytes").get<std::uint64_t>();
    if (payload_base + offset + nbytes > bytes.size())
      ckpt_fail(path, name + ": payload overruns file");
    std::vector<float> data(nbytes / sizeof(float));
    std::memcpy(data.data(), bytes.data() + payload_base + offset, nbytes);
    a.put(name, tg::Tensor::from_data(std::move(shape), std::move(data)));
  }
  return a;
}

void ParamRegistry::add(const std::string& name, const tg::Tensor& t) {
  for (const auto& [n, existing] : items_)
    if (n == name) throw std::invalid_argument("params: duplicate name " + name);
  items_.emplace_back(name, t);
}

void ParamRegistry::add_all(const std::string& prefix, const ParamRegistry& other) {
  for (const auto& [n, t] : other.items_) add(prefix + n, t);
}

std::vector<tg::Tensor> ParamRegistry::tensors() const {
  std::vector<tg::Tensor> out;
  out.reserve(items_.size());
  for (const auto& [n, t] : items_) out.push_back(t);
  return out;
}

Archive ParamRegistry::to_archive() const {
  Archive a;
  for (const auto& [n, t] : items_) a.put(n, t);
  return a;
}

void ParamRegistry::load_from(const Archive& a) {
  if (a.names().size() != items_.size())
    throw std::runtime_error("params: archive holds " + std::to_string(a.names().size()) +
                             " tensors, model expects " + std::to_string(items_.size()));
  for (const auto& [name, t] : items_) {
    const tg::Tensor& src = a.get(name);
    if (src.shape() != t.shape())
      throw std::runtime_error("params: " + name + " shape " + tg::shape_str(src.shape()) +
                               " does not match model " + tg::shape_str(t.shape()));
    t.impl()->data = src.data();
  }
}

void check_meta_matches(const std::map<std::string, std::string>& expect,
                        const std::map<std::string, std::string>& got) {
  for (const auto& [k, v] : expect) {
    auto it = got.find(k);
    if (it == got.end())
      throw std::runtime_error("checkpoint meta missing key '" + k + "'");
    if (it->second != v)
      throw std::runtime_error("checkpoint meta mismatch: " + k + " = " + it->second +
                               ", model expects " + v);
  }
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("hash: cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace scenesep
