// scenesep/checkpoint.hpp

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

#ifndef SCENESEP_CHECKPOINT_HPP_
#define SCENESEP_CHECKPOINT_HPP_

#include <map>
#include <string>
#include <vector>

#include "scenesep/tensor.hpp"

namespace scenesep {

/// Flat archive of named float tensors plus a string-valued metadata map.
/// On disk: 8-byte magic, u64 little-endian index length, JSON index
/// (meta + per-tensor name/dtype/shape/offset/nbytes), then little-endian
/// payloads in index order. save(load(f)) is byte-exact.
class Archive {
 public:
  std::map<std::string, std::string> meta;

  void put(const std::string& name, const tg::Tensor& t);
  bool has(const std::string& name) const;
  const tg::Tensor& get(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }

  void save(const std::string& path) const;
  static Archive load(const std::string& path);

 private:
  std::vector<std::string> order_;
  std::map<std::string, tg::Tensor> tensors_;
};

/// Ordered list of named parameters; the bridge between models and archives.
class ParamRegistry {
 public:
  void add(const std::string& name, const tg::Tensor& t);
  void add_all(const std::string& prefix, const ParamRegistry& other);

  const std::vector<std::pair<std::string, tg::Tensor>>& items() const { return items_; }
  std::vector<tg::Tensor> tensors() const;

  Archive to_archive() const;
  /// Copies archive payloads into the registered tensors (shapes must match);
  /// extra archive entries are rejected, missing ones too.
  void load_from(const Archive& a);

 private:
  std::vector<std::pair<std::string, tg::Tensor>> items_;
};

/// Requires every key of `expect` to appear in `got` with the same value;
/// models call this before loading weights from a checkpoint.
void check_meta_matches(const std::map<std::string, std::string>& expect,
                        const std::map<std::string, std::string>& got);

/// FNV-1a over the whole file; used by the freezing-protocol assertions.
std::uint64_t file_hash(const std::string& path);

}  // namespace scenesep

#endif  // SCENESEP_CHECKPOINT_HPP_
