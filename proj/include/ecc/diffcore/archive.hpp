#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ecc/diffcore/mlp.hpp"

namespace ecc::diff {

// Ordered collection of named tensors plus string attributes, persisted as
//
//   "ECCSNAP 1\n"
//   u32 attribute count, then (u32 len, bytes) key/value pairs
//   u32 tensor count, then per tensor: u32 name length, name bytes,
//       i64 rows, i64 cols, rows*cols little-endian IEEE-754 doubles (row-major)
//
// Networks are stored as "<module>.l<i>.W" / "<module>.l<i>.b", so layer
// dimensions are recoverable from the tensor shapes.
class Archive {
 public:
  void put(const std::string& name, const Tensor& t);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  void set_attr(const std::string& key, const std::string& value) { attrs_[key] = value; }
  const std::string& attr(const std::string& key) const;
  bool has_attr(const std::string& key) const { return attrs_.count(key) > 0; }

  void put_mlp(const Mlp& net);
  Mlp get_mlp(const std::string& module) const;
  void put_standardizer(const std::string& name, const Standardizer& s);
  Standardizer get_standardizer(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  bool operator==(const Archive& other) const;

 private:
  std::map<std::string, std::string> attrs_;
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace ecc::diff
