#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "iflow/tensor.hpp"

namespace iflow {

// Binary tensor record: "IFTN", u32 version=1, u32 ndim, ndim x u64 extents,
// row-major float32 payload, all little-endian.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in, std::size_t& offset, const std::string& context);

void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

// Checkpoint: u32 entry count, then per entry u16 name length, UTF-8 name,
// tensor record. Entries are written in name order so files are reproducible.
void save_checkpoint(const std::map<std::string, Tensor>& entries, const std::string& path);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

// Flat key=value text block: one pair per line, '#' starts a comment, blank
// lines ignored. Keys may not repeat.
using KvMap = std::map<std::string, std::string>;
KvMap parse_kv(const std::string& text);
std::string render_kv(const KvMap& kv);
KvMap load_kv_file(const std::string& path);
void save_kv_file(const KvMap& kv, const std::string& path);

// Typed accessors with config-style errors naming the key.
double kv_get_double(const KvMap& kv, const std::string& key, double fallback);
double kv_require_double(const KvMap& kv, const std::string& key);
long kv_get_long(const KvMap& kv, const std::string& key, long fallback);
std::string kv_get_string(const KvMap& kv, const std::string& key, const std::string& fallback);

} // namespace iflow
