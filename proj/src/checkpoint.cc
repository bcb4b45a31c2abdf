/* Copyright 2026 The fhat Authors. All Rights Reserved.

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

#include "fhat/checkpoint.h"

#include <fstream>
#include <iterator>
#include <string>

#include "binary_io.h"
#include "fhat/errors.h"

namespace fhat {

namespace {

using internal::GetLe;
using internal::PutLe;

constexpr char kMagic[] = "fhat-checkpoint 1\n";

class Reader {
 public:
  Reader(const std::string& blob, const std::filesystem::path& path) : blob_(blob), path_(path) {}

  const char* Take(std::size_t n) {
    if (n > blob_.size() - pos_) throw IoError(path_.string() + ": truncated checkpoint");
    const char* p = blob_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t U64() { return GetLe<std::uint64_t>(Take(8)); }
  std::string String() {
    const std::uint64_t n = U64();
    const char* p = Take(n);
    return std::string(p, n);
  }
  bool AtEnd() const { return pos_ == blob_.size(); }

 private:
  const std::string& blob_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const RunConfig& config,
                    const ParamSet& params) {
  std::string buf(kMagic);
  const std::string json = config.ToJson();
  PutLe<std::uint64_t>(&buf, json.size());
  buf += json;
  PutLe<std::uint64_t>(&buf, params.size());
  for (const auto& e : params) {
    PutLe<std::uint64_t>(&buf, e.name.size());
    buf += e.name;
    PutLe<std::uint64_t>(&buf, e.value.rank());
    for (std::size_t d : e.value.shape()) PutLe<std::uint64_t>(&buf, d);
    for (double v : e.value.data()) PutLe<double>(&buf, v);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(blob, path);
  if (std::string(r.Take(sizeof(kMagic) - 1), sizeof(kMagic) - 1) != kMagic) {
    throw ParseError(path.string() + ": not a checkpoint");
  }
  Checkpoint ck;
  ck.config = RunConfig::FromJson(r.String());
  const std::uint64_t count = r.U64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.String();
    const std::uint64_t rank = r.U64();
    if (rank > 8) throw ParseError(path.string() + ": implausible rank for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = r.U64();
    Tensor t(shape);
    const char* p = r.Take(t.size() * 8);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = GetLe<double>(p + 8 * k);
    ck.params.Add(name, std::move(t));
  }
  if (!r.AtEnd()) throw ParseError(path.string() + ": trailing bytes after tensors");
  const ParamSet expected = InitHatParams(ck.config.ToHatConfig(), 0);
  if (!expected.SameLayout(ck.params)) {
    throw ParseError(path.string() + ": tensors do not match the stored model config");
  }
  return ck;
}

}  // namespace fhat
