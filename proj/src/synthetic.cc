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

#include "fhat/synthetic.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binary_io.h"
#include "fhat/errors.h"
#include "fhat/rng.h"

namespace fhat {

namespace {

using internal::GetLe;
using internal::PutLe;

constexpr char kManifestMagic[] = "fhat-dataset 1";

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::filesystem::path StemOf(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".manifest" || ext == ".bin") return path.parent_path() / path.stem();
  return path;
}

std::filesystem::path WithSuffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void SyntheticTask::Validate() const {
  if (vocab_size < 1) throw ConfigError("task vocab_size must be >= 1");
  if (feature_dim < 1) throw ConfigError("task feature_dim must be >= 1");
  if (frames_per_token < 1) throw ConfigError("task frames_per_token must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("task noise must be >= 0");
  if (min_labels < 1 || min_labels > max_labels) {
    throw ConfigError("task needs 1 <= min_labels <= max_labels");
  }
}

Tensor SyntheticTask::Prototypes() const {
  Validate();
  Rng rng(SplitMix(seed));
  return rng.NormalTensor({vocab_size, feature_dim});
}

std::size_t Dataset::MaxFrames() const {
  std::size_t m = 0;
  for (const auto& e : examples) m = std::max(m, e.features.rows());
  return m;
}

std::size_t Dataset::MaxLabels() const {
  std::size_t m = 0;
  for (const auto& e : examples) m = std::max(m, e.labels.size());
  return m;
}

Example GenerateExample(const SyntheticTask& task, const Tensor& prototypes, std::uint64_t stream,
                        std::size_t index) {
  Rng rng(SplitMix(SplitMix(SplitMix(task.seed) ^ stream) + index));
  Example ex;
  const auto u = static_cast<std::size_t>(rng.UniformInt(
      static_cast<std::int64_t>(task.min_labels), static_cast<std::int64_t>(task.max_labels)));
  ex.labels.resize(u);
  for (auto& y : ex.labels) y = static_cast<int>(rng.UniformInt(0, static_cast<std::int64_t>(task.vocab_size) - 1));
  const std::size_t d = task.feature_dim, f = task.frames_per_token;
  ex.features = Tensor({u * f, d});
  for (std::size_t i = 0; i < u; ++i) {
    const auto proto = prototypes.row(static_cast<std::size_t>(ex.labels[i]));
    for (std::size_t r = 0; r < f; ++r) {
      auto row = ex.features.row(i * f + r);
      for (std::size_t k = 0; k < d; ++k) {
        row[k] = proto[k];
        if (task.noise > 0.0) row[k] += task.noise * rng.Normal();
      }
    }
  }
  return ex;
}

Dataset GenerateDataset(const SyntheticTask& task, std::size_t count, std::uint64_t stream) {
  const Tensor prototypes = task.Prototypes();
  Dataset ds;
  ds.task = task;
  ds.stream = stream;
  ds.examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ds.examples.push_back(GenerateExample(task, prototypes, stream, i));
  return ds;
}

std::filesystem::path WriteDataset(const Dataset& dataset, const std::filesystem::path& stem_in) {
  const auto stem = StemOf(stem_in);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  const auto bin_path = WithSuffix(stem, ".bin");
  const auto manifest_path = WithSuffix(stem, ".manifest");
  const SyntheticTask& t = dataset.task;

  std::ostringstream manifest;
  manifest.precision(17);
  manifest << kManifestMagic << "\n"
           << "records " << bin_path.filename().string() << "\n"
           << "vocab_size " << t.vocab_size << "\n"
           << "feature_dim " << t.feature_dim << "\n"
           << "frames_per_token " << t.frames_per_token << "\n"
           << "noise " << t.noise << "\n"
           << "min_labels " << t.min_labels << "\n"
           << "max_labels " << t.max_labels << "\n"
           << "seed " << t.seed << "\n"
           << "stream " << dataset.stream << "\n"
           << "count " << dataset.examples.size() << "\n";

  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + bin_path.string());
  std::uint64_t offset = 0;
  std::string buf;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const Example& e = dataset.examples[i];
    buf.clear();
    PutLe<std::uint64_t>(&buf, e.features.rows());
    PutLe<std::uint64_t>(&buf, e.labels.size());
    PutLe<std::uint64_t>(&buf, e.features.cols());
    for (double v : e.features.data()) PutLe<double>(&buf, v);
    for (int y : e.labels) PutLe<std::int32_t>(&buf, y);
    bin.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    manifest << i << " " << offset << " " << e.features.rows() << " " << e.labels.size() << "\n";
    offset += buf.size();
  }
  if (!bin) throw IoError("write failed for " + bin_path.string());

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.str();
  if (!out) throw IoError("write failed for " + manifest_path.string());
  return manifest_path;
}

Dataset ReadDataset(const std::filesystem::path& path) {
  const auto stem = StemOf(path);
  const auto manifest_path = WithSuffix(stem, ".manifest");
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read " + manifest_path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestMagic) {
    throw ParseError(manifest_path.string() + ": not a dataset manifest");
  }
  Dataset ds;
  std::string records;
  std::size_t count = 0;
  auto expect = [&](const char* key, auto* value) {
    std::string k;
    if (!std::getline(in, line)) throw ParseError(manifest_path.string() + ": truncated header");
    std::istringstream ls(line);
    if (!(ls >> k >> *value) || k != key) {
      throw ParseError(manifest_path.string() + ": expected '" + key + "', got '" + line + "'");
    }
  };
  expect("records", &records);
  expect("vocab_size", &ds.task.vocab_size);
  expect("feature_dim", &ds.task.feature_dim);
  expect("frames_per_token", &ds.task.frames_per_token);
  expect("noise", &ds.task.noise);
  expect("min_labels", &ds.task.min_labels);
  expect("max_labels", &ds.task.max_labels);
  expect("seed", &ds.task.seed);
  expect("stream", &ds.stream);
  expect("count", &count);
  ds.task.Validate();

  const auto bin_path = manifest_path.parent_path() / records;
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot read " + bin_path.string());
  const std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  ds.examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ParseError(manifest_path.string() + ": missing record lines");
    std::istringstream ls(line);
    std::size_t index = 0, offset = 0, frames = 0, labels = 0;
    if (!(ls >> index >> offset >> frames >> labels) || index != i) {
      throw ParseError(manifest_path.string() + ": bad record line '" + line + "'");
    }
    if (offset + 24 > blob.size()) throw IoError(bin_path.string() + ": record " + std::to_string(i) + " out of range");
    const char* p = blob.data() + offset;
    const auto T = GetLe<std::uint64_t>(p), U = GetLe<std::uint64_t>(p + 8), d = GetLe<std::uint64_t>(p + 16);
    if (T != frames || U != labels || d != ds.task.feature_dim) {
      throw ParseError(bin_path.string() + ": record " + std::to_string(i) + " header disagrees with manifest");
    }
    const std::size_t bytes = 24 + T * d * 8 + U * 4;
    if (offset + bytes > blob.size()) throw IoError(bin_path.string() + ": record " + std::to_string(i) + " truncated");
    p += 24;
    Example e;
    e.features = Tensor({T, d});
    for (auto& v : e.features.data()) {
      v = GetLe<double>(p);
      p += 8;
    }
    e.labels.resize(U);
    for (auto& y : e.labels) {
      y = GetLe<std::int32_t>(p);
      p += 4;
      if (y < 0 || static_cast<std::size_t>(y) >= ds.task.vocab_size) {
        throw ParseError(bin_path.string() + ": label id out of range in record " + std::to_string(i));
      }
    }
    ds.examples.push_back(std::move(e));
  }
  return ds;
}

}  // namespace fhat
