// Copyright 2026 The Shaper Authors.
//
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

#include "shaper/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "shaper/errors.h"
#include "shaper/io.h"

namespace shaper {

namespace {

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  void Need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what +
                        " at byte offset " + std::to_string(pos_));
    }
  }

  std::uint32_t U32(const char* what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t U64(const char* what) {
    Need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string String(std::size_t n, const char* what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> SerializeCheckpoint(const Supernet& model) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  PutU32(out, kCheckpointVersion);
  const std::string config = model.config().ToJson().dump();
  PutU32(out, static_cast<std::uint32_t>(config.size()));
  out.insert(out.end(), config.begin(), config.end());

  std::vector<const Parameter*> params = model.Parameters();
  std::sort(params.begin(), params.end(),
            [](const Parameter* a, const Parameter* b) { return a->name < b->name; });
  for (const Parameter* p : params) {
    PutU32(out, static_cast<std::uint32_t>(p->name.size()));
    out.insert(out.end(), p->name.begin(), p->name.end());
    PutU32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.dims()) PutU64(out, d);
    for (double v : p->value.values()) {
      PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

Supernet DeserializeCheckpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  const std::string magic = in.String(4, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic at byte offset 0");
  }
  const std::size_t version_offset = in.offset();
  const std::uint32_t version = in.U32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " at byte offset " + std::to_string(version_offset) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t json_len = in.U32("config length");
  const std::size_t json_offset = in.offset();
  const std::string json_text = in.String(json_len, "config");
  BackboneConfig config;
  try {
    config = BackboneConfig::FromJson(nlohmann::json::parse(json_text));
  } catch (const std::exception& e) {
    throw FormatError("invalid config document at byte offset " +
                      std::to_string(json_offset) + ": " + e.what());
  }

  Supernet model(config);
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : model.Parameters()) by_name[p->name] = p;
  std::map<std::string, bool> seen;

  while (!in.done()) {
    const std::size_t record_offset = in.offset();
    const std::uint32_t name_len = in.U32("tensor name length");
    const std::string name = in.String(name_len, "tensor name");
    auto it = by_name.find(name);
    if (it == by_name.end() || seen[name]) {
      throw FormatError("unexpected tensor '" + name + "' at byte offset " +
                        std::to_string(record_offset));
    }
    seen[name] = true;
    Parameter& p = *it->second;
    const std::uint32_t rank = in.U32("tensor rank");
    std::vector<std::size_t> dims;
    for (std::uint32_t i = 0; i < rank; ++i) {
      dims.push_back(static_cast<std::size_t>(in.U64("tensor dims")));
    }
    if (dims != p.value.dims()) {
      throw FormatError("tensor '" + name + "' has dims " + DimsString(dims) +
                        ", expected " + p.value.DimsString() + " at byte offset " +
                        std::to_string(record_offset));
    }
    in.Need(4 * p.value.size(), "tensor data");
    for (double& v : p.value.values()) {
      v = static_cast<double>(std::bit_cast<float>(in.U32("tensor data")));
    }
  }
  for (const auto& [name, p] : by_name) {
    if (!seen[name]) {
      throw FormatError("checkpoint is missing tensor '" + name +
                        "' (end of data at byte offset " +
                        std::to_string(in.offset()) + ")");
    }
  }
  return model;
}

void SaveCheckpoint(const Supernet& model, const std::string& path) {
  const std::vector<std::uint8_t> bytes = SerializeCheckpoint(model);
  WriteFileAtomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                         bytes.size()));
}

Supernet LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

void RoundToStoragePrecision(Supernet& model) {
  for (Parameter* p : model.Parameters()) {
    for (double& v : p->value.values()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace shaper
