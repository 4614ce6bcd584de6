// Copyright 2026 The PitchRAVE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pitchrave/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pitchrave/common.hpp"

namespace pitchrave::model {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr int kFormatVersion = 1;
constexpr const char* kManifest = "manifest.json";

const char* NativeDtype() { return sizeof(Real) == 8 ? "float64" : "float32"; }

template <typename T>
std::vector<Real> DecodeBlob(const std::string& bytes, std::size_t count) {
  std::vector<Real> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<Real>(v);
  }
  return out;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

nlohmann::json StagesForGroup(const std::string& group) {
  if (group == kEncoderGroup || group == kAuxFcGroup) return {1};
  if (group == kDecoderGroup) return {1, 2};
  if (group == kDiscriminatorGroup) return {2};
  return nlohmann::json::array();
}

void SaveCheckpoint(const std::filesystem::path& dir, const RaveModel& model,
                    const nlohmann::json& metadata) {
  std::filesystem::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::array();
  for (const ad::Param& p : model.params().params()) {
    const std::string file = p.name + ".bin";
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / file).string());
    const auto values = p.tensor.values();
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
    if (!out) throw DataError("short write to " + (dir / file).string());
    tensors.push_back({{"name", p.name},
                       {"group", p.group},
                       {"shape", p.tensor.shape()},
                       {"dtype", NativeDtype()},
                       {"frozen", p.frozen},
                       {"stages", StagesForGroup(p.group)},
                       {"file", file}});
  }
  nlohmann::json manifest = {{"format_version", kFormatVersion},
                             {"config", model.config()},
                             {"metadata", metadata},
                             {"tensors", tensors}};
  std::ofstream out(dir / kManifest, std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / kManifest).string());
  out << manifest.dump(2) << '\n';
}

Checkpoint LoadCheckpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFile(dir / kManifest));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  Checkpoint ckpt;
  try {
    if (manifest.value("format_version", 0) != kFormatVersion) {
      throw DataError("unsupported checkpoint format version");
    }
    ckpt.config = manifest.at("config").get<ModelConfig>();
    ckpt.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<ad::Shape>();
      const auto dtype = entry.at("dtype").get<std::string>();
      const std::size_t count = ad::NumElements(shape);
      const std::string bytes = ReadFile(dir / entry.at("file").get<std::string>());
      std::vector<Real> values;
      if (dtype == "float64" && bytes.size() == count * 8) {
        values = DecodeBlob<double>(bytes, count);
      } else if (dtype == "float32" && bytes.size() == count * 4) {
        values = DecodeBlob<float>(bytes, count);
      } else {
        throw DataError("tensor '" + name + "': blob of " + std::to_string(bytes.size()) +
                        " bytes does not hold " + std::to_string(count) + " " + dtype +
                        " values");
      }
      ckpt.params.Add(name, entry.at("group").get<std::string>(),
                      ad::Tensor::FromVector(shape, std::move(values)));
      ckpt.params.SetFrozen(name, entry.value("frozen", false));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  } catch (const UsageError& e) {
    throw DataError("invalid checkpoint: " + std::string(e.what()));
  }
  return ckpt;
}

RaveModel LoadModel(const std::filesystem::path& dir, nlohmann::json* metadata) {
  Checkpoint ckpt = LoadCheckpoint(dir);
  if (metadata != nullptr) *metadata = ckpt.metadata;
  try {
    return RaveModel(ckpt.config, std::move(ckpt.params));
  } catch (const UsageError& e) {
    throw DataError("invalid checkpoint config: " + std::string(e.what()));
  }
}

}  // namespace pitchrave::model
