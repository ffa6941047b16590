#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include "courtformer/model/sequence_model.hpp"

namespace courtformer::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: 8-byte magic, u32 version, u32 model kind, u64 config length, the
// config as `key = value` text, u64 scalar count, then every parameter in
// declaration order as little-endian float32.
void write_checkpoint(std::ostream& out, const SequenceModel<float>& model);
std::unique_ptr<SequenceModel<float>> read_checkpoint(std::istream& in, const std::string& source);

void save_checkpoint(const std::filesystem::path& path, const SequenceModel<float>& model);
std::unique_ptr<SequenceModel<float>> load_checkpoint(const std::filesystem::path& path);
// Throws ConfigError when the stored config differs from `expected`.
std::unique_ptr<SequenceModel<float>> load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

// Copies parameter values between models of identical config.
template <typename From, typename To>
void copy_parameters(const SequenceModel<From>& from, SequenceModel<To>& to);

}  // namespace courtformer::model
