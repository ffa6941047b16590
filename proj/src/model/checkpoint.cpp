#include "courtformer/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "courtformer/errors.hpp"

namespace courtformer::model {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'M', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& source) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DataError(source + ": checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::size_t total_scalars(const nn::ParameterStore<float>& store) {
  std::size_t n = 0;
  for (const auto* p : store.all()) n += p->value.size();
  return n;
}

}  // namespace

void write_checkpoint(std::ostream& out, const SequenceModel<float>& model) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, model.config().kind == ModelKind::Transformer ? 0u : 1u);
  const std::string text = model.config().to_settings().to_text();
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(out, total_scalars(model.store()));
  for (const auto* p : model.store().all()) {
    for (float v : p->value.data()) put<float>(out, v);
  }
}

std::unique_ptr<SequenceModel<float>> read_checkpoint(std::istream& in, const std::string& source) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError(source + ": not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, source);
  if (version != kCheckpointVersion) {
    throw DataError(source + ": checkpoint format version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const auto kind = get<std::uint32_t>(in, source);
  const auto length = get<std::uint64_t>(in, source);
  if (length > (1u << 20)) throw DataError(source + ": implausible config length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw DataError(source + ": checkpoint is truncated");
  std::istringstream config_text(text);
  const auto settings = Settings::parse(config_text, source);
  const ModelConfig config = ModelConfig::from_settings(settings);
  if ((config.kind == ModelKind::Transformer ? 0u : 1u) != kind) {
    throw DataError(source + ": model kind field disagrees with the stored config");
  }
  auto model = make_model<float>(config);
  const auto count = get<std::uint64_t>(in, source);
  if (count != total_scalars(model->store())) {
    throw DataError(source + ": checkpoint holds " + std::to_string(count) + " values, config needs " +
                    std::to_string(total_scalars(model->store())));
  }
  for (auto* p : model->store().all()) {
    for (auto& v : p->value.data()) v = get<float>(in, source);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(source + ": trailing bytes after parameters");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const SequenceModel<float>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, model);
  if (!out) throw IoError("write failed for " + path.string());
}

std::unique_ptr<SequenceModel<float>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

std::unique_ptr<SequenceModel<float>> load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  auto model = load_checkpoint(path);
  if (!(model->config() == expected)) {
    throw ConfigError("checkpoint " + path.string() + " was trained with a different model config");
  }
  return model;
}

template <typename From, typename To>
void copy_parameters(const SequenceModel<From>& from, SequenceModel<To>& to) {
  if (!(from.config() == to.config())) throw ConfigError("cannot copy parameters between different configs");
  auto src = from.store().all();
  auto dst = to.store().all();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto s = src[i]->value.data();
    auto d = dst[i]->value.data();
    for (std::size_t j = 0; j < s.size(); ++j) d[j] = static_cast<To>(s[j]);
  }
}

template void copy_parameters<float, float>(const SequenceModel<float>&, SequenceModel<float>&);
template void copy_parameters<float, double>(const SequenceModel<float>&, SequenceModel<double>&);
template void copy_parameters<double, float>(const SequenceModel<double>&, SequenceModel<float>&);

}  // namespace courtformer::model
