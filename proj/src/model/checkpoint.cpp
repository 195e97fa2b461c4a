#include "qgen/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace qgen::model {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v & 0xffffffffull));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& in) {
  uint64_t lo = get_u32(in);
  uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

void put_f32(std::ostream& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in) {
  uint32_t bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::string& magic,
                      const nlohmann::json& header, const nn::ParameterSet& params) {
  if (magic.size() != 4) throw DataError("checkpoint: magic must be 4 bytes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(magic.data(), 4);
  put_u32(out, kCheckpointVersion);

  nlohmann::json full = header;
  nlohmann::json flags = nlohmann::json::object();
  for (const auto& [name, t] : params.tensors) flags[name] = params.is_trainable(name);
  full["trainable"] = flags;
  const std::string hdr = full.dump();
  put_u64(out, hdr.size());
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

  put_u32(out, static_cast<uint32_t>(params.tensors.size()));
  for (const auto& [name, t] : params.tensors) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double x : t.v) put_f32(out, static_cast<float>(x));
  }
  if (!out) throw DataError("checkpoint: write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path, const std::string& expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  Checkpoint ck;
  char magic[5] = {0};
  in.read(magic, 4);
  if (!in) throw DataError("checkpoint: truncated file: " + path);
  ck.magic = magic;
  if (!expected_magic.empty() && ck.magic != expected_magic)
    throw DataError("checkpoint " + path + ": magic '" + ck.magic + "' does not match expected '" +
                    expected_magic + "'");
  ck.version = get_u32(in);
  if (ck.version != kCheckpointVersion)
    throw DataError("checkpoint " + path + ": unsupported format version " + std::to_string(ck.version));
  const uint64_t hlen = get_u64(in);
  std::string hdr(hlen, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw DataError("checkpoint: truncated header: " + path);
  try {
    ck.header = nlohmann::json::parse(hdr);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header JSON: ") + e.what());
  }

  const uint32_t count = get_u32(in);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t nlen = get_u32(in);
    std::string name(nlen, '\0');
    in.read(name.data(), nlen);
    const uint32_t ndim = get_u32(in);
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(get_u32(in));
    nn::Tensor t = nn::Tensor::zeros(shape);
    for (double& x : t.v) x = static_cast<double>(get_f32(in));
    if (!in) throw DataError("checkpoint: truncated tensor data: " + path);
    bool trainable = true;
    if (ck.header.contains("trainable") && ck.header["trainable"].contains(name))
      trainable = ck.header["trainable"][name].get<bool>();
    ck.params.add(name, std::move(t), trainable);
  }
  return ck;
}

}  // namespace qgen::model
