#include "molflow/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace molflow {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'L', 'F', 'C', 'K', 'P', 'T'};

void wr_u32(std::ostream& os, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}
void wr_u64(std::ostream& os, uint64_t v) {
  wr_u32(os, static_cast<uint32_t>(v & 0xffffffffu));
  wr_u32(os, static_cast<uint32_t>(v >> 32));
}
uint32_t rd_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
uint64_t rd_u64(std::istream& is) {
  const uint64_t lo = rd_u32(is);
  const uint64_t hi = rd_u32(is);
  return lo | (hi << 32);
}
void wr_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  wr_u64(os, bits);
}
double rd_f64(std::istream& is) {
  const uint64_t bits = rd_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

nlohmann::json slice_table(const ParamVector& params) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : params.slices())
    arr.push_back({{"name", s.name}, {"offset", s.offset}, {"len", s.len}});
  return arr;
}

nlohmann::json read_header_json(std::istream& is, const std::string& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint32_t version = rd_u32(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: version mismatch in " + path + " (found " +
                             std::to_string(version) + ", expected " +
                             std::to_string(kCheckpointVersion) + ")");
  const uint64_t jlen = rd_u64(is);
  std::string jtext(jlen, '\0');
  is.read(jtext.data(), static_cast<std::streamsize>(jlen));
  if (!is) throw std::runtime_error("checkpoint: truncated header in " + path);
  return nlohmann::json::parse(jtext);
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamVector& params) {
  nlohmann::json j = {{"kind", header.kind},
                      {"step", header.step},
                      {"config", header.config},
                      {"param_count", params.size()},
                      {"slices", slice_table(params)}};
  const std::string jtext = j.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 8);
  wr_u32(os, kCheckpointVersion);
  wr_u64(os, jtext.size());
  os.write(jtext.data(), static_cast<std::streamsize>(jtext.size()));
  for (double v : params.values()) wr_f64(os, v);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointHeader load_checkpoint_header(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  const nlohmann::json j = read_header_json(is, path);
  return {j.at("kind").get<std::string>(), j.at("step").get<int64_t>(), j.at("config")};
}

CheckpointHeader load_checkpoint(const std::string& path, ParamVector& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  const nlohmann::json j = read_header_json(is, path);
  if (j.at("param_count").get<int>() != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  if (j.at("slices") != slice_table(params))
    throw std::runtime_error("checkpoint: slice table mismatch in " + path);
  for (double& v : params.values()) v = rd_f64(is);
  if (!is) throw std::runtime_error("checkpoint: truncated parameter payload in " + path);
  return {j.at("kind").get<std::string>(), j.at("step").get<int64_t>(), j.at("config")};
}

}  // namespace molflow
