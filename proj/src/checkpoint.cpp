#include "psrl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "psrl/check.hpp"

namespace psrl {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'R', 'L', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void check_little_endian() {
  uint32_t probe = 1;
  char c;
  std::memcpy(&c, &probe, 1);
  PSRL_CHECK(c == 1, "checkpoint format requires a little-endian host");
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_hash,
                     const std::vector<const ad::ParamT<float>*>& params) {
  check_little_endian();
  std::ofstream os(path, std::ios::binary);
  PSRL_CHECK(os.good(), "cannot open checkpoint for writing: " << path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(config_hash.size()));
  os.write(config_hash.data(), static_cast<std::streamsize>(config_hash.size()));
  write_u32(os, static_cast<uint32_t>(params.size()));
  for (const auto* p : params) {
    write_u32(os, static_cast<uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u32(os, 2);
    write_u64(os, static_cast<uint64_t>(p->value.rows()));
    write_u64(os, static_cast<uint64_t>(p->value.cols()));
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = p->value;
    os.write(reinterpret_cast<const char*>(rm.data()),
             static_cast<std::streamsize>(sizeof(float) * rm.size()));
  }
  PSRL_CHECK(os.good(), "checkpoint write failed: " << path);
}

std::string load_checkpoint(const std::string& path,
                            const std::vector<ad::ParamT<float>*>& params) {
  check_little_endian();
  std::ifstream is(path, std::ios::binary);
  PSRL_CHECK(is.good(), "cannot open checkpoint: " << path);
  char magic[8];
  is.read(magic, 8);
  PSRL_CHECK(is.good() && std::memcmp(magic, kMagic, 8) == 0,
             "bad checkpoint magic in " << path);
  uint32_t version = read_u32(is);
  PSRL_CHECK(version == kVersion, "unsupported checkpoint version " << version);
  uint32_t hash_len = read_u32(is);
  std::string hash(hash_len, '\0');
  is.read(hash.data(), hash_len);
  uint32_t count = read_u32(is);

  std::map<std::string, ad::ParamT<float>*> by_name;
  for (auto* p : params) by_name[p->name] = p;

  size_t filled = 0;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t ndim = read_u32(is);
    PSRL_CHECK(ndim == 2, "unexpected tensor rank " << ndim << " for " << name);
    uint64_t rows = read_u64(is);
    uint64_t cols = read_u64(is);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    is.read(reinterpret_cast<char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(float) * rm.size()));
    PSRL_CHECK(is.good(), "truncated checkpoint: " << path);
    auto it = by_name.find(name);
    if (it == by_name.end()) continue;  // extra entries are legal
    PSRL_CHECK(it->second->value.rows() == rm.rows() && it->second->value.cols() == rm.cols(),
               "shape mismatch for " << name);
    it->second->value = rm;
    ++filled;
  }
  PSRL_CHECK(filled == by_name.size(), "checkpoint missing " << (by_name.size() - filled)
                                                             << " parameter(s)");
  return hash;
}

}  // namespace psrl
