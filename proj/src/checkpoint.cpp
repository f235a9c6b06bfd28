#include "molt/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "molt/config_io.hpp"

namespace molt {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'L', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

void put_matrix(std::string& out, const Matrix& m) {
  for (size_t i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n, const char* what) {
    if (pos + n > buf.size()) {
      throw FormatError(FormatError::Kind::Truncated, std::string("checkpoint truncated while reading ") + what);
    }
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64(const char* what) {
    const uint64_t bits = u64(what);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

CheckpointMeta parse_header(Reader& r, const std::string& path) {
  r.need(4, "magic");
  if (std::memcmp(r.buf.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic, "'" + path + "': bad magic, expected MOLC");
  }
  r.pos = 4;
  const uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw FormatError(FormatError::Kind::BadVersion, "'" + path + "': unsupported version " + std::to_string(version));
  }
  CheckpointMeta meta;
  meta.config_hash = r.u64("config_hash");
  meta.adam_step = static_cast<long long>(r.u64("adam_step"));
  meta.epochs_completed = static_cast<int>(r.u32("epochs_completed"));
  const uint32_t config_len = r.u32("config_len");
  meta.config_text = r.bytes(config_len, "config text");
  if (config_hash(meta.config_text) != meta.config_hash) {
    throw FormatError(FormatError::Kind::ConfigHashMismatch,
                      "'" + path + "': stored config does not match its hash");
  }
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, const AdamState& state,
                     const std::string& config_text, int epochs_completed) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u64(buf, config_hash(config_text));
  put_u64(buf, static_cast<uint64_t>(state.step));
  put_u32(buf, static_cast<uint32_t>(epochs_completed));
  put_u32(buf, static_cast<uint32_t>(config_text.size()));
  buf += config_text;

  put_u32(buf, static_cast<uint32_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    const Param& p = store.at(i);
    put_u32(buf, static_cast<uint32_t>(p.name.size()));
    buf += p.name;
    put_u32(buf, static_cast<uint32_t>(p.value.rows()));
    put_u32(buf, static_cast<uint32_t>(p.value.cols()));
    buf.push_back(p.frozen ? 1 : 0);
    put_matrix(buf, p.value);
    put_matrix(buf, state.m[i]);
    put_matrix(buf, state.v[i]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf};
  return parse_header(r, path);
}

CheckpointMeta load_checkpoint(const std::string& path, ParamStore& store, AdamState& state) {
  const std::string buf = read_file(path);
  Reader r{buf};
  CheckpointMeta meta = parse_header(r, path);

  const uint32_t num_params = r.u32("param count");
  if (static_cast<int>(num_params) != store.size()) {
    throw FormatError(FormatError::Kind::Inconsistent,
                      "'" + path + "': checkpoint has " + std::to_string(num_params) + " parameters, model has " +
                          std::to_string(store.size()));
  }

  // Stage everything, then commit; a truncated tail must not leave the
  // store half-updated.
  std::vector<Matrix> values(num_params), ms(num_params), vs(num_params);
  for (uint32_t i = 0; i < num_params; ++i) {
    const uint32_t name_len = r.u32("param name length");
    const std::string name = r.bytes(name_len, "param name");
    const uint32_t rows = r.u32("param rows");
    const uint32_t cols = r.u32("param cols");
    const uint8_t frozen = static_cast<uint8_t>(r.bytes(1, "frozen flag")[0]);

    const Param& p = store.at(static_cast<int>(i));
    if (p.name != name || p.value.rows() != static_cast<int>(rows) || p.value.cols() != static_cast<int>(cols) ||
        p.frozen != (frozen != 0)) {
      throw FormatError(FormatError::Kind::Inconsistent,
                        "'" + path + "': parameter '" + name + "' does not match the model layout");
    }
    Matrix val(static_cast<int>(rows), static_cast<int>(cols));
    Matrix m = val, v = val;
    for (size_t k = 0; k < val.size(); ++k) val.data()[k] = r.f64("param values");
    for (size_t k = 0; k < m.size(); ++k) m.data()[k] = r.f64("adam m");
    for (size_t k = 0; k < v.size(); ++k) v.data()[k] = r.f64("adam v");
    values[i] = std::move(val);
    ms[i] = std::move(m);
    vs[i] = std::move(v);
  }
  if (r.pos != buf.size()) {
    throw FormatError(FormatError::Kind::Inconsistent, "'" + path + "': payload longer than declared counts");
  }

  for (uint32_t i = 0; i < num_params; ++i) {
    store.at(static_cast<int>(i)).value = std::move(values[i]);
    state.m[i] = std::move(ms[i]);
    state.v[i] = std::move(vs[i]);
  }
  state.step = meta.adam_step;
  return meta;
}

}  // namespace molt
