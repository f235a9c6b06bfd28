#include "molt/embedding_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "molt/encoder.hpp"

namespace molt {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'L', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  bool eof() const { return pos >= buf.size(); }
  void need(size_t n, const char* what) {
    if (pos + n > buf.size()) {
      throw FormatError(FormatError::Kind::Truncated,
                        std::string("embedding file truncated while reading ") + what);
    }
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    const uint32_t bits = u32(what);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<uint8_t>(buf[pos++]);
  }
};

struct ModalityFile {
  uint32_t num_samples = 0, num_layers = 0, tokens = 0, dim = 0, label_arity = 0;
  std::vector<int> labels;                        // arity == 1
  std::vector<std::vector<uint8_t>> label_bits;   // arity > 1
  std::vector<std::vector<Matrix>> layers;        // [sample][layer]
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

void write_file(const std::string& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

ModalityFile parse(const std::string& buf, const std::string& path) {
  Reader r{buf};
  r.need(4, "magic");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic, "'" + path + "': bad magic, expected MOL1");
  }
  r.pos = 4;
  const uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw FormatError(FormatError::Kind::BadVersion,
                      "'" + path + "': unsupported version " + std::to_string(version));
  }
  ModalityFile f;
  f.num_samples = r.u32("num_samples");
  f.num_layers = r.u32("num_layers");
  f.tokens = r.u32("N");
  f.dim = r.u32("d");
  f.label_arity = r.u32("label_arity");
  if (f.num_layers == 0 || f.tokens == 0 || f.dim == 0 || f.label_arity == 0) {
    throw FormatError(FormatError::Kind::Inconsistent, "'" + path + "': zero-sized dimension in header");
  }

  f.layers.reserve(f.num_samples);
  for (uint32_t s = 0; s < f.num_samples; ++s) {
    if (f.label_arity == 1) {
      f.labels.push_back(static_cast<int>(r.u32("label")));
    } else {
      std::vector<uint8_t> bits(f.label_arity);
      for (uint32_t b = 0; b < f.label_arity; ++b) {
        const uint8_t v = r.u8("label bits");
        if (v > 1) {
          throw FormatError(FormatError::Kind::Inconsistent, "'" + path + "': label bit not 0/1");
        }
        bits[b] = v;
      }
      f.label_bits.push_back(std::move(bits));
    }
    std::vector<Matrix> sample_layers;
    sample_layers.reserve(f.num_layers);
    for (uint32_t l = 0; l < f.num_layers; ++l) {
      Matrix m(static_cast<int>(f.tokens), static_cast<int>(f.dim));
      for (uint32_t i = 0; i < f.tokens * f.dim; ++i) m.data()[i] = static_cast<double>(r.f32("features"));
      if (!m.all_finite()) {
        throw FormatError(FormatError::Kind::Inconsistent, "'" + path + "': non-finite feature values");
      }
      sample_layers.push_back(std::move(m));
    }
    f.layers.push_back(std::move(sample_layers));
  }
  if (!r.eof()) {
    throw FormatError(FormatError::Kind::Inconsistent,
                      "'" + path + "': payload longer than declared counts");
  }
  return f;
}

}  // namespace

void save_embedding_file(const Dataset& ds, Modality modality, const std::string& path) {
  const bool image = modality == Modality::Image;
  const bool precomputed = ds.info.precomputed_layers > 0;
  const uint32_t num_layers = precomputed ? static_cast<uint32_t>(ds.info.precomputed_layers) : 1u;
  const uint32_t tokens = static_cast<uint32_t>(image ? ds.info.image_tokens : ds.info.text_tokens);
  const uint32_t dim = precomputed ? static_cast<uint32_t>(image ? ds.info.image_layer_dim : ds.info.text_layer_dim)
                                   : static_cast<uint32_t>(image ? ds.info.image_raw_dim : ds.info.text_raw_dim);
  const uint32_t arity = ds.info.multi_label ? static_cast<uint32_t>(ds.info.num_classes) : 1u;

  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<uint32_t>(ds.samples.size()));
  put_u32(buf, num_layers);
  put_u32(buf, tokens);
  put_u32(buf, dim);
  put_u32(buf, arity);

  for (const Sample& s : ds.samples) {
    if (arity == 1) {
      put_u32(buf, static_cast<uint32_t>(s.label));
    } else {
      for (uint32_t b = 0; b < arity; ++b) buf.push_back(static_cast<char>(s.label_bits[b]));
    }
    for (uint32_t l = 0; l < num_layers; ++l) {
      const Matrix& m = precomputed ? (image ? s.image_layers[l] : s.text_layers[l])
                                    : (image ? s.image_features : s.text_features);
      if (m.rows() != static_cast<int>(tokens) || m.cols() != static_cast<int>(dim)) {
        throw ContractError("save_embedding_file: sample feature shape " + m.shape_str() + " does not match dataset");
      }
      for (size_t i = 0; i < m.size(); ++i) put_f32(buf, static_cast<float>(m.data()[i]));
    }
  }
  write_file(path, buf);
}

void save_embeddings(const Dataset& ds, const std::string& dir) {
  save_embedding_file(ds, Modality::Image, dir + "/image.mol1");
  save_embedding_file(ds, Modality::Text, dir + "/text.mol1");
}

Dataset load_embeddings(const std::string& dir) {
  const std::string ipath = dir + "/image.mol1";
  const std::string tpath = dir + "/text.mol1";
  ModalityFile img = parse(read_file(ipath), ipath);
  ModalityFile txt = parse(read_file(tpath), tpath);

  if (img.num_samples != txt.num_samples || img.label_arity != txt.label_arity ||
      img.num_layers != txt.num_layers) {
    throw FormatError(FormatError::Kind::Inconsistent, "image/text embedding files disagree on counts");
  }

  Dataset ds;
  ds.info.multi_label = img.label_arity > 1;
  ds.info.image_tokens = static_cast<int>(img.tokens);
  ds.info.text_tokens = static_cast<int>(txt.tokens);
  if (img.num_layers == 1) {
    ds.info.image_raw_dim = static_cast<int>(img.dim);
    ds.info.text_raw_dim = static_cast<int>(txt.dim);
  } else {
    ds.info.precomputed_layers = static_cast<int>(img.num_layers);
    ds.info.image_layer_dim = static_cast<int>(img.dim);
    ds.info.text_layer_dim = static_cast<int>(txt.dim);
    ds.info.image_raw_dim = 0;
    ds.info.text_raw_dim = 0;
  }

  int max_label = 0;
  for (uint32_t s = 0; s < img.num_samples; ++s) {
    Sample sample;
    if (img.label_arity == 1) {
      if (img.labels[s] != txt.labels[s]) {
        throw FormatError(FormatError::Kind::Inconsistent, "image/text embedding files disagree on labels");
      }
      sample.label = img.labels[s];
      max_label = std::max(max_label, sample.label);
    } else {
      if (img.label_bits[s] != txt.label_bits[s]) {
        throw FormatError(FormatError::Kind::Inconsistent, "image/text embedding files disagree on labels");
      }
      sample.label_bits = img.label_bits[s];
      for (size_t b = 0; b < sample.label_bits.size(); ++b)
        if (sample.label_bits[b]) sample.label = static_cast<int>(b);  // first active bit, for bookkeeping
    }
    if (img.num_layers == 1) {
      sample.image_features = std::move(img.layers[s][0]);
      sample.text_features = std::move(txt.layers[s][0]);
    } else {
      sample.image_layers = std::move(img.layers[s]);
      sample.text_layers = std::move(txt.layers[s]);
    }
    ds.samples.push_back(std::move(sample));
  }
  ds.info.num_classes = ds.info.multi_label ? static_cast<int>(img.label_arity) : max_label + 1;
  return ds;
}

}  // namespace molt
