#include "molt/dataset.hpp"

#include <cmath>

#include "molt/rng.hpp"

namespace molt {

namespace {

// All feature values pass through float so datasets survive the 32-bit
// on-disk format bit-exactly.
double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Matrix draw_centers(int count, int dim, Rng& rng) {
  Matrix m(count, dim);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = rng.next_gaussian();
  return m;
}

Matrix draw_token_offsets(int tokens, int dim, Rng& rng) {
  Matrix m(tokens, dim);
  for (int i = 0; i < tokens; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = 0.5 * rng.next_gaussian();
  return m;
}

Matrix make_features(const Matrix& centers, int cluster, const Matrix& offsets, double noise, Rng& rng) {
  const int tokens = offsets.rows(), dim = offsets.cols();
  Matrix f(tokens, dim);
  for (int t = 0; t < tokens; ++t)
    for (int j = 0; j < dim; ++j) f(t, j) = as_f32(centers(cluster, j) + offsets(t, j) + noise * rng.next_gaussian());
  return f;
}

}  // namespace

// Block-shifted pairing bijection on [0, clusters): within block b of size c
// it cyclically shifts by b, which makes psi(z) = (z + pair_partner(z)) mod c
// hit every label residue equally often.
int pair_partner(int z, int c) {
  const int block = z / c;
  const int r = z % c;
  return block * c + (r + block) % c;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const int c = spec.num_classes;
  if (c < 2) throw ContractError("generate_synthetic: num_classes must be >= 2");
  if (spec.num_samples < 1) throw ContractError("generate_synthetic: num_samples must be >= 1");
  if (spec.redundancy < 0.0 || spec.redundancy > 1.0) {
    throw ContractError("generate_synthetic: redundancy must lie in [0, 1]");
  }

  int clusters = spec.clusters_per_modality > 0 ? spec.clusters_per_modality : 2 * c;
  // The pairing rule wraps cluster ids mod `clusters`, which must not
  // disturb labels mod c, so the cluster count must be a multiple of c; for
  // even c the residues of psi only balance over an even number of blocks.
  if (clusters % c != 0 || (c % 2 == 0 && (clusters / c) % 2 != 0)) {
    throw ContractError("generate_synthetic: clusters_per_modality must be a multiple of num_classes" +
                        std::string(c % 2 == 0 ? " with an even block count" : ""));
  }

  Rng world = Rng::stream(spec.world_seed, fnv1a_str("synthetic.world"));
  const Matrix image_centers = draw_centers(clusters, spec.image_raw_dim, world);
  const Matrix text_centers = draw_centers(clusters, spec.text_raw_dim, world);
  const Matrix image_offsets = draw_token_offsets(spec.image_tokens, spec.image_raw_dim, world);
  const Matrix text_offsets = draw_token_offsets(spec.text_tokens, spec.text_raw_dim, world);

  // Bucket image clusters by psi(z) = (z + partner(z)) mod c; the pairing
  // bijection makes every bucket the same size.
  std::vector<std::vector<int>> psi_bucket(c);
  for (int z = 0; z < clusters; ++z) psi_bucket[(z + pair_partner(z, c)) % c].push_back(z);

  Rng rng = Rng::stream(spec.seed, fnv1a_str("synthetic.samples"));
  Dataset ds;
  ds.info.num_classes = c;
  ds.info.multi_label = spec.multi_label;
  ds.info.image_tokens = spec.image_tokens;
  ds.info.image_raw_dim = spec.image_raw_dim;
  ds.info.text_tokens = spec.text_tokens;
  ds.info.text_raw_dim = spec.text_raw_dim;
  ds.samples.reserve(spec.num_samples);

  for (int n = 0; n < spec.num_samples; ++n) {
    const int y = n % c;  // balanced within +-1 by construction
    int ci, ct;
    if (spec.cross_modal) {
      // label = (ci + ct) mod c with ct = partner(ci) + delta. With
      // probability `redundancy` the offset delta is 0 (the dominant
      // pairing), else 1; a modality alone therefore narrows the label to
      // two candidates weighted redundancy : 1-redundancy, never pins it.
      const int delta = rng.next_unit() < spec.redundancy ? 0 : 1;
      const auto& bucket = psi_bucket[((y - delta) % c + c) % c];
      ci = bucket[static_cast<size_t>(rng.next_below(bucket.size()))];
      ct = (pair_partner(ci, c) + delta) % clusters;
    } else {
      ci = y + c * static_cast<int>(rng.next_below(clusters / c));
      ct = y + c * static_cast<int>(rng.next_below(clusters / c));
    }

    Sample s;
    s.image_features = make_features(image_centers, ci, image_offsets, spec.feature_noise, rng);
    s.text_features = make_features(text_centers, ct, text_offsets, spec.feature_noise, rng);
    s.label = y;
    if (spec.multi_label) {
      s.label_bits.assign(c, 0);
      s.label_bits[y] = 1;
      s.label_bits[ci % c] = 1;
    }
    ds.samples.push_back(std::move(s));
  }

  // Decorrelate sample order from the label sequence.
  Rng order = Rng::stream(spec.seed, fnv1a_str("synthetic.order"));
  order.shuffle(ds.samples);
  return ds;
}

}  // namespace molt
