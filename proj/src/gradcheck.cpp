#include "molt/gradcheck.hpp"

#include <cmath>
#include <vector>

namespace molt {

double finite_diff_check(ParamStore& store, const std::function<double(Tape*)>& forward, double h) {
  store.zero_grads();
  {
    Tape tape(&store);
    forward(&tape);
  }
  // Snapshot analytic grads before perturbation runs overwrite anything.
  std::vector<Matrix> analytic(store.size());
  for (int p = 0; p < store.size(); ++p) analytic[p] = store.at(p).grad;

  double max_rel = 0.0;
  for (int p = 0; p < store.size(); ++p) {
    Param& param = store.at(p);
    if (param.frozen) continue;
    for (size_t k = 0; k < param.value.size(); ++k) {
      const double saved = param.value.data()[k];
      param.value.data()[k] = saved + h;
      const double up = forward(nullptr);
      param.value.data()[k] = saved - h;
      const double dn = forward(nullptr);
      param.value.data()[k] = saved;

      const double numeric = (up - dn) / (2.0 * h);
      const double rel = std::fabs(analytic[p].data()[k] - numeric) / std::max(1.0, std::fabs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  store.zero_grads();
  return max_rel;
}

}  // namespace molt
