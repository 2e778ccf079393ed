#include "lvpq/catalog.hpp"

namespace lvpq {

Mat3 phase_matrix_from_sequence(cplx z1, cplx z0, double ac_mutual_scale) {
  const cplx self = (z0 + 2.0 * z1) / 3.0;
  const cplx mutual = (z0 - z1) / 3.0;
  Mat3 z;
  z << self, mutual, mutual * ac_mutual_scale,
       mutual, self, mutual,
       mutual * ac_mutual_scale, mutual, self;
  return z;
}

LineCatalog default_catalog() {
  LineCatalog cat;
  auto add = [&](const std::string& name, cplx z1, cplx z0) {
    cat[name] = LineType{name, phase_matrix_from_sequence(z1, z0, 0.95)};
  };
  // Underground Al cables (XLPE/PVC, 4-core) and an overhead aerial bundle.
  add("NAYY 4x150", {0.206, 0.080}, {0.824, 0.320});
  add("NAYY 4x95", {0.320, 0.082}, {1.280, 0.330});
  add("NAYY 4x70", {0.443, 0.082}, {1.772, 0.330});
  add("NAYY 4x35", {0.868, 0.086}, {3.472, 0.344});
  add("X00/0-A 3x70+71.5", {0.443, 0.300}, {1.500, 1.200});
  return cat;
}

}  // namespace lvpq
