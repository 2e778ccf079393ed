#pragma once

#include <complex>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace lvpq {

using cplx = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;
using Vec3 = Eigen::Vector3cd;

/// Kron-reduced series impedance of a cable/line standard type, Ohm per km.
struct LineType {
  std::string name;
  Mat3 z_per_km = Mat3::Zero();
};

using LineCatalog = std::map<std::string, LineType>;

/// Builds the 3x3 phase matrix from positive/zero sequence impedances
/// (transposed-line approximation), optionally with a reduced a-c mutual.
Mat3 phase_matrix_from_sequence(cplx z1, cplx z0, double ac_mutual_scale = 1.0);

/// A small fixture catalog of typical LV cables and overhead bundles.
/// The numbers are representative manufacturer values, not measured data.
LineCatalog default_catalog();

}  // namespace lvpq
