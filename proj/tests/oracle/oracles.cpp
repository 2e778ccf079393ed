#include "oracles.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "lvpq/catalog.hpp"

namespace oracle {

using lvpq::cplx;
using lvpq::Mat3;
using lvpq::network::NetworkGraph;

namespace {

Eigen::MatrixXcd admittance(const NetworkGraph& g, const std::vector<Mat3>& z_pu) {
  const auto n = static_cast<Eigen::Index>(g.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(3 * n, 3 * n);
  for (std::size_t k = 0; k < g.branches.size(); ++k) {
    const Mat3 yb = z_pu[k].inverse();
    const auto i = static_cast<Eigen::Index>(3 * g.branches[k].from);
    const auto j = static_cast<Eigen::Index>(3 * g.branches[k].to);
    y.block<3, 3>(i, i) += yb;
    y.block<3, 3>(j, j) += yb;
    y.block<3, 3>(i, j) -= yb;
    y.block<3, 3>(j, i) -= yb;
  }
  return y;
}

// Free-bus index list: every bus but the source, three rows each.
std::vector<Eigen::Index> free_rows(const NetworkGraph& g) {
  std::vector<Eigen::Index> rows;
  for (std::size_t b = 0; b < g.buses.size(); ++b) {
    if (b == g.source) continue;
    for (int p = 0; p < 3; ++p) rows.push_back(static_cast<Eigen::Index>(3 * b + p));
  }
  return rows;
}

std::vector<Mat3> fundamental_z(const NetworkGraph& g) {
  std::vector<Mat3> z;
  for (const auto& br : g.branches) z.push_back(lvpq::network::z_to_pu(br.z_ohm, g.base));
  return z;
}

}  // namespace

std::vector<Vec3> dense_nodal_solve(const NetworkGraph& g, std::span<const Vec3> s_load,
                                    const Vec3& slack, double tol, int max_iter) {
  const auto y = admittance(g, fundamental_z(g));
  const auto rows = free_rows(g);
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd yff(m, m);
  Eigen::MatrixXcd yfs(m, 3);
  const auto s0 = static_cast<Eigen::Index>(3 * g.source);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) yff(r, c) = y(rows[r], rows[c]);
    for (int p = 0; p < 3; ++p) yfs(r, p) = y(rows[r], s0 + p);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(yff);
  const Eigen::VectorXcd vs = slack;

  Eigen::VectorXcd v(m);
  for (Eigen::Index r = 0; r < m; ++r) v(r) = slack(rows[r] % 3);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXcd rhs = -(yfs * vs);
    for (Eigen::Index r = 0; r < m; ++r) {
      const cplx s = s_load[rows[r] / 3](rows[r] % 3);
      if (s != cplx{}) rhs(r) -= std::conj(s / v(r));
    }
    Eigen::VectorXcd next = lu.solve(rhs);
    const double step = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (step < tol) break;
  }
  std::vector<Vec3> out(g.buses.size(), slack);
  for (Eigen::Index r = 0; r < m; ++r) out[rows[r] / 3](rows[r] % 3) = v(r);
  return out;
}

std::vector<Vec3> dense_linear_solve(const NetworkGraph& g, std::span<const Vec3> injection,
                                     const std::vector<Mat3>& z_pu) {
  const auto y = admittance(g, z_pu);
  const auto rows = free_rows(g);
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd yff(m, m);
  Eigen::VectorXcd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) yff(r, c) = y(rows[r], rows[c]);
    rhs(r) = injection[rows[r] / 3](rows[r] % 3);
  }
  Eigen::VectorXcd v = yff.fullPivLu().solve(rhs);
  std::vector<Vec3> out(g.buses.size(), Vec3::Zero());
  for (Eigen::Index r = 0; r < m; ++r) out[rows[r] / 3](rows[r] % 3) = v(r);
  return out;
}

std::optional<Window> scan_windows(std::span<const double> demand, std::size_t T,
                                   const std::vector<bool>& blocked) {
  std::optional<Window> best;
  if (demand.size() < 8) return best;
  const long long t0 = static_cast<long long>(T);
  for (std::size_t t = 0; t + 8 <= demand.size(); ++t) {
    const long long ti = static_cast<long long>(t);
    const bool before = ti >= t0 - 32 && ti <= t0 - 8;
    const bool after = ti >= t0 + 1 && ti <= t0 + 24;
    if (!before && !after) continue;
    bool free = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      if (!blocked.empty() && blocked[t + i]) free = false;
      sum += demand[t + i];
    }
    if (!free) continue;
    if (!best || sum < best->sum) best = Window{t, sum};
  }
  return best;
}

NetworkGraph random_radial(std::mt19937_64& rng, std::size_t n) {
  using namespace lvpq::network;
  const auto catalog = lvpq::default_catalog();
  std::vector<std::string> types;
  for (const auto& [k, v] : catalog) types.push_back(k);
  std::uniform_real_distribution<double> len(20.0, 200.0);

  std::vector<Bus> buses;
  buses.push_back(Bus{"src", {0, 0}, lvpq::gis::Role::substation, true, {}});
  for (std::size_t i = 1; i < n; ++i) {
    buses.push_back(
        Bus{"n" + std::to_string(i), {double(i), 0.0}, lvpq::gis::Role::consumer, false, {}});
  }
  std::vector<Branch> branches;
  for (std::size_t i = 1; i < n; ++i) {
    Branch br;
    br.id = "b" + std::to_string(i);
    br.from = rng() % i;  // any earlier bus keeps the graph a tree
    br.to = i;
    br.length_m = len(rng);
    br.standard_type = types[rng() % types.size()];
    br.z_ohm = catalog.at(br.standard_type).z_per_km * (br.length_m / 1000.0);
    branches.push_back(br);
  }
  return assemble_graph(std::move(buses), std::move(branches), TransformerModel{}, BaseValues{});
}

std::vector<Vec3> random_loads(std::mt19937_64& rng, const NetworkGraph& g, double max_kw) {
  std::uniform_real_distribution<double> kw(0.0, max_kw);
  std::uniform_real_distribution<double> pf(0.95, 1.0);
  std::vector<Vec3> s(g.buses.size(), Vec3::Zero());
  const double base = g.base.s_phase_va();
  for (std::size_t b = 0; b < g.buses.size(); ++b) {
    if (b == g.source) continue;
    for (int p = 0; p < 3; ++p) {
      const double pw = kw(rng) * 1e3;
      s[b](p) = cplx{pw, lvpq::network::reactive_power(pw, pf(rng))} / base;
    }
  }
  return s;
}

}  // namespace oracle
