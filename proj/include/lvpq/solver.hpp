#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvpq/catalog.hpp"
#include "lvpq/network.hpp"

namespace lvpq::solver {

using network::NetworkGraph;
using network::Scenario;

/// Balanced positive-sequence set m<0, m<-120, m<120.
Vec3 balanced_phasors(double magnitude);

struct SolveOptions {
  double tol = 1e-6;  // max |S_spec - V conj(I)| over buses and phases, pu
  int max_iter = 100;
};

struct PhasorSolution {
  std::vector<Vec3> v;         // per bus, pu
  std::vector<Vec3> i_branch;  // per branch, parent -> child, pu
  int iterations = 0;
  double max_mismatch = 0.0;
};

/// Three-phase backward/forward sweep for constant-power wye loads.
/// s_load holds per-bus, per-phase demand in pu (positive = consumption).
PhasorSolution solve_fundamental(const NetworkGraph& graph, std::span<const Vec3> s_load,
                                 const Vec3& slack, const SolveOptions& options = {});

/// Negative- over positive-sequence magnitude, percent. nullopt when the
/// positive sequence vanishes.
std::optional<double> vuf(const Vec3& v);

struct HarmonicComponent {
  int order = 3;
  double magnitude = 0.0;  // fraction of the fundamental current
  double phase_deg = 0.0;
};

struct HarmonicSpectrum {
  std::vector<HarmonicComponent> components;

  void validate() const;
  const HarmonicComponent* find(int order) const;
};

/// Fixture spectrum for a residential load mix (electronics, LED lighting,
/// small drives). Representative values, not measurements.
HarmonicSpectrum default_residential_spectrum();

inline const std::vector<int> kDefaultOrders = {3, 5, 7, 9, 11, 13};

/// One nonlinear load as seen by the harmonic solve.
struct HarmonicLoad {
  std::size_t bus = network::npos;
  Vec3 s_pu = Vec3::Zero();  // demand per phase at fundamental
  const HarmonicSpectrum* spectrum = nullptr;
};

struct HarmonicSolution {
  std::vector<int> orders;
  std::vector<std::vector<Vec3>> v;  // [order index][bus]
};

/// Branch impedance at harmonic order h: lines R + j h X, transformer h Z.
Mat3 harmonic_impedance(const network::Branch& branch, int order);

/// Decoupled harmonic penetration: per order, loads become current sources
/// I_h = m_h |I_1| < (h arg I_1 + phi_h) and the linear radial network is
/// solved with zero source EMF.
HarmonicSolution solve_harmonic(const NetworkGraph& graph, const PhasorSolution& fundamental,
                                std::span<const HarmonicLoad> loads, std::span<const int> orders);

/// 100 sqrt(sum |V_h|^2) / |V_1|; nullopt when |V_1| = 0.
std::optional<double> thdu(std::span<const cplx> harmonics, cplx fundamental);

struct Limits {
  double v_min = 0.9;
  double v_max = 1.1;
  double vuf_max = 2.0;  // %
  double thd_max = 8.0;  // %
};

enum ViolationBits : std::uint8_t {
  kUnderVoltage = 1,
  kOverVoltage = 2,
  kVufViolation = 4,
  kThdViolation = 8,
};

struct SolverConfig {
  SolveOptions fundamental;
  std::vector<int> orders = kDefaultOrders;
  HarmonicSpectrum spectrum = default_residential_spectrum();
  std::map<std::string, HarmonicSpectrum> spectrum_by_meter;
  Limits limits;
  double load_scale = 1.0;
};

struct PQCell {
  std::array<double, 3> vmag{};  // pu
  double vuf = 0.0;              // %, NaN when undefined
  std::array<double, 3> thd{};   // %, NaN when undefined
  std::uint8_t flags = 0;
};

/// Node-level scalar indicators used for change maps.
double mean_vmag(const PQCell& cell);
double mean_thd(const PQCell& cell);

struct PQSeries {
  std::vector<std::string> node_ids;
  std::size_t intervals = 0;
  std::vector<PQCell> cells;    // [t * nodes + node]
  std::vector<int> iterations;  // per interval

  std::size_t nodes() const { return node_ids.size(); }
  PQCell& at(std::size_t node, std::size_t t) { return cells[t * nodes() + node]; }
  const PQCell& at(std::size_t node, std::size_t t) const { return cells[t * nodes() + node]; }
  std::size_t violations() const;
};

/// PQ indicators for one interval of a scenario.
std::vector<PQCell> solve_interval(const Scenario& scenario, std::size_t t,
                                   const SolverConfig& config, int* iterations = nullptr);

/// Quasi-static series over all intervals, interval-parallel under OpenMP.
PQSeries run_timeseries(const Scenario& scenario, const SolverConfig& config);

/// Serial reference for run_timeseries.
PQSeries run_timeseries_serial(const Scenario& scenario, const SolverConfig& config);

}  // namespace lvpq::solver
