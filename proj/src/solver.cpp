#include "lvpq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lvpq/error.hpp"

namespace lvpq::solver {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const cplx kA = std::polar(1.0, 120.0 * kDeg);  // a = 1<120
const cplx kA2 = kA * kA;

Vec3 per_phase_s(const Scenario& sc, std::size_t k, std::size_t t, double scale) {
  const auto& ld = sc.loads[k];
  const double s_base = sc.graph->base.s_phase_va();
  const double pw = sc.p(k, t) * scale;
  const cplx s{pw / s_base, network::reactive_power(pw, ld.pf) / s_base};
  Vec3 out = Vec3::Zero();
  switch (ld.phase) {
    case network::Phase::A: out(0) = s; break;
    case network::Phase::B: out(1) = s; break;
    case network::Phase::C: out(2) = s; break;
    case network::Phase::ABC: out.setConstant(s / 3.0); break;
  }
  return out;
}

void check_graph(const NetworkGraph& g) {
  if (g.tree.order.size() != g.buses.size()) {
    throw SolverError("graph has no radial tree over all buses; build it with assemble_graph");
  }
}

}  // namespace

Vec3 balanced_phasors(double magnitude) {
  return Vec3(std::polar(magnitude, 0.0), std::polar(magnitude, -120.0 * kDeg),
              std::polar(magnitude, 120.0 * kDeg));
}

PhasorSolution solve_fundamental(const NetworkGraph& graph, std::span<const Vec3> s_load,
                                 const Vec3& slack, const SolveOptions& options) {
  check_graph(graph);
  if (!(options.tol > 0.0)) throw SolverError("tolerance must be positive");
  const auto n = graph.buses.size();
  if (s_load.size() != n) throw SolverError("load table does not match bus count");

  std::vector<Mat3> z(graph.branches.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = network::z_to_pu(graph.branches[k].z_ohm, graph.base);
  }

  const auto& order = graph.tree.order;
  const auto& parent = graph.tree.parent;
  const auto& pbranch = graph.tree.parent_branch;

  PhasorSolution sol;
  sol.v.assign(n, slack);
  sol.i_branch.assign(graph.branches.size(), Vec3::Zero());
  std::vector<Vec3> inj(n), acc(n);
  double mismatch = 0.0;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    for (std::size_t b = 0; b < n; ++b) {
      for (int p = 0; p < 3; ++p) {
        const cplx s = s_load[b](p);
        if (s == cplx{}) {
          inj[b](p) = 0.0;
          continue;
        }
        const cplx v = sol.v[b](p);
        if (std::abs(v) < 1e-9) {
          throw SolverError("voltage collapse at bus '" + graph.buses[b].id + "'", mismatch);
        }
        inj[b](p) = std::conj(s / v);
      }
      acc[b] = inj[b];
    }
    // Backward sweep: accumulate subtree currents leaf -> root.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto b = *it;
      if (b == graph.source) continue;
      sol.i_branch[pbranch[b]] = acc[b];
      acc[parent[b]] += acc[b];
    }
    // Forward sweep: voltage drops root -> leaf.
    sol.v[graph.source] = slack;
    for (auto b : order) {
      if (b == graph.source) continue;
      sol.v[b] = sol.v[parent[b]] - z[pbranch[b]] * sol.i_branch[pbranch[b]];
    }

    mismatch = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      for (int p = 0; p < 3; ++p) {
        const cplx s_calc = sol.v[b](p) * std::conj(inj[b](p));
        mismatch = std::max(mismatch, std::abs(s_calc - s_load[b](p)));
      }
    }
    if (!std::isfinite(mismatch)) throw SolverError("sweep diverged", mismatch);
    sol.iterations = iter;
    sol.max_mismatch = mismatch;
    if (mismatch <= options.tol) return sol;
  }
  std::ostringstream os;
  os << "backward/forward sweep did not converge in " << options.max_iter
     << " iterations (last mismatch " << mismatch << " pu)";
  throw SolverError(os.str(), mismatch);
}

std::optional<double> vuf(const Vec3& v) {
  const cplx v1 = (v(0) + kA * v(1) + kA2 * v(2)) / 3.0;
  const cplx v2 = (v(0) + kA2 * v(1) + kA * v(2)) / 3.0;
  const double m1 = std::abs(v1);
  if (!(m1 > 0.0) || !std::isfinite(m1)) return std::nullopt;
  return 100.0 * std::abs(v2) / m1;
}

void HarmonicSpectrum::validate() const {
  std::vector<int> seen;
  for (const auto& c : components) {
    if (c.order < 2) throw SolverError("harmonic spectrum may not contain order < 2");
    if (!(c.magnitude >= 0.0 && c.magnitude < 1.0)) {
      throw SolverError("harmonic magnitude must lie in [0, 1)", 0.0, c.order);
    }
    if (std::find(seen.begin(), seen.end(), c.order) != seen.end()) {
      throw SolverError("duplicate harmonic order in spectrum", 0.0, c.order);
    }
    seen.push_back(c.order);
  }
}

const HarmonicComponent* HarmonicSpectrum::find(int order) const {
  for (const auto& c : components) {
    if (c.order == order) return &c;
  }
  return nullptr;
}

HarmonicSpectrum default_residential_spectrum() {
  return HarmonicSpectrum{{{3, 0.10, 180.0},
                           {5, 0.06, 0.0},
                           {7, 0.03, 180.0},
                           {9, 0.015, 0.0},
                           {11, 0.01, 180.0},
                           {13, 0.008, 0.0}}};
}

Mat3 harmonic_impedance(const network::Branch& branch, int order) {
  const double h = static_cast<double>(order);
  if (branch.kind == network::BranchKind::transformer) return branch.z_ohm * h;
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out(r, c) = cplx{branch.z_ohm(r, c).real(), h * branch.z_ohm(r, c).imag()};
    }
  }
  return out;
}

HarmonicSolution solve_harmonic(const NetworkGraph& graph, const PhasorSolution& fundamental,
                                std::span<const HarmonicLoad> loads, std::span<const int> orders) {
  check_graph(graph);
  const auto n = graph.buses.size();
  if (fundamental.v.size() != n) throw SolverError("fundamental solution does not match graph");
  const auto& order = graph.tree.order;
  const auto& parent = graph.tree.parent;
  const auto& pbranch = graph.tree.parent_branch;

  // Fundamental load currents are shared by every order.
  std::vector<Vec3> i1(loads.size(), Vec3::Zero());
  for (std::size_t k = 0; k < loads.size(); ++k) {
    const auto& ld = loads[k];
    if (ld.bus >= n) throw SolverError("harmonic load references a bad bus");
    for (int p = 0; p < 3; ++p) {
      if (ld.s_pu(p) == cplx{}) continue;
      i1[k](p) = std::conj(ld.s_pu(p) / fundamental.v[ld.bus](p));
    }
  }

  HarmonicSolution out;
  out.orders.assign(orders.begin(), orders.end());
  out.v.assign(orders.size(), std::vector<Vec3>(n, Vec3::Zero()));
  std::vector<Vec3> acc(n);
  std::vector<Mat3> z(graph.branches.size());

  for (std::size_t oi = 0; oi < orders.size(); ++oi) {
    const int h = orders[oi];
    if (h < 2) throw SolverError("harmonic orders must be >= 2", 0.0, h);
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = network::z_to_pu(harmonic_impedance(graph.branches[k], h), graph.base);
      const cplx det = z[k].determinant();
      if (!std::isfinite(std::abs(det)) || std::abs(det) < 1e-300) {
        throw SolverError("singular harmonic admittance at order " + std::to_string(h) +
                              " (branch '" + graph.branches[k].id + "')",
                          0.0, h);
      }
    }
    for (auto& a : acc) a.setZero();
    for (std::size_t k = 0; k < loads.size(); ++k) {
      const auto* spec = loads[k].spectrum;
      const auto* comp = spec ? spec->find(h) : nullptr;
      if (!comp || comp->magnitude == 0.0) continue;
      for (int p = 0; p < 3; ++p) {
        const cplx base = i1[k](p);
        if (base == cplx{}) continue;
        acc[loads[k].bus](p) += std::polar(comp->magnitude * std::abs(base),
                                           h * std::arg(base) + comp->phase_deg * kDeg);
      }
    }
    // Injections flow towards the source; the source bus is the zero-EMF reference.
    std::vector<Vec3> branch_i(graph.branches.size(), Vec3::Zero());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto b = *it;
      if (b == graph.source) continue;
      branch_i[pbranch[b]] = acc[b];
      acc[parent[b]] += acc[b];
    }
    auto& vh = out.v[oi];
    vh[graph.source].setZero();
    for (auto b : order) {
      if (b == graph.source) continue;
      vh[b] = vh[parent[b]] + z[pbranch[b]] * branch_i[pbranch[b]];
    }
  }
  return out;
}

std::optional<double> thdu(std::span<const cplx> harmonics, cplx fundamental) {
  const double v1 = std::abs(fundamental);
  if (!(v1 > 0.0)) return std::nullopt;
  double sum = 0.0;
  for (const auto& vh : harmonics) sum += std::norm(vh);
  return 100.0 * std::sqrt(sum) / v1;
}

double mean_vmag(const PQCell& c) { return (c.vmag[0] + c.vmag[1] + c.vmag[2]) / 3.0; }
double mean_thd(const PQCell& c) { return (c.thd[0] + c.thd[1] + c.thd[2]) / 3.0; }

std::size_t PQSeries::violations() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += (c.flags != 0);
  return n;
}

std::vector<PQCell> solve_interval(const Scenario& sc, std::size_t t, const SolverConfig& config,
                                   int* iterations) {
  const auto& g = *sc.graph;
  const auto table = sc.load_table(t, config.load_scale);
  const Vec3 slack = balanced_phasors(g.transformer.no_load_pu);
  const auto fund = solve_fundamental(g, table, slack, config.fundamental);
  if (iterations) *iterations = fund.iterations;

  std::vector<HarmonicLoad> hloads(sc.loads.size());
  for (std::size_t k = 0; k < sc.loads.size(); ++k) {
    hloads[k].bus = sc.loads[k].bus;
    hloads[k].s_pu = per_phase_s(sc, k, t, config.load_scale);
    auto it = config.spectrum_by_meter.find(sc.loads[k].meter_id);
    hloads[k].spectrum = it == config.spectrum_by_meter.end() ? &config.spectrum : &it->second;
  }
  const auto harm = solve_harmonic(g, fund, hloads, config.orders);

  std::vector<PQCell> cells(g.buses.size());
  std::vector<cplx> vh(config.orders.size());
  const auto& lim = config.limits;
  for (std::size_t b = 0; b < g.buses.size(); ++b) {
    auto& c = cells[b];
    const Vec3& v = fund.v[b];
    c.vuf = vuf(v).value_or(std::nan(""));
    for (int p = 0; p < 3; ++p) {
      c.vmag[p] = std::abs(v(p));
      for (std::size_t oi = 0; oi < vh.size(); ++oi) vh[oi] = harm.v[oi][b](p);
      c.thd[p] = thdu(vh, v(p)).value_or(std::nan(""));
      if (c.vmag[p] < lim.v_min) c.flags |= kUnderVoltage;
      if (c.vmag[p] > lim.v_max) c.flags |= kOverVoltage;
      if (c.thd[p] > lim.thd_max) c.flags |= kThdViolation;
    }
    if (c.vuf > lim.vuf_max) c.flags |= kVufViolation;
  }
  return cells;
}

namespace {

PQSeries prepare(const Scenario& sc, const SolverConfig& config) {
  if (!sc.graph) throw SolverError("scenario has no network");
  if (sc.intervals == 0 || sc.intervals % meter::kIntervalsPerDay != 0) {
    throw SolverError("scenario must cover a whole number of days of 96 intervals");
  }
  config.spectrum.validate();
  for (const auto& [id, s] : config.spectrum_by_meter) s.validate();
  PQSeries out;
  for (const auto& b : sc.graph->buses) out.node_ids.push_back(b.id);
  out.intervals = sc.intervals;
  out.cells.resize(sc.intervals * out.node_ids.size());
  out.iterations.assign(sc.intervals, 0);
  return out;
}

void store(PQSeries& out, std::size_t t, const std::vector<PQCell>& cells) {
  std::copy(cells.begin(), cells.end(),
            out.cells.begin() + static_cast<std::ptrdiff_t>(t * out.nodes()));
}

[[noreturn]] void fail(const std::vector<std::string>& errors) {
  std::ostringstream os;
  os << "non-convergent intervals:";
  std::size_t shown = 0;
  for (std::size_t t = 0; t < errors.size(); ++t) {
    if (errors[t].empty()) continue;
    if (shown++ < 20) os << ' ' << t;
  }
  if (shown > 20) os << " ... (" << shown << " total)";
  for (const auto& e : errors) {
    if (!e.empty()) {
      os << "; first error: " << e;
      break;
    }
  }
  throw SolverError(os.str());
}

}  // namespace

PQSeries run_timeseries_serial(const Scenario& sc, const SolverConfig& config) {
  auto out = prepare(sc, config);
  std::vector<std::string> errors(sc.intervals);
  bool failed = false;
  for (std::size_t t = 0; t < sc.intervals; ++t) {
    try {
      store(out, t, solve_interval(sc, t, config, &out.iterations[t]));
    } catch (const SolverError& e) {
      errors[t] = e.what();
      failed = true;
    }
  }
  if (failed) fail(errors);
  return out;
}

PQSeries run_timeseries(const Scenario& sc, const SolverConfig& config) {
  auto out = prepare(sc, config);
  std::vector<std::string> errors(sc.intervals);
  const auto n = static_cast<long long>(sc.intervals);
#pragma omp parallel for schedule(dynamic, 8)
  for (long long t = 0; t < n; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    try {
      store(out, ti, solve_interval(sc, ti, config, &out.iterations[ti]));
    } catch (const std::exception& e) {
      errors[ti] = e.what();
    }
  }
  if (std::any_of(errors.begin(), errors.end(), [](const auto& e) { return !e.empty(); })) {
    fail(errors);
  }
  return out;
}

}  // namespace lvpq::solver
