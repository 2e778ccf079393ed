// Serial reference vs OpenMP kernel timings on the synthetic feeder.
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "lvpq/fixtures.hpp"
#include "lvpq/gis.hpp"
#include "lvpq/meter.hpp"
#include "lvpq/meter_io.hpp"
#include "lvpq/network.hpp"
#include "lvpq/solver.hpp"
#include "lvpq/solver_io.hpp"

#ifdef LVPQ_HAVE_OPENMP
#include <omp.h>
#endif

using namespace lvpq;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    best = std::min(best, dt);
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::cout << name << ": serial " << serial << " s, parallel " << parallel << " s, speedup "
            << serial / parallel << "x, outputs " << (same ? "identical" : "DIFFER") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
#ifdef LVPQ_HAVE_OPENMP
  std::cout << "OpenMP threads: " << omp_get_max_threads() << '\n';
#else
  std::cout << "built without OpenMP; both paths run serially\n";
#endif

  const auto raw = fixtures::synthetic_feeder();
  const auto catalog = default_catalog();
  const auto weeks = fixtures::synthetic_meter_weeks(1);

  // Meter cleaning: per-meter parallel vs serial on defective data.
  std::istringstream csv(fixtures::defective_meter_csv(weeks.pre, {20, 10, 30, 3}, 5));
  const auto raws = meter::read_meter_csv(csv);
  const auto tl = meter::infer_timeline(raws);
  std::vector<meter::MeterSeries> dirty;
  for (const auto& r : raws) dirty.push_back(meter::align(r, tl));
  const meter::CleaningConfig ccfg;
  meter::CleaningResult cs, cp;
  const double c_ser = best_of(repeats, [&] { cs = meter::clean_meters_serial(dirty, ccfg); });
  const double c_par = best_of(repeats, [&] { cp = meter::clean_meters(dirty, ccfg); });
  report("clean_meters (43 meters x 672)", c_ser, c_par,
         meter::meter_csv(cs.series) == meter::meter_csv(cp.series));

  // Polyline splitting.
  std::vector<gis::LineSegment> ss, sp;
  const double g_ser = best_of(repeats * 20, [&] {
    ss = gis::split_polylines_serial(raw.lines, raw.points, 0.01);
  });
  const double g_par = best_of(repeats * 20, [&] {
    sp = gis::split_polylines(raw.lines, raw.points, 0.01);
  });
  report("split_polylines", g_ser, g_par, ss.size() == sp.size());

  // Quasi-static week: interval-parallel vs serial.
  const auto rep = gis::repair(raw.points, raw.lines, catalog);
  auto graph = std::make_shared<const network::NetworkGraph>(
      network::build_graph(rep.layers.points, rep.layers.segments, catalog));
  const auto sc = network::attach_loads(graph, weeks.pre, {}, {}, 1);
  const solver::SolverConfig scfg;
  solver::PQSeries ps, pp;
  const double t_ser = best_of(repeats, [&] { ps = solver::run_timeseries_serial(sc, scfg); });
  const double t_par = best_of(repeats, [&] { pp = solver::run_timeseries(sc, scfg); });
  report("run_timeseries (66 buses x 672 intervals, 6 orders)", t_ser, t_par,
         solver::pq_csv(ps) == solver::pq_csv(pp));
  return 0;
}
