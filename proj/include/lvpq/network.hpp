#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lvpq/catalog.hpp"
#include "lvpq/gis.hpp"
#include "lvpq/meter.hpp"

namespace lvpq::network {

struct BaseValues {
  double s_va = 400e3;  // three-phase base power
  double v_ll = 400.0;  // line-to-line base voltage

  double z_ohm() const { return v_ll * v_ll / s_va; }
  double s_phase_va() const { return s_va / 3.0; }
};

Mat3 z_to_pu(const Mat3& z_ohm, const BaseValues& base);
Mat3 z_from_pu(const Mat3& z_pu, const BaseValues& base);

/// MV/LV transformer, modelled as a balanced series impedance referred to
/// the LV side behind an ideal balanced source.
struct TransformerModel {
  double rating_va = 400e3;
  double v_primary = 20e3;
  double v_secondary = 400.0;
  double uk = 0.04;  // short-circuit voltage, pu on own rating
  double ur = 0.01;  // resistive part of uk
  double no_load_pu = 1.0;

  void validate() const;
  cplx z_pu_own() const;
  /// Per-phase short-circuit impedance in Ohm on the LV side.
  cplx z_ohm_lv() const;
};

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct Bus {
  std::string id;
  gis::XY pos;
  gis::Role role = gis::Role::connection_point;
  bool is_source = false;
  gis::Attributes attributes;
};

enum class BranchKind { line, transformer };

struct Branch {
  std::string id;
  std::size_t from = npos;
  std::size_t to = npos;
  double length_m = 0.0;
  Mat3 z_ohm = Mat3::Zero();
  std::string standard_type;
  BranchKind kind = BranchKind::line;
  std::vector<gis::XY> geometry;
};

/// Spanning tree rooted at the source. order lists buses parents-first.
struct RadialTree {
  std::vector<std::size_t> parent;
  std::vector<std::size_t> parent_branch;
  std::vector<std::size_t> order;
};

struct NetworkGraph {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  TransformerModel transformer;
  BaseValues base;
  std::size_t source = 0;
  RadialTree tree;

  std::size_t index_of(std::string_view bus_id) const;
};

struct RadialityResult {
  bool ok = false;
  std::vector<std::string> cycle_branches;
  std::vector<std::string> islands;
  RadialTree tree;

  std::string describe() const;
};

RadialityResult check_radiality(const NetworkGraph& graph);

/// One bus per point plus a source bus behind the transformer; one branch per
/// segment with Z = per-km matrix * length.
NetworkGraph build_graph(std::span<const gis::GeoPoint> points,
                         std::span<const gis::LineSegment> segments, const LineCatalog& catalog,
                         const TransformerModel& transformer = {}, const BaseValues& base = {});

/// Builds a graph directly from buses and branches (tests, bundles).
NetworkGraph assemble_graph(std::vector<Bus> buses, std::vector<Branch> branches,
                            const TransformerModel& transformer, const BaseValues& base);

enum class Phase { A, B, C, ABC };
std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

struct LoadConnection {
  std::size_t bus = npos;
  std::string meter_id;
  Phase phase = Phase::ABC;
  double pf = 1.0;
};

using PhaseMap = std::map<std::string, Phase>;

struct PowerFactorRange {
  double low = 0.95;
  double high = 1.0;
};

/// Loads bound to a graph with an active power table per interval.
struct Scenario {
  std::shared_ptr<const NetworkGraph> graph;
  std::vector<LoadConnection> loads;
  std::size_t intervals = 0;
  meter::TimePoint start{};
  std::vector<double> p_w;  // [interval * loads.size() + load]

  double p(std::size_t load, std::size_t t) const { return p_w[t * loads.size() + load]; }
  double q(std::size_t load, std::size_t t) const;

  /// Per-bus, per-phase complex demand in pu of the per-phase base.
  std::vector<Vec3> load_table(std::size_t t) const;
  /// Same table scaled by factor (stress studies).
  std::vector<Vec3> load_table(std::size_t t, double factor) const;
};

double reactive_power(double p_w, double pf);

/// Attaches every consumer bus to its meter (attribute meter_id, else the
/// bus id). Power factors are drawn once per load in bus-id order.
Scenario attach_loads(std::shared_ptr<const NetworkGraph> graph,
                      std::span<const meter::MeterSeries> meters, PowerFactorRange pf_range,
                      const PhaseMap& phase_map, std::uint64_t rng_seed);

/// Same connections and power factors, new active power profiles.
Scenario with_profiles(const Scenario& base, std::span<const meter::MeterSeries> meters);

}  // namespace lvpq::network
