#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lvpq/solver.hpp"

namespace lvpq::solver {

/// node_id,interval,va,vb,vc,vuf,thd_a,thd_b,thd_c,v_low,v_high,vuf_viol,thd_viol
/// Numbers use shortest round-trip formatting, so reading back is exact.
std::string pq_csv(const PQSeries& series);
PQSeries read_pq_csv(const std::filesystem::path& path);
PQSeries parse_pq_csv(const std::string& text);

/// Fields: tol, max_iter, orders, spectrum [{order, magnitude, phase_deg}],
/// spectrum_by_meter {id: [...]}, limits {v_min, v_max, vuf_max, thd_max}.
SolverConfig solver_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SolverConfig& config);

}  // namespace lvpq::solver
