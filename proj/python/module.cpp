#include "simcf/experiments.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace simcf;

namespace {

Direction parse_direction(const std::string& name) {
  if (name == "uplink") return Direction::Uplink;
  if (name == "downlink") return Direction::Downlink;
  throw ConfigError("direction must be uplink or downlink");
}

py::dict trace_to_dict(const ConvergenceTrace& trace) {
  py::list iters, rates, fh, power, elapsed;
  for (const auto& row : trace.rows) {
    iters.append(row.iteration);
    rates.append(row.sum_rate);
    fh.append(row.min_fronthaul_slack);
    power.append(row.min_power_slack);
    elapsed.append(row.elapsed_ms);
  }
  py::dict d;
  d["iter"] = iters;
  d["sum_rate_bpshz"] = rates;
  d["min_fronthaul_slack"] = fh;
  d["min_power_slack"] = power;
  d["elapsed_ms"] = elapsed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_simcf, m) {
  m.doc() = "SIM-aided cell-free massive MIMO simulator and optimizers";

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("num_aps", &SystemConfig::num_aps)
      .def_readwrite("num_ues", &SystemConfig::num_ues)
      .def_readwrite("rf_chains", &SystemConfig::rf_chains)
      .def_readwrite("atoms_per_layer", &SystemConfig::atoms_per_layer)
      .def_readwrite("layers", &SystemConfig::layers)
      .def_readwrite("fronthaul_capacity", &SystemConfig::fronthaul_capacity)
      .def_readwrite("uplink_power", &SystemConfig::uplink_power)
      .def_readwrite("ap_power", &SystemConfig::ap_power)
      .def_readwrite("uplink_noise", &SystemConfig::uplink_noise)
      .def_readwrite("downlink_noise", &SystemConfig::downlink_noise)
      .def_readwrite("pathloss_ref_distance", &SystemConfig::pathloss_ref_distance)
      .def_readwrite("pathloss_ref_gain", &SystemConfig::pathloss_ref_gain)
      .def_readwrite("pathloss_exponent", &SystemConfig::pathloss_exponent)
      .def_readwrite("coverage_radius", &SystemConfig::coverage_radius)
      .def_readwrite("carrier_frequency", &SystemConfig::carrier_frequency)
      .def_readwrite("seed", &SystemConfig::seed)
      .def("wavelength", &SystemConfig::wavelength)
      .def("validate", &SystemConfig::validate);

  py::class_<SimGeometry>(m, "SimGeometry")
      .def_static("regular", &SimGeometry::regular, py::arg("wavelength"), py::arg("layers"),
                  py::arg("atoms_per_layer"), py::arg("rf_chains"))
      .def_readonly("wavelength", &SimGeometry::wavelength)
      .def_readonly("layers", &SimGeometry::layers)
      .def_readonly("atoms_per_layer", &SimGeometry::atoms_per_layer)
      .def_readonly("rf_chains", &SimGeometry::rf_chains)
      .def_readonly("layer_spacing", &SimGeometry::layer_spacing);

  py::class_<SimStack>(m, "SimStack")
      .def_readonly("antenna_coupling", &SimStack::antenna_coupling)
      .def_readonly("interlayer", &SimStack::interlayer);

  py::class_<AoSettings>(m, "AoSettings")
      .def(py::init<>())
      .def_readwrite("max_outer", &AoSettings::max_outer)
      .def_readwrite("max_digital", &AoSettings::max_digital)
      .def_readwrite("max_wave", &AoSettings::max_wave)
      .def_readwrite("objective_tol", &AoSettings::objective_tol)
      .def_readwrite("penalty_init", &AoSettings::penalty_init)
      .def_readwrite("penalty_growth", &AoSettings::penalty_growth)
      .def_readwrite("step_init", &AoSettings::step_init)
      .def_readwrite("step_decay", &AoSettings::step_decay)
      .def_readwrite("monotone_phase_steps", &AoSettings::monotone_phase_steps)
      .def_readwrite("seed", &AoSettings::seed);

  m.def("default_geometry", [](const SystemConfig& cfg) {
    return SimGeometry::regular(cfg.wavelength(), cfg.layers, cfg.atoms_per_layer, cfg.rf_chains);
  });
  m.def("build_stack", &build_stack, py::arg("geometry"), py::arg("seed"));
  m.def("diffraction_coefficient", &diffraction_coefficient);
  m.def("wave_transfer",
        [](const SimStack& stack, const std::vector<Eigen::VectorXd>& phases, const std::string& dir) {
          return wave_transfer(stack, phases, parse_direction(dir));
        });
  m.def("spatial_covariance", &spatial_covariance);

  m.def("sample_channels",
        [](const SystemConfig& cfg, std::uint64_t seed) {
          const SimGeometry geom =
              SimGeometry::regular(cfg.wavelength(), cfg.layers, cfg.atoms_per_layer, cfg.rf_chains);
          Rng rng(seed);
          const Scenario scenario = sample_scenario(cfg, rng);
          const ChannelRealization ch = sample_channels(cfg, scenario, spatial_covariance(geom), rng);
          py::dict out;
          out["uplink"] = ch.uplink;
          out["downlink"] = ch.downlink;
          py::list ap_xy, ue_xy;
          for (const auto& p : scenario.ap_positions) ap_xy.append(py::make_tuple(p.x(), p.y()));
          for (const auto& p : scenario.ue_positions) ue_xy.append(py::make_tuple(p.x(), p.y()));
          out["ap_positions"] = ap_xy;
          out["ue_positions"] = ue_xy;
          out["pathloss"] = scenario.pathloss;
          return out;
        },
        py::arg("config"), py::arg("seed"));

  m.def("run_scheme",
        [](const SystemConfig& cfg, const std::string& scheme, const std::string& direction,
           std::uint64_t seed, const AoSettings* maybe_settings) {
          const SimGeometry geom =
              SimGeometry::regular(cfg.wavelength(), cfg.layers, cfg.atoms_per_layer, cfg.rf_chains);
          const SimStack stack = build_stack(geom, derive_seed(seed, {0x57ACULL}));
          Rng rng(derive_seed(seed, {0xC0DEULL}));
          const Scenario scenario = sample_scenario(cfg, rng);
          const ChannelRealization channels =
              sample_channels(cfg, scenario, spatial_covariance(geom), rng);
          AoSettings settings = maybe_settings ? *maybe_settings : AoSettings{};
          settings.seed = derive_seed(seed, {0x1217ULL});
          const SchemeResult result =
              run_scheme(cfg, channels, stack, SchemeSpec::parse(scheme), parse_direction(direction), settings);
          py::dict out;
          out["sum_rate_bpshz"] = result.sum_rate;
          out["min_fronthaul_slack"] = result.min_fronthaul_slack;
          out["min_power_slack"] = result.min_power_slack;
          out["trace"] = trace_to_dict(result.trace);
          return out;
        },
        py::arg("config"), py::arg("scheme"), py::arg("direction"), py::arg("seed") = 1,
        py::arg("settings") = nullptr);

  m.def("parse_plan", [](const std::string& path) { return serialize_plan(parse_plan(path)); });
  m.def("run_plan_file", [](const std::string& path, const std::string& out_dir) {
    ExperimentPlan plan = parse_plan(path);
    if (!out_dir.empty()) plan.output_dir = out_dir;
    const ResultTable table = run_plan(plan);
    emit_results(table, plan.output_dir);
    return table.rows.size();
  });
}
