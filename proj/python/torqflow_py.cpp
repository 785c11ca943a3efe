#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>
#include <vector>

#include "torqflow/flow.hpp"
#include "torqflow/geometry.hpp"
#include "torqflow/mesh.hpp"
#include "torqflow/orlicz.hpp"
#include "torqflow/torsion.hpp"

namespace py = pybind11;
using namespace torqflow;

namespace {

std::vector<std::pair<double, double>> to_pairs(const std::vector<Vec2>& v) {
    std::vector<std::pair<double, double>> out;
    out.reserve(v.size());
    for (const Vec2& p : v) out.push_back({p.x, p.y});
    return out;
}

} // namespace

PYBIND11_MODULE(_torqflow, m) {
    m.doc() = "Planar Orlicz-Minkowski torsion flow: support-function calculus, "
              "q-torsion finite elements, and the normalized curvature flow.";

    // ---- geometry -------------------------------------------------------
    py::enum_<DiffScheme>(m, "DiffScheme")
        .value("central", DiffScheme::central)
        .value("spectral", DiffScheme::spectral);

    py::class_<SupportProfile>(m, "SupportProfile")
        .def(py::init<std::vector<double>>(), py::arg("values"))
        .def("__len__", &SupportProfile::size)
        .def("__getitem__",
             [](const SupportProfile& p, int i) {
                 if (i < 0) i += p.size();
                 if (i < 0 || i >= p.size()) throw py::index_error();
                 return p[i];
             })
        .def("theta", &SupportProfile::theta, py::arg("i"))
        .def("step", &SupportProfile::step)
        .def_property_readonly(
            "values", [](const SupportProfile& p) { return p.values(); });

    py::class_<ConvexityReport>(m, "ConvexityReport")
        .def_readonly("min_h", &ConvexityReport::min_h)
        .def_readonly("min_b", &ConvexityReport::min_b)
        .def_readonly("ok", &ConvexityReport::ok);

    py::class_<BoundaryPolygon>(m, "BoundaryPolygon")
        .def_property_readonly(
            "points", [](const BoundaryPolygon& b) { return to_pairs(b.points); })
        .def_property_readonly(
            "normals", [](const BoundaryPolygon& b) { return to_pairs(b.normals); })
        .def_readonly("arc_weights", &BoundaryPolygon::arc_weights);

    py::class_<RadialProfile>(m, "RadialProfile")
        .def_readonly("angle", &RadialProfile::angle)
        .def_readonly("radius", &RadialProfile::radius);

    m.def("disk_profile", &disk_profile, py::arg("radius"), py::arg("grid_size"));
    m.def("ellipse_profile", &ellipse_profile, py::arg("a"), py::arg("b"),
          py::arg("grid_size"));
    m.def("fourier_profile", &fourier_profile, py::arg("a0"), py::arg("cos"),
          py::arg("sin"), py::arg("grid_size"));
    m.def("validate_support", &validate_support, py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("principal_radius", &principal_radius, py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("curvature", &curvature, py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("boundary_points", &boundary_points, py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("radial_profile", &radial_profile, py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("profile_area", &profile_area, py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("rescale", &rescale, py::arg("profile"), py::arg("factor"));
    m.def("resample", &resample, py::arg("profile"), py::arg("grid_size"));

    // ---- Orlicz data ----------------------------------------------------
    py::class_<OrliczFunction>(m, "OrliczFunction")
        .def_static("power", &OrliczFunction::power, py::arg("p"))
        .def_static("exponential", &OrliczFunction::exponential, py::arg("a"))
        .def_static("tabulated", &OrliczFunction::tabulated, py::arg("nodes"),
                    py::arg("values"))
        .def("__call__", &OrliczFunction::operator(), py::arg("s"))
        .def("deriv", &OrliczFunction::deriv, py::arg("s"))
        .def("hat", &OrliczFunction::hat, py::arg("s"))
        .def("hat_base", &OrliczFunction::hat_base)
        .def("convex", &OrliczFunction::convex)
        .def("label", &OrliczFunction::label);

    py::class_<DensitySpec>(m, "DensitySpec")
        .def_static("constant", &DensitySpec::constant, py::arg("value"))
        .def_static("fourier", &DensitySpec::fourier, py::arg("a0"),
                    py::arg("cos") = std::vector<double>{},
                    py::arg("sin") = std::vector<double>{})
        .def("__call__", &DensitySpec::operator(), py::arg("theta"))
        .def("min_on_grid", &DensitySpec::min_on_grid);

    // ---- torsion solver -------------------------------------------------
    py::class_<BodyMesh>(m, "BodyMesh")
        .def_property_readonly("vertices",
                               [](const BodyMesh& b) { return to_pairs(b.vertices); })
        .def_readonly("triangles", &BodyMesh::triangles)
        .def_readonly("boundary_count", &BodyMesh::boundary_count)
        .def("vertex_count", &BodyMesh::vertex_count)
        .def("triangle_count", &BodyMesh::triangle_count);

    py::class_<TorsionField>(m, "TorsionField")
        .def_readonly("mesh", &TorsionField::mesh)
        .def_readonly("q", &TorsionField::q)
        .def_readonly("u", &TorsionField::u)
        .def_readonly("boundary_gradient", &TorsionField::boundary_gradient)
        .def_readonly("newton_iterations", &TorsionField::newton_iterations)
        .def_readonly("gradient_norm", &TorsionField::gradient_norm);

    py::class_<BallOracle>(m, "BallOracle")
        .def_readonly("radius", &BallOracle::radius)
        .def_readonly("dim", &BallOracle::dim)
        .def_readonly("q", &BallOracle::q)
        .def("value", &BallOracle::value, py::arg("r"))
        .def("derivative", &BallOracle::derivative, py::arg("r"))
        .def("center_value", &BallOracle::center_value)
        .def("boundary_gradient", &BallOracle::boundary_gradient)
        .def("total_mass", &BallOracle::total_mass)
        .def("rigidity", &BallOracle::rigidity);

    m.def("ball_oracle", &ball_oracle, py::arg("radius"), py::arg("dim"), py::arg("q"));
    m.def(
        "solve_torsion",
        [](const SupportProfile& p, double q, double target_edge) {
            MeshOptions mo;
            mo.target_edge = target_edge;
            return solve_torsion(triangulate(boundary_points(p, DiffScheme::spectral), mo),
                                 q);
        },
        py::arg("profile"), py::arg("q") = 2.0, py::arg("target_edge") = 0.025,
        "Mesh the body of the profile and minimize the q-torsion energy on it.");
    m.def("total_mass", &total_mass, py::arg("field"));
    m.def("rigidity", &rigidity, py::arg("field"));
    m.def("boundary_gradient_at_nodes", &boundary_gradient_at_nodes, py::arg("field"));
    m.def("dirichlet_identity_gap", &dirichlet_identity_gap, py::arg("field"));
    m.def("torsion_measure", &torsion_measure, py::arg("field"), py::arg("profile"),
          py::arg("scheme") = DiffScheme::central);
    m.def("rigidity_from_boundary", &rigidity_from_boundary, py::arg("profile"),
          py::arg("field"), py::arg("scheme") = DiffScheme::central);

    // ---- flow -----------------------------------------------------------
    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init<>())
        .def_readwrite("epsilon", &SolverOptions::epsilon)
        .def_readwrite("tol_scale", &SolverOptions::tol_scale)
        .def_readwrite("max_iterations", &SolverOptions::max_iterations)
        .def_readwrite("threads", &SolverOptions::threads);

    py::class_<FlowConfig>(m, "FlowConfig")
        .def(py::init<SupportProfile>(), py::arg("initial"))
        .def_readwrite("initial", &FlowConfig::initial)
        .def_readwrite("q", &FlowConfig::q)
        .def_readwrite("phi", &FlowConfig::phi)
        .def_readwrite("density", &FlowConfig::density)
        .def_readwrite("target_edge", &FlowConfig::target_edge)
        .def_readwrite("scheme", &FlowConfig::scheme)
        .def_readwrite("solver", &FlowConfig::solver)
        .def_readwrite("dt_max", &FlowConfig::dt_max)
        .def_readwrite("cfl", &FlowConfig::cfl)
        .def_readwrite("rescale_tq", &FlowConfig::rescale_tq)
        .def_readwrite("velocity_modes", &FlowConfig::velocity_modes)
        .def_readwrite("residual_tol", &FlowConfig::residual_tol)
        .def_readwrite("sustain_steps", &FlowConfig::sustain_steps)
        .def_readwrite("max_steps", &FlowConfig::max_steps)
        .def_readwrite("tq_drift_tol", &FlowConfig::tq_drift_tol)
        .def_readwrite("gamma_slack", &FlowConfig::gamma_slack)
        .def_readwrite("corridor", &FlowConfig::corridor)
        .def_readwrite("collapse_fraction", &FlowConfig::collapse_fraction)
        .def_readwrite("snapshot_every", &FlowConfig::snapshot_every);

    py::class_<FlowState>(m, "FlowState")
        .def_readonly("t", &FlowState::t)
        .def_readonly("profile", &FlowState::profile)
        .def_readonly("field", &FlowState::field)
        .def_readonly("lambda_", &FlowState::lambda)
        .def_readonly("tq", &FlowState::tq)
        .def_readonly("gamma", &FlowState::gamma)
        .def_readonly("residual", &FlowState::residual);

    py::class_<MonitorReport>(m, "MonitorReport")
        .def_readonly("tq_drift", &MonitorReport::tq_drift)
        .def_readonly("gamma_step", &MonitorReport::gamma_step)
        .def_readonly("tq_flag", &MonitorReport::tq_flag)
        .def_readonly("gamma_flag", &MonitorReport::gamma_flag)
        .def_readonly("corridor_flag", &MonitorReport::corridor_flag)
        .def("ok", &MonitorReport::ok);

    py::class_<TrajectoryRecord>(m, "TrajectoryRecord")
        .def_readonly("step", &TrajectoryRecord::step)
        .def_readonly("t", &TrajectoryRecord::t)
        .def_readonly("dt", &TrajectoryRecord::dt)
        .def_readonly("lambda_", &TrajectoryRecord::lambda)
        .def_readonly("tq", &TrajectoryRecord::tq)
        .def_readonly("gamma", &TrajectoryRecord::gamma)
        .def_readonly("residual", &TrajectoryRecord::residual)
        .def_readonly("min_h", &TrajectoryRecord::min_h)
        .def_readonly("max_h", &TrajectoryRecord::max_h)
        .def_readonly("min_b", &TrajectoryRecord::min_b);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("records", &Trajectory::records)
        .def_readonly("monitors", &Trajectory::monitors)
        .def_readonly("snapshots", &Trajectory::snapshots)
        .def_readonly("steps", &Trajectory::steps)
        .def_readonly("diagnostic", &Trajectory::diagnostic)
        .def_property_readonly(
            "termination",
            [](const Trajectory& t) { return std::string(to_string(t.termination)); })
        .def_property_readonly("final_state", [](const Trajectory& t) -> py::object {
            if (!t.final_state) return py::none();
            return py::cast(*t.final_state);
        });

    m.def(
        "make_state",
        [](const SupportProfile& p, const FlowConfig& config, double t) {
            return make_state(p, config, t);
        },
        py::arg("profile"), py::arg("config"), py::arg("t") = 0.0);
    m.def("lambda_factor", &lambda_factor, py::arg("state"), py::arg("config"));
    m.def("velocity", &velocity, py::arg("state"), py::arg("config"));
    m.def("step", &step, py::arg("state"), py::arg("config"));
    m.def("gamma", &torqflow::gamma, py::arg("state"), py::arg("config"));
    m.def("run", &run, py::arg("config"),
          "Integrate the normalized flow from config.initial until convergence, "
          "abort, or the step budget.");
}
