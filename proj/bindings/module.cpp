#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gridstrength/reports.hpp"

namespace py = pybind11;
using namespace gs;

namespace {

// pipeline used by the strength and report commands, packaged as one call
std::pair<Snapshot, StrengthResult> strength_analysis(const SystemCase& c, const Disturbance& d) {
    System sys(c);
    Snapshot snap = solve_post_state(sys, d);
    const BlockSet blocks = assemble_device_blocks(snap.devices, snap, snap.n());
    const ZeqChain chain = zeq_chain(sys.impedance_matrix(), blocks);
    StrengthResult sr = strength_matrices(snap, chain);
    return {std::move(snap), std::move(sr)};
}

IndicatorTable indicator_table(const Snapshot& snap, const StrengthResult& sr) {
    std::vector<BusIndicators> rows;
    rows.reserve(snap.n());
    for (int k = 0; k < snap.n(); ++k) {
        const auto ind = sr.indicators(k);
        rows.push_back({snap.bus_ids[k], ind[0], ind[1], ind[2]});
    }
    return normalize_report(std::move(rows));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Analytical grid-strength indicators with time-domain validation";

    // base first; later registrations translate first, so subclasses win
    auto err = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", err);
    py::register_exception<NumericalError>(m, "NumericalError", err);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", err);

    py::class_<ClarkeVec>(m, "ClarkeVec")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("d"), py::arg("q"))
        .def_readwrite("d", &ClarkeVec::d)
        .def_readwrite("q", &ClarkeVec::q)
        .def("to_complex", &ClarkeVec::to_complex)
        .def("magnitude", &ClarkeVec::magnitude)
        .def("angle", &ClarkeVec::angle)
        .def("__repr__", [](const ClarkeVec& v) {
            std::ostringstream s;
            s << "ClarkeVec(" << v.d << ", " << v.q << ")";
            return s.str();
        });

    py::class_<Mat2>(m, "Mat2")
        .def(py::init<>())
        .def_readonly("m11", &Mat2::m11)
        .def_readonly("m12", &Mat2::m12)
        .def_readonly("m21", &Mat2::m21)
        .def_readonly("m22", &Mat2::m22)
        .def("entries",
             [](const Mat2& x) {
                 return py::make_tuple(py::make_tuple(x.m11, x.m12), py::make_tuple(x.m21, x.m22));
             })
        .def("to_complex", &Mat2::to_complex)
        .def("complex_representable", &Mat2::complex_representable, py::arg("tol") = 1e-12)
        .def("__repr__", [](const Mat2& x) {
            std::ostringstream s;
            s << "Mat2([[" << x.m11 << ", " << x.m12 << "], [" << x.m21 << ", " << x.m22 << "]])";
            return s.str();
        });

    py::class_<SystemCase>(m, "SystemCase")
        .def_readonly("name", &SystemCase::name)
        .def("n", &SystemCase::n)
        .def("bus_ids",
             [](const SystemCase& c) {
                 std::vector<int> ids;
                 ids.reserve(c.buses.size());
                 for (const auto& b : c.buses) ids.push_back(b.id);
                 return ids;
             })
        .def_property(
            "embed_zloads", [](const SystemCase& c) { return c.flags.embed_zloads; },
            [](SystemCase& c, bool on) { c.flags.embed_zloads = on; });

    m.def("load_case", [](const std::string& path) { return load_case(path); }, py::arg("path"),
          "Parse a case file (JSON)");
    m.def("parse_case", &parse_case, py::arg("text"), "Parse a case from a JSON string");

    py::class_<PowerFlowSolution>(m, "PowerFlowSolution")
        .def_readonly("v", &PowerFlowSolution::v)
        .def_readonly("theta", &PowerFlowSolution::theta)
        .def_readonly("s_inj", &PowerFlowSolution::s_inj)
        .def_readonly("iterations", &PowerFlowSolution::iterations)
        .def_readonly("mismatch", &PowerFlowSolution::mismatch)
        .def("voltage", &PowerFlowSolution::voltage, py::arg("bus_index"));

    m.def("solve_powerflow", &solve_powerflow, py::arg("case"));

    py::class_<Disturbance>(m, "Disturbance")
        .def(py::init([](int bus_id, double di_p, double di_q) {
                 return Disturbance{bus_id, di_p, di_q};
             }),
             py::arg("bus_id"), py::arg("di_p") = 1.0, py::arg("di_q") = 0.0)
        .def_readwrite("bus_id", &Disturbance::bus_id)
        .def_readwrite("di_p", &Disturbance::di_p)
        .def_readwrite("di_q", &Disturbance::di_q);

    py::class_<System>(m, "System")
        .def(py::init<const SystemCase&>(), py::arg("case"))
        .def("n", &System::n)
        .def("omega_b", &System::omega_b)
        .def("voltages", &System::voltages)
        .def("has_gfl", &System::has_gfl);

    py::class_<Snapshot>(m, "Snapshot")
        .def_readonly("bus_ids", &Snapshot::bus_ids)
        .def_readonly("v_minus", &Snapshot::v_minus)
        .def_readonly("v_plus", &Snapshot::v_plus)
        .def_readonly("th_minus", &Snapshot::th_minus)
        .def_readonly("th_plus", &Snapshot::th_plus)
        .def_readonly("eta1_minus", &Snapshot::eta1_minus)
        .def_readonly("eta1_plus", &Snapshot::eta1_plus)
        .def_readonly("eta2_minus", &Snapshot::eta2_minus)
        .def_readonly("eta2_plus", &Snapshot::eta2_plus)
        .def("n", &Snapshot::n)
        .def("index_of", &Snapshot::index_of, py::arg("bus_id"));

    m.def("solve_post_state",
          [](System& sys, const Disturbance& d) { return solve_post_state(sys, d); },
          py::arg("system"), py::arg("disturbance"));
    m.def("solve_post_state",
          [](const SystemCase& c, const Disturbance& d) { return solve_post_state(c, d); },
          py::arg("case"), py::arg("disturbance"));

    py::class_<StrengthResult>(m, "StrengthResult")
        .def("n_buses", [](const StrengthResult& r) { return r.s.blocks(); })
        .def("indicators",
             [](const StrengthResult& r, int bus_index) {
                 const auto ind = r.indicators(bus_index);
                 return py::make_tuple(ind[0], ind[1], ind[2]);
             },
             py::arg("bus_index"), "Diagonal (S, S', S'') blocks at a bus index")
        .def("block",
             [](const StrengthResult& r, int order, int i, int j) {
                 switch (order) {
                     case 0: return r.s.block(i, j);
                     case 1: return r.s1.block(i, j);
                     case 2: return r.s2.block(i, j);
                 }
                 throw Error("order must be 0, 1 or 2");
             },
             py::arg("order"), py::arg("i"), py::arg("j"));

    m.def("strength_analysis", &strength_analysis, py::arg("case"), py::arg("disturbance"),
          "Post-event snapshot and strength matrices for one disturbance");

    py::class_<JumpPrediction>(m, "JumpPrediction")
        .def_readonly("dv_vtheta", &JumpPrediction::dv_vtheta)
        .def_readonly("deta1", &JumpPrediction::deta1)
        .def_readonly("deta2", &JumpPrediction::deta2);

    m.def("predict_jump",
          [](const StrengthResult& r, int bus_index, double di_p, double di_q) {
              return predict_jump(r, bus_index, {di_p, di_q});
          },
          py::arg("result"), py::arg("bus_index"), py::arg("di_p") = 1.0, py::arg("di_q") = 0.0);
    m.def("predict_all",
          [](const StrengthResult& r, int bus_index, double di_p, double di_q) {
              return predict_all(r, bus_index, {di_p, di_q});
          },
          py::arg("result"), py::arg("bus_index"), py::arg("di_p") = 1.0, py::arg("di_q") = 0.0);

    py::class_<AbsoluteJump>(m, "AbsoluteJump")
        .def_readonly("dv", &AbsoluteJump::dv)
        .def_readonly("dtheta", &AbsoluteJump::dtheta);
    m.def("absolute_jump", &absolute_jump, py::arg("dv_vtheta"), py::arg("v_minus"));

    py::class_<BusIndicators>(m, "BusIndicators")
        .def_readonly("bus_id", &BusIndicators::bus_id)
        .def_readonly("s0", &BusIndicators::s0)
        .def_readonly("s1", &BusIndicators::s1)
        .def_readonly("s2", &BusIndicators::s2);

    py::class_<IndicatorTable>(m, "IndicatorTable")
        .def_readonly("raw", &IndicatorTable::raw)
        .def_readonly("normalized", &IndicatorTable::normalized)
        .def_readonly("rankings", &IndicatorTable::rankings)
        .def_readonly("order_max", &IndicatorTable::order_max);

    m.def("indicator_table", &indicator_table, py::arg("snapshot"), py::arg("result"),
          "Normalized per-bus indicator table from one analysis");

    py::class_<Event>(m, "Event")
        .def(py::init([](double t, const Disturbance& d) { return Event{t, d}; }), py::arg("t"),
             py::arg("disturbance"))
        .def_readwrite("t", &Event::t)
        .def_readwrite("dist", &Event::dist);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("t", &Trajectory::t)
        .def_readonly("v", &Trajectory::v)
        .def_readonly("theta", &Trajectory::theta)
        .def_readonly("rho", &Trajectory::rho)
        .def_readonly("omega", &Trajectory::omega)
        .def_readonly("sigma", &Trajectory::sigma)
        .def_readonly("gamma", &Trajectory::gamma)
        .def_readonly("states", &Trajectory::states)
        .def_readonly("event_rows", &Trajectory::event_rows)
        .def_readonly("step_residuals", &Trajectory::step_residuals)
        .def("rows", &Trajectory::rows)
        .def("buses", &Trajectory::buses);

    m.def("simulate",
          [](const SystemCase& c, const std::vector<Event>& events, double t_end, double dt) {
              return simulate(c, events, t_end, dt);
          },
          py::arg("case"), py::arg("events"), py::arg("t_end"), py::arg("dt") = 1e-3);

    py::class_<MeasuredJump>(m, "MeasuredJump")
        .def_readonly("dv_vtheta", &MeasuredJump::dv_vtheta)
        .def_readonly("deta1", &MeasuredJump::deta1)
        .def_readonly("deta2", &MeasuredJump::deta2);
    m.def("measure_jump", &measure_jump, py::arg("trajectory"), py::arg("t_event"));

    py::class_<ValidationRow>(m, "ValidationRow")
        .def_readonly("quantity", &ValidationRow::quantity)
        .def_readonly("predicted", &ValidationRow::predicted)
        .def_readonly("measured", &ValidationRow::measured)
        .def_readonly("error", &ValidationRow::error);

    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("bus_id", &ValidationReport::bus_id)
        .def_readonly("jump_rows", &ValidationReport::jump_rows)
        .def_readonly("proc_rows", &ValidationReport::proc_rows)
        .def_readonly("max_step_residual", &ValidationReport::max_step_residual)
        .def_readonly("predicted_dv", &ValidationReport::predicted_dv)
        .def_readonly("predicted_dtheta", &ValidationReport::predicted_dtheta)
        .def_readonly("gfl_dropped_terms", &ValidationReport::gfl_dropped_terms)
        .def("max_jump_error", &ValidationReport::max_jump_error);

    m.def("validate", &validate, py::arg("case"), py::arg("disturbance"), py::arg("t_event") = 1.0,
          py::arg("t_end") = 5.0, py::arg("dt") = 1e-3);

    // deterministic text renderings, same as the command-line output
    m.def("powerflow_table", &powerflow_table, py::arg("case"), py::arg("solution"));
    m.def("indicator_table_text", &indicator_table_text, py::arg("table"));
    m.def("validation_table", &validation_table, py::arg("report"));
}
