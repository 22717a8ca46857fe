#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridstrength/algebra.hpp"

namespace gs {

struct BaseQuantities {
    double mva = 100.0;  // system power base
    double f0 = 60.0;    // fundamental frequency, Hz
    double omega_b() const { return 2.0 * M_PI * f0; }  // rad/s
};

enum class BusType { Slack, PV, PQ };

struct Bus {
    int id = 0;
    BusType type = BusType::PQ;
    double v_set = 1.0;  // used by PV/slack
};

// Pi-model branch; tap/shift act on the `from` side.
struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;      // total charging susceptance
    double tap = 1.0;
    double shift = 0.0;  // rad
};

enum class DeviceType { SynMachine, Gfl, ZLoad };

// Parsed device attachment. Injections are gen-convention for sm2/gfl and
// consumption for zload; all devices at a bus sum into its scheduled power.
struct DeviceSpec {
    DeviceType type = DeviceType::ZLoad;
    int bus = 0;
    std::string id;
    double p = 0.0, q = 0.0;
    // sm2
    double h = 0.0, xd1 = 0.0, ra = 0.0, damping = 0.0;
    // gfl
    double t_i = 0.02, t_f = 0.1, droop = 0.05;
};

struct CaseFlags {
    bool embed_zloads = false;
};

struct SystemCase {
    std::string name;
    BaseQuantities base;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<DeviceSpec> devices;
    CaseFlags flags;

    int n() const { return int(buses.size()); }
    int index_of(int bus_id) const;  // 0-based position; throws on unknown id

    // Net scheduled injection at a bus: sum of device p/q with zload negated.
    // PV buses contribute p only (their q floats), handled by the solver.
    Complex scheduled_injection(int bus_index) const;
};

// Parse + fully validate a case document (see README for the schema).
// Errors carry the JSON path of the offending field.
SystemCase parse_case(const std::string& text);
SystemCase load_case(const std::filesystem::path& file);

// Branch-only admittance (series, charging, taps); every block is
// complex-representable. Devices are not folded in.
BlockMatrix build_admittance(const SystemCase& c);

// Z = Y^-1 with residual check; throws SingularNetwork when the network has
// no shunt path to ground (charging-free cases: see flags.embed_zloads).
BlockMatrix impedance(const BlockMatrix& y);

struct PowerFlowSolution {
    std::vector<double> v;       // magnitudes, pu
    std::vector<double> theta;   // rad
    std::vector<Complex> s_inj;  // net injection at the solution
    int iterations = 0;
    double mismatch = 0.0;

    Complex voltage(int bus_index) const {
        return std::polar(v[bus_index], theta[bus_index]);
    }
};

// Newton-Raphson, polar, flat start, single slack. Converges well below the
// 1e-8 acceptance so downstream equilibria hold to 1e-10.
PowerFlowSolution solve_powerflow(const SystemCase& c);

}  // namespace gs
