#include "gridstrength/reports.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace gs {

namespace {

using nlohmann::ordered_json;

const char* type_name(BusType t) {
    switch (t) {
        case BusType::Slack: return "slack";
        case BusType::PV: return "pv";
        default: return "pq";
    }
}

std::string fixed(double x, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

ordered_json mat2_json(const Mat2& m) {
    return ordered_json::array({ordered_json::array({m.m11, m.m12}),
                                ordered_json::array({m.m21, m.m22})});
}

ordered_json block_matrix_json(const BlockMatrix& m) {
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < m.dim(); ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < m.dim(); ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

// entry names per order, row-major over the 2x2 indicator block
const char* const kEntryNames[3][4] = {
    {"v_ip", "v_iq", "th_ip", "th_iq"},
    {"rho_ip", "rho_iq", "omega_ip", "omega_iq"},
    {"sigma_ip", "sigma_iq", "gamma_ip", "gamma_iq"},
};

double entry(const Mat2& m, int e) {
    switch (e) {
        case 0: return m.m11;
        case 1: return m.m12;
        case 2: return m.m21;
        default: return m.m22;
    }
}

const Mat2& order_block(const BusIndicators& r, int o) {
    return o == 0 ? r.s0 : o == 1 ? r.s1 : r.s2;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string powerflow_csv(const SystemCase& c, const PowerFlowSolution& pf) {
    std::ostringstream out;
    out << "bus,type,v_pu,theta_rad,p_inj_pu,q_inj_pu\n";
    for (int k = 0; k < c.n(); ++k) {
        out << c.buses[k].id << ',' << type_name(c.buses[k].type) << ','
            << format_double(pf.v[k]) << ',' << format_double(pf.theta[k]) << ','
            << format_double(pf.s_inj[k].real()) << ',' << format_double(pf.s_inj[k].imag())
            << '\n';
    }
    return out.str();
}

std::string powerflow_table(const SystemCase& c, const PowerFlowSolution& pf) {
    std::ostringstream out;
    out << "bus   type    v [pu]     theta [rad]   p [pu]      q [pu]\n";
    for (int k = 0; k < c.n(); ++k) {
        char line[160];
        std::snprintf(line, sizeof line, "%-5d %-6s %10.6f %12.6f %11.6f %11.6f\n",
                      c.buses[k].id, type_name(c.buses[k].type), pf.v[k], pf.theta[k],
                      pf.s_inj[k].real(), pf.s_inj[k].imag());
        out << line;
    }
    out << "converged in " << pf.iterations << " iterations, max mismatch "
        << format_double(pf.mismatch) << " pu\n";
    return out.str();
}

std::string indicator_csv(const IndicatorTable& table) {
    std::ostringstream out;
    out << "bus,order";
    for (int e = 0; e < 4; ++e) out << ",raw_" << (e / 2 + 1) << (e % 2 + 1);
    for (int e = 0; e < 4; ++e) out << ",norm_" << (e / 2 + 1) << (e % 2 + 1);
    out << '\n';
    for (size_t r = 0; r < table.raw.size(); ++r) {
        for (int o = 0; o < 3; ++o) {
            out << table.raw[r].bus_id << ',' << o;
            for (int e = 0; e < 4; ++e)
                out << ',' << format_double(entry(order_block(table.raw[r], o), e));
            for (int e = 0; e < 4; ++e)
                out << ',' << format_double(std::abs(entry(order_block(table.normalized[r], o), e)));
            out << '\n';
        }
    }
    return out.str();
}

std::string indicator_table_text(const IndicatorTable& table) {
    static const char* const kOrderTitles[3] = {
        "voltage jump indicators |S|",
        "first-order complex-frequency jump indicators |S'|",
        "second-order complex-frequency jump indicators |S''|",
    };
    std::ostringstream out;
    for (int o = 0; o < 3; ++o) {
        out << kOrderTitles[o];
        if (table.order_max[o] < 1e-14) {
            out << ": all zero (infinitely strong at this order)\n\n";
            continue;
        }
        out << "  (normalized to " << format_double(table.order_max[o]) << ")\n";
        char head[160];
        std::snprintf(head, sizeof head, "%-5s %10s %10s %10s %10s\n", "bus",
                      kEntryNames[o][0], kEntryNames[o][1], kEntryNames[o][2], kEntryNames[o][3]);
        out << head;
        for (const auto& r : table.normalized) {
            char line[160];
            std::snprintf(line, sizeof line, "%-5d %10.6f %10.6f %10.6f %10.6f\n", r.bus_id,
                          std::abs(entry(order_block(r, o), 0)), std::abs(entry(order_block(r, o), 1)),
                          std::abs(entry(order_block(r, o), 2)), std::abs(entry(order_block(r, o), 3)));
            out << line;
        }
        out << "weakest by |" << kEntryNames[o][2] << "|:";
        const auto& rank = table.rankings[o][2];
        for (size_t i = 0; i < rank.size() && i < 5; ++i) out << ' ' << rank[i];
        out << "\n\n";
    }
    return out.str();
}

std::string matrices_json(const SystemCase& c, const StrengthResult& r,
                          const IndicatorTable& table) {
    ordered_json doc;
    doc["case"] = c.name;
    doc["n_bus"] = c.n();
    doc["order_max"] = ordered_json::array({table.order_max[0], table.order_max[1],
                                            table.order_max[2]});
    ordered_json buses = ordered_json::array();
    for (size_t i = 0; i < table.raw.size(); ++i) {
        ordered_json b;
        b["id"] = table.raw[i].bus_id;
        b["s"] = mat2_json(table.raw[i].s0);
        b["s1"] = mat2_json(table.raw[i].s1);
        b["s2"] = mat2_json(table.raw[i].s2);
        b["s_normalized"] = mat2_json(table.normalized[i].s0);
        b["s1_normalized"] = mat2_json(table.normalized[i].s1);
        b["s2_normalized"] = mat2_json(table.normalized[i].s2);
        buses.push_back(std::move(b));
    }
    doc["buses"] = std::move(buses);
    ordered_json rankings;
    static const char* const kOrderKeys[3] = {"s", "s1", "s2"};
    for (int o = 0; o < 3; ++o) {
        ordered_json per_entry;
        for (int e = 0; e < 4; ++e) per_entry[kEntryNames[o][e]] = table.rankings[o][e];
        rankings[kOrderKeys[o]] = std::move(per_entry);
    }
    doc["rankings"] = std::move(rankings);
    doc["matrices"]["s"] = block_matrix_json(r.s);
    doc["matrices"]["s1"] = block_matrix_json(r.s1);
    doc["matrices"]["s2"] = block_matrix_json(r.s2);
    return doc.dump(2) + "\n";
}

std::string trajectory_csv(const SystemCase& c, const Trajectory& traj) {
    std::ostringstream out;
    out << "t";
    static const char* const kCols[6] = {"v", "theta", "rho", "omega", "sigma", "gamma"};
    for (const char* q : kCols)
        for (int k = 0; k < c.n(); ++k) out << ',' << q << '_' << c.buses[k].id;
    out << '\n';
    for (size_t r = 0; r < traj.rows(); ++r) {
        out << format_double(traj.t[r]);
        const std::vector<std::vector<double>>* cols[6] = {&traj.v,     &traj.theta, &traj.rho,
                                                           &traj.omega, &traj.sigma, &traj.gamma};
        for (const auto* col : cols)
            for (int k = 0; k < c.n(); ++k) out << ',' << format_double((*col)[r][k]);
        out << '\n';
    }
    return out.str();
}

std::string validation_json(const SystemCase& c, const ValidationReport& rep) {
    ordered_json doc;
    doc["case"] = c.name;
    doc["bus"] = rep.bus_id;
    doc["disturbance"] = {{"di_p", rep.dist.di_p}, {"di_q", rep.dist.di_q}};
    auto rows = [](const std::vector<ValidationRow>& rs) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rs) {
            ordered_json j;
            j["quantity"] = r.quantity;
            j["predicted"] = r.predicted;
            j["measured"] = r.measured;
            j["error"] = r.error;
            arr.push_back(std::move(j));
        }
        return arr;
    };
    doc["jumps"] = rows(rep.jump_rows);
    doc["post_event_slopes"] = rows(rep.proc_rows);
    doc["predicted_dv_pu"] = rep.predicted_dv;
    doc["predicted_dtheta_rad"] = rep.predicted_dtheta;
    doc["max_jump_error"] = rep.max_jump_error();
    doc["max_step_residual"] = rep.max_step_residual;
    if (!rep.gfl_dropped_terms.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& [id, mag] : rep.gfl_dropped_terms)
            arr.push_back({{"device", id}, {"magnitude", mag}});
        doc["converter_dropped_first_order_terms"] = std::move(arr);
    }
    return doc.dump(2) + "\n";
}

std::string validation_table(const ValidationReport& rep) {
    std::ostringstream out;
    out << "disturbance at bus " << rep.bus_id << ": di_p = " << format_double(rep.dist.di_p)
        << ", di_q = " << format_double(rep.dist.di_q) << " (current draw, pu)\n\n";
    char head[160];
    std::snprintf(head, sizeof head, "%-22s %16s %16s %12s\n", "quantity", "predicted",
                  "measured", "error");
    out << head;
    auto print_rows = [&](const std::vector<ValidationRow>& rs) {
        for (const auto& r : rs) {
            char line[200];
            std::snprintf(line, sizeof line, "%-22s %16.9e %16.9e %12.3e\n", r.quantity.c_str(),
                          r.predicted, r.measured, r.error);
            out << line;
        }
    };
    print_rows(rep.jump_rows);
    out << "\npredicted absolute jump: dv = " << fixed(rep.predicted_dv, 8)
        << " pu, dtheta = " << fixed(rep.predicted_dtheta, 8) << " rad\n\n";
    print_rows(rep.proc_rows);
    out << "\nmax step residual: " << format_double(rep.max_step_residual) << "\n";
    for (const auto& [id, mag] : rep.gfl_dropped_terms)
        out << "converter " << id
            << ": first-order term left out of the blocks has magnitude "
            << format_double(mag) << "\n";
    return out.str();
}

}  // namespace gs
