#include "gridstrength/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gs {

int SystemCase::index_of(int bus_id) const {
    for (size_t k = 0; k < buses.size(); ++k)
        if (buses[k].id == bus_id) return int(k);
    throw Error("unknown bus id " + std::to_string(bus_id));
}

Complex SystemCase::scheduled_injection(int bus_index) const {
    const int id = buses[bus_index].id;
    Complex s{0.0, 0.0};
    for (const auto& d : devices) {
        if (d.bus != id) continue;
        if (d.type == DeviceType::ZLoad)
            s -= Complex(d.p, d.q);
        else
            s += Complex(d.p, d.q);
    }
    return s;
}

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& reason) {
    throw ParseError(path, reason);
}

double num_at(const json& obj, const std::string& path, const char* key, bool required,
              double fallback = 0.0) {
    if (!obj.contains(key)) {
        if (required) fail(path + "/" + key, "missing required number");
        return fallback;
    }
    const auto& v = obj[key];
    if (!v.is_number()) fail(path + "/" + key, "expected a number");
    return v.get<double>();
}

int int_at(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path + "/" + key, "missing required integer");
    if (!obj[key].is_number_integer()) fail(path + "/" + key, "expected an integer");
    return obj[key].get<int>();
}

}  // namespace

SystemCase parse_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("", "top level must be an object");

    SystemCase c;
    c.name = doc.value("name", std::string());

    if (!doc.contains("base") || !doc["base"].is_object()) fail("/base", "missing object");
    c.base.mva = num_at(doc["base"], "/base", "mva", false, 100.0);
    c.base.f0 = num_at(doc["base"], "/base", "f0", false, 60.0);
    if (!(c.base.mva > 0.0)) fail("/base/mva", "must be positive");
    if (!(c.base.f0 > 0.0)) fail("/base/f0", "must be positive");

    if (!doc.contains("buses") || !doc["buses"].is_array() || doc["buses"].empty())
        fail("/buses", "missing non-empty array");
    std::set<int> ids;
    int slack_count = 0;
    for (size_t k = 0; k < doc["buses"].size(); ++k) {
        const std::string path = "/buses/" + std::to_string(k);
        const auto& jb = doc["buses"][k];
        if (!jb.is_object()) fail(path, "expected an object");
        Bus b;
        b.id = int_at(jb, path, "id");
        if (!ids.insert(b.id).second) fail(path + "/id", "duplicate bus id");
        const std::string ty = jb.value("type", std::string("pq"));
        if (ty == "pq") b.type = BusType::PQ;
        else if (ty == "pv") b.type = BusType::PV;
        else if (ty == "slack") b.type = BusType::Slack;
        else fail(path + "/type", "expected pq, pv or slack");
        if (b.type == BusType::Slack) ++slack_count;
        b.v_set = num_at(jb, path, "v_set", b.type != BusType::PQ, 1.0);
        if (!(b.v_set > 0.0)) fail(path + "/v_set", "must be positive");
        c.buses.push_back(b);
    }
    if (slack_count != 1) fail("/buses", "exactly one slack bus required");

    if (!doc.contains("branches") || !doc["branches"].is_array())
        fail("/branches", "missing array");
    for (size_t k = 0; k < doc["branches"].size(); ++k) {
        const std::string path = "/branches/" + std::to_string(k);
        const auto& jb = doc["branches"][k];
        if (!jb.is_object()) fail(path, "expected an object");
        Branch br;
        br.from = int_at(jb, path, "from");
        br.to = int_at(jb, path, "to");
        if (!ids.count(br.from)) fail(path + "/from", "dangling bus reference");
        if (!ids.count(br.to)) fail(path + "/to", "dangling bus reference");
        if (br.from == br.to) fail(path, "branch endpoints must differ");
        br.r = num_at(jb, path, "r", false, 0.0);
        br.x = num_at(jb, path, "x", true);
        if (br.x == 0.0) fail(path + "/x", "series reactance must be nonzero");
        br.b = num_at(jb, path, "b", false, 0.0);
        br.tap = num_at(jb, path, "tap", false, 1.0);
        if (!(br.tap > 0.0)) fail(path + "/tap", "must be positive");
        br.shift = num_at(jb, path, "shift", false, 0.0);
        c.branches.push_back(br);
    }

    if (doc.contains("devices")) {
        if (!doc["devices"].is_array()) fail("/devices", "expected array");
        for (size_t k = 0; k < doc["devices"].size(); ++k) {
            const std::string path = "/devices/" + std::to_string(k);
            const auto& jd = doc["devices"][k];
            if (!jd.is_object()) fail(path, "expected an object");
            DeviceSpec d;
            const std::string ty = jd.value("type", std::string());
            if (ty == "sm2") d.type = DeviceType::SynMachine;
            else if (ty == "gfl") d.type = DeviceType::Gfl;
            else if (ty == "zload") d.type = DeviceType::ZLoad;
            else fail(path + "/type", "expected sm2, gfl or zload");
            d.bus = int_at(jd, path, "bus");
            if (!ids.count(d.bus)) fail(path + "/bus", "dangling bus reference");
            d.id = jd.value("id", ty + "@" + std::to_string(d.bus));
            d.p = num_at(jd, path, "p", false, 0.0);
            d.q = num_at(jd, path, "q", false, 0.0);
            if (d.type == DeviceType::SynMachine) {
                d.h = num_at(jd, path, "h", true);
                d.xd1 = num_at(jd, path, "xd1", true);
                d.ra = num_at(jd, path, "ra", false, 0.0);
                d.damping = num_at(jd, path, "d", false, 0.0);
                if (!(d.h > 0.0)) fail(path + "/h", "must be positive");
                if (!(d.xd1 > 0.0)) fail(path + "/xd1", "must be positive");
            } else if (d.type == DeviceType::Gfl) {
                d.t_i = num_at(jd, path, "t_i", false, 0.02);
                d.t_f = num_at(jd, path, "t_f", false, 0.1);
                d.droop = num_at(jd, path, "droop", false, 0.05);
                if (!(d.t_i > 0.0)) fail(path + "/t_i", "must be positive");
                if (!(d.t_f > 0.0)) fail(path + "/t_f", "must be positive");
                if (!(d.droop > 0.0)) fail(path + "/droop", "must be positive");
            } else {
                if (d.p == 0.0 && d.q == 0.0) fail(path, "zload needs nonzero p or q");
            }
            c.devices.push_back(d);
        }
    }

    if (doc.contains("flags")) {
        if (!doc["flags"].is_object()) fail("/flags", "expected object");
        c.flags.embed_zloads = doc["flags"].value("embed_zloads", false);
    }
    return c;
}

SystemCase load_case(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("", "cannot open case file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

BlockMatrix build_admittance(const SystemCase& c) {
    const int n = c.n();
    BlockMatrix y(n);
    for (const auto& br : c.branches) {
        const int i = c.index_of(br.from);
        const int j = c.index_of(br.to);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ysh(0.0, 0.5 * br.b);
        const double a = br.tap;
        const Complex shift = std::polar(1.0, br.shift);
        y.add_block(i, i, mat2_of_complex((ys + ysh) / (a * a)));
        y.add_block(j, j, mat2_of_complex(ys + ysh));
        y.add_block(i, j, mat2_of_complex(-ys / (a * std::conj(shift))));
        y.add_block(j, i, mat2_of_complex(-ys / (a * shift)));
    }
    return y;
}

BlockMatrix impedance(const BlockMatrix& y) {
    try {
        return block_invert(y);
    } catch (const SingularMatrix&) {
        throw SingularNetwork();
    }
}

PowerFlowSolution solve_powerflow(const SystemCase& c) {
    const int n = c.n();
    const BlockMatrix yb = build_admittance(c);
    std::vector<std::vector<Complex>> Y(n, std::vector<Complex>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Y[i][j] = yb.block(i, j).to_complex();

    std::vector<double> v(n, 1.0), th(n, 0.0);
    std::vector<Complex> sched(n);
    std::vector<int> ang_idx, mag_idx;
    for (int k = 0; k < n; ++k) {
        sched[k] = c.scheduled_injection(k);
        switch (c.buses[k].type) {
            case BusType::Slack:
                v[k] = c.buses[k].v_set;
                break;
            case BusType::PV:
                v[k] = c.buses[k].v_set;
                ang_idx.push_back(k);
                break;
            case BusType::PQ:
                ang_idx.push_back(k);
                mag_idx.push_back(k);
                break;
        }
    }
    const int m = int(ang_idx.size() + mag_idx.size());

    auto mismatch = [&](const std::vector<double>& vv, const std::vector<double>& tt) {
        Eigen::VectorXd f(m);
        std::vector<Complex> V(n), I(n, Complex(0, 0));
        for (int k = 0; k < n; ++k) V[k] = std::polar(vv[k], tt[k]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) I[i] += Y[i][j] * V[j];
        int r = 0;
        for (int k : ang_idx) f(r++) = sched[k].real() - (V[k] * std::conj(I[k])).real();
        for (int k : mag_idx) f(r++) = sched[k].imag() - (V[k] * std::conj(I[k])).imag();
        return f;
    };

    const int max_iters = 50;
    double resid = 0.0;
    int it = 0;
    for (; it < max_iters; ++it) {
        Eigen::VectorXd f0 = mismatch(v, th);
        resid = f0.cwiseAbs().maxCoeff();
        if (resid < 1e-12) break;
        Eigen::MatrixXd J(m, m);
        const double h = 1e-7;
        for (int col = 0; col < m; ++col) {
            std::vector<double> v2 = v, t2 = th;
            if (col < int(ang_idx.size()))
                t2[ang_idx[col]] += h;
            else
                v2[mag_idx[col - ang_idx.size()]] += h;
            J.col(col) = (mismatch(v2, t2) - f0) / h;
        }
        Eigen::VectorXd dx = J.partialPivLu().solve(-f0);
        int r = 0;
        for (int k : ang_idx) th[k] += dx(r++);
        for (int k : mag_idx) v[k] += dx(r++);
    }
    if (!(resid < 1e-8)) throw NonConvergence(it, resid);

    PowerFlowSolution sol;
    sol.v = v;
    sol.theta = th;
    sol.iterations = it;
    sol.mismatch = resid;
    sol.s_inj.resize(n);
    std::vector<Complex> V(n);
    for (int k = 0; k < n; ++k) V[k] = std::polar(v[k], th[k]);
    for (int i = 0; i < n; ++i) {
        Complex I(0, 0);
        for (int j = 0; j < n; ++j) I += Y[i][j] * V[j];
        sol.s_inj[i] = V[i] * std::conj(I);
    }
    return sol;
}

}  // namespace gs
