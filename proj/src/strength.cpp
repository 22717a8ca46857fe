#include "gridstrength/strength.hpp"

#include <algorithm>
#include <cmath>

namespace gs {

namespace {

double max_abs(const BlockMatrix& m) {
    double r = 0.0;
    for (double x : m.data()) r = std::max(r, std::abs(x));
    return r;
}

double entry(const Mat2& m, int e) {
    switch (e) {
        case 0: return m.m11;
        case 1: return m.m12;
        case 2: return m.m21;
        default: return m.m22;
    }
}

Mat2 scaled(const Mat2& m, double s) { return m * s; }

}  // namespace

BlockSet assemble_device_blocks(const std::vector<Device>& devices, const Snapshot& snap, int n) {
    BlockSet s{BlockMatrix(n), BlockMatrix(n), BlockMatrix(n),
               BlockMatrix(n), BlockMatrix(n), BlockMatrix(n)};
    for (const auto& d : devices) {
        const StrengthBlocks b = device_blocks(d, snap);
        const int k = snap.index_of(d.bus());
        s.a.add_block(k, k, b.a);
        s.a1.add_block(k, k, b.a1);
        s.a2.add_block(k, k, b.a2);
        s.b1.add_block(k, k, b.b1);
        s.b2.add_block(k, k, b.b2);
        s.c2.add_block(k, k, b.c2);
    }
    return s;
}

ZeqChain zeq_chain(const BlockMatrix& z, const BlockSet& blocks) {
    const int n = z.blocks();
    const BlockMatrix eye = BlockMatrix::identity(n);
    auto resolvent = [&](const BlockMatrix& m, int order) {
        try {
            return block_invert(eye - z * m);
        } catch (const SingularMatrix&) {
            throw SingularResolvent(order);
        }
    };

    ZeqChain c;
    c.zeq = resolvent(blocks.a, 0) * z;
    const double resid = max_abs((eye - z * blocks.a) * c.zeq - z);
    if (!(resid < 1e-10))
        throw NumericalError("equivalent impedance residual too large: " + std::to_string(resid));
    c.zeq1 = resolvent(blocks.b1, 1) * (z * blocks.a1 * c.zeq);
    c.zeq2 = resolvent(blocks.c2, 2) * (z * blocks.a2 * c.zeq) + z * blocks.b2 * c.zeq1;
    return c;
}

StrengthResult strength_matrices(const Snapshot& snap, const ZeqChain& chain) {
    const int n = snap.n();
    BlockMatrix v_scalar_inv(n), rot_inv(n), v_vec_inv(n), e_plus(n), eta1_mean(n), eta2_mean(n);
    for (int k = 0; k < n; ++k) {
        const double vt = snap.v(k).arith_mean();
        if (!(std::abs(vt) > 0.0)) throw DegenerateVoltage();
        v_scalar_inv.set_block(k, k, Mat2::identity() * (1.0 / vt));
        rot_inv.set_block(k, k, mat2_of_complex(snap.rot_mean(k)).inverse());
        v_vec_inv.set_block(k, k, mat2_of_complex(snap.vbar_mean(k)).inverse());
        e_plus.set_block(k, k, mat2_of_complex(std::polar(1.0, snap.th_plus[k])));
        eta1_mean.set_block(
            k, k, mat2_of_complex(0.5 * (snap.eta1_minus[k] + snap.eta1_plus[k])));
        eta2_mean.set_block(
            k, k, mat2_of_complex(0.5 * (snap.eta2_minus[k] + snap.eta2_plus[k])));
    }

    StrengthResult r;
    r.s = v_scalar_inv * rot_inv * chain.zeq * e_plus;
    r.s1 = v_vec_inv * (chain.zeq1 - eta1_mean * chain.zeq) * e_plus;
    r.s2 = v_vec_inv * (chain.zeq2 - eta2_mean * chain.zeq) * e_plus;
    return r;
}

Snapshot solve_post_state(System& sys, const Disturbance& dist) {
    const int n = sys.n();
    Snapshot snap;
    snap.bus_ids.resize(n);
    for (int k = 0; k < n; ++k) snap.bus_ids[k] = sys.spec().buses[k].id;

    const std::vector<Complex> v_pre = sys.voltages();
    snap.v_minus.resize(n);
    snap.th_minus.resize(n);
    for (int k = 0; k < n; ++k) {
        snap.v_minus[k] = std::abs(v_pre[k]);
        snap.th_minus[k] = std::arg(v_pre[k]);
    }
    snap.eta1_minus = sys.cf_first(v_pre);
    snap.eta2_minus = sys.cf_second(v_pre, snap.eta1_minus);

    sys.apply_disturbance(dist);

    const std::vector<Complex> v_post = sys.voltages();
    snap.v_plus.resize(n);
    snap.th_plus.resize(n);
    for (int k = 0; k < n; ++k) {
        snap.v_plus[k] = std::abs(v_post[k]);
        // keep the jump on the short way around the circle
        snap.th_plus[k] =
            snap.th_minus[k] + std::remainder(std::arg(v_post[k]) - snap.th_minus[k], 2.0 * M_PI);
    }
    snap.eta1_plus = sys.cf_first(v_post);
    snap.eta2_plus = sys.cf_second(v_post, snap.eta1_plus);

    snap.devices = sys.devices();  // frozen across the jump
    return snap;
}

Snapshot solve_post_state(const SystemCase& c, const Disturbance& dist) {
    System sys(c);
    return solve_post_state(sys, dist);
}

JumpPrediction predict_jump(const StrengthResult& r, int bus_index, ClarkeVec di_pq) {
    const ClarkeVec d = -di_pq;  // draw -> framework injection
    JumpPrediction out;
    out.dv_vtheta = r.s.block(bus_index, bus_index) * d;
    out.deta1 = r.s1.block(bus_index, bus_index) * d;
    out.deta2 = r.s2.block(bus_index, bus_index) * d;
    return out;
}

std::vector<JumpPrediction> predict_all(const StrengthResult& r, int bus_index, ClarkeVec di_pq) {
    const ClarkeVec d = -di_pq;
    std::vector<JumpPrediction> out(r.s.blocks());
    for (int j = 0; j < r.s.blocks(); ++j) {
        out[j].dv_vtheta = r.s.block(j, bus_index) * d;
        out[j].deta1 = r.s1.block(j, bus_index) * d;
        out[j].deta2 = r.s2.block(j, bus_index) * d;
    }
    return out;
}

AbsoluteJump absolute_jump(ClarkeVec dv_vtheta, double v_minus) {
    AbsoluteJump out;
    const double denom = 1.0 - 0.5 * dv_vtheta.d;
    if (!(std::abs(denom) > 0.0)) throw DegenerateMagnitude();
    out.dv = dv_vtheta.d * v_minus / denom;
    out.dtheta = 2.0 * std::atan(0.5 * dv_vtheta.q);
    return out;
}

IndicatorTable normalize_report(std::vector<BusIndicators> rows) {
    IndicatorTable t;
    t.raw = std::move(rows);
    t.order_max = {0.0, 0.0, 0.0};
    auto order_block = [](const BusIndicators& r, int o) -> const Mat2& {
        return o == 0 ? r.s0 : o == 1 ? r.s1 : r.s2;
    };
    for (const auto& r : t.raw)
        for (int o = 0; o < 3; ++o)
            for (int e = 0; e < 4; ++e)
                t.order_max[o] = std::max(t.order_max[o], std::abs(entry(order_block(r, o), e)));

    t.normalized = t.raw;
    for (auto& r : t.normalized) {
        r.s0 = scaled(r.s0, t.order_max[0] > 0.0 ? 1.0 / t.order_max[0] : 0.0);
        r.s1 = scaled(r.s1, t.order_max[1] > 0.0 ? 1.0 / t.order_max[1] : 0.0);
        r.s2 = scaled(r.s2, t.order_max[2] > 0.0 ? 1.0 / t.order_max[2] : 0.0);
    }

    for (int o = 0; o < 3; ++o) {
        for (int e = 0; e < 4; ++e) {
            std::vector<std::pair<double, int>> keyed;
            keyed.reserve(t.raw.size());
            for (const auto& r : t.raw)
                keyed.emplace_back(std::abs(entry(order_block(r, o), e)), r.bus_id);
            std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            t.rankings[o][e].clear();
            for (const auto& [mag, id] : keyed) t.rankings[o][e].push_back(id);
        }
    }
    return t;
}

}  // namespace gs
