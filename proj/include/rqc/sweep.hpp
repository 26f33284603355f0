#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dyson.hpp"
#include "observables.hpp"
#include "parallel.hpp"

namespace rqc {

// Grid sweeps over the probe trajectory (a, T) and target initial states
// (theta, phi). Evolution operators are cached per trajectory point and shared
// across target states; all reductions run in a fixed order so thread count
// cannot change any output byte.

enum class Objective { DeltaPhi, DeltaTheta };

struct SweepSpec {
    double a_min = 0.0, a_max = 2.3;
    int a_steps = 47;
    double t_min = 0.0, t_max = 1.5;
    int t_steps = 31;
    int theta_steps = 24;
    int phi_steps = 24;
    Objective objective = Objective::DeltaPhi;
    int refine_rounds = 3;
};

struct SweepRecord {
    std::optional<double> a, T;          // trajectory rows
    double theta0 = 0.0, phi0 = 0.0;     // target initial state
    std::optional<double> d_theta, d_phi, purity;
    std::optional<double> argmax_a, argmax_T;  // maximization rows
    std::string flags;
};

inline std::vector<double> linspace(double lo, double hi, int steps) {
    std::vector<double> out;
    if (steps <= 1) {
        out.push_back(lo);
        return out;
    }
    out.reserve(steps);
    for (int i = 0; i < steps; ++i)
        out.push_back(lo + (hi - lo) * static_cast<double>(i) / (steps - 1));
    return out;
}

// phi grid over (-pi, pi], matching the wrapping convention.
inline std::vector<double> phi_grid(int steps) {
    std::vector<double> out;
    out.reserve(steps);
    for (int k = 1; k <= steps; ++k)
        out.push_back(-kPi + 2.0 * kPi * static_cast<double>(k) / steps);
    return out;
}

namespace sweep_detail {

struct PointKey {
    std::uint64_t a_bits, t_bits;
    friend bool operator<(const PointKey& x, const PointKey& y) {
        return std::tie(x.a_bits, x.t_bits) < std::tie(y.a_bits, y.t_bits);
    }
    friend bool operator==(const PointKey& x, const PointKey& y) {
        return x.a_bits == y.a_bits && x.t_bits == y.t_bits;
    }
};

inline PointKey key_of(double a, double T) {
    PointKey k{};
    std::memcpy(&k.a_bits, &a, sizeof a);
    std::memcpy(&k.t_bits, &T, sizeof T);
    return k;
}

struct PointResult {
    bool ok = false;
    std::string error;
    EvolutionOperators ops;
};

}  // namespace sweep_detail

// Builds and caches evolution operators per (a, T); deterministic regardless
// of which thread computes which point.
class TrajectoryCache {
public:
    explicit TrajectoryCache(const SimulationConfig& base) : base_(base) {}

    void ensure(const std::vector<std::pair<double, double>>& pts, unsigned threads) {
        std::vector<std::pair<double, double>> missing;
        std::vector<sweep_detail::PointKey> keys;
        for (auto [a, T] : pts) {
            auto k = sweep_detail::key_of(a, T);
            if (cache_.count(k) == 0 &&
                std::find(keys.begin(), keys.end(), k) == keys.end()) {
                keys.push_back(k);
                missing.emplace_back(a, T);
            }
        }
        std::vector<sweep_detail::PointResult> results(missing.size());
        parallel_for(missing.size(), threads, [&](std::size_t i) {
            results[i] = compute(missing[i].first, missing[i].second);
        });
        for (std::size_t i = 0; i < missing.size(); ++i)
            cache_.emplace(keys[i], std::move(results[i]));
    }

    const sweep_detail::PointResult& at(double a, double T) const {
        return cache_.at(sweep_detail::key_of(a, T));
    }

private:
    sweep_detail::PointResult compute(double a, double T) const {
        sweep_detail::PointResult out;
        try {
            SimulationConfig c = base_;
            c.probe.motion.acceleration = a;
            c.probe.motion.flight_time = T;
            auto vc = ValidatedConfig::validate(c);
            AssembleOptions opts;
            opts.threads = 1;  // parallelism lives at the grid level
            out.ops = build_evolution(vc, opts);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        return out;
    }

    SimulationConfig base_;
    std::map<sweep_detail::PointKey, sweep_detail::PointResult> cache_;
};

struct CellEval {
    double d_theta = 0.0;
    std::optional<double> d_phi;
    double purity = 1.0;
};

inline CellEval evaluate_cell(const EvolutionOperators& ops, double theta0, double phi0) {
    ReducedState red = reduce_with_operators(ops, target_state(theta0, phi0));
    BlochRecord bi = bloch(red.initial);
    BlochRecord bf = bloch(red.final_state);
    CellEval out;
    out.d_theta = *bf.theta - *bi.theta;
    if (bi.phi && bf.phi) out.d_phi = wrap_angle(*bf.phi - *bi.phi);
    out.purity = bf.purity;
    return out;
}

// Rows ordered (a, T) ascending for one fixed target state. Failed points
// become flagged rows; the sweep always completes.
inline std::vector<SweepRecord> curve_sweep(const SimulationConfig& base,
                                            const std::vector<double>& a_list,
                                            const std::vector<double>& t_list,
                                            unsigned threads = 1) {
    TrajectoryCache cache(base);
    std::vector<std::pair<double, double>> pts;
    for (double a : a_list)
        for (double T : t_list) pts.emplace_back(a, T);
    cache.ensure(pts, threads);

    std::vector<SweepRecord> records;
    records.reserve(pts.size());
    for (double a : a_list) {
        for (double T : t_list) {
            SweepRecord r;
            r.a = a;
            r.T = T;
            r.theta0 = base.target.theta;
            r.phi0 = base.target.phi;
            const auto& pr = cache.at(a, T);
            if (!pr.ok) {
                r.flags = "error:" + pr.error;
            } else {
                CellEval ev = evaluate_cell(pr.ops, r.theta0, r.phi0);
                r.d_theta = ev.d_theta;
                r.d_phi = ev.d_phi ? *ev.d_phi : std::numeric_limits<double>::quiet_NaN();
                if (!ev.d_phi) r.flags = "phi-undefined";
                r.purity = ev.purity;
            }
            records.push_back(std::move(r));
        }
    }
    return records;
}

// Test seam: the default objective |d_phi| or |d_theta| can be replaced.
using ObjectiveFn =
    std::function<std::optional<double>(double a, double T, const CellEval&)>;

inline ObjectiveFn standard_objective(Objective obj) {
    return [obj](double, double, const CellEval& ev) -> std::optional<double> {
        if (obj == Objective::DeltaTheta) return std::abs(ev.d_theta);
        if (!ev.d_phi) return std::nullopt;
        return std::abs(*ev.d_phi);
    };
}

namespace sweep_detail {

struct Incumbent {
    bool valid = false;
    double value = -std::numeric_limits<double>::infinity();
    double a = 0.0, T = 0.0;
    CellEval eval;

    // ties go to the smaller acceleration, then the smaller flight time
    bool better(double v, double aa, double tt) const {
        if (!valid) return true;
        if (v != value) return v > value;
        if (aa != a) return aa < a;
        return tt < T;
    }
};

}  // namespace sweep_detail

inline std::vector<SweepRecord> maximize_with_objective(const SimulationConfig& base,
                                                        const SweepSpec& spec,
                                                        const ObjectiveFn& objective,
                                                        unsigned threads = 1) {
    auto a_list = linspace(spec.a_min, spec.a_max, spec.a_steps);
    auto t_list = linspace(spec.t_min, spec.t_max, spec.t_steps);
    auto theta_list = linspace(0.0, kPi, spec.theta_steps);
    auto phi_list = phi_grid(spec.phi_steps);

    TrajectoryCache cache(base);
    std::vector<std::pair<double, double>> pts;
    for (double a : a_list)
        for (double T : t_list) pts.emplace_back(a, T);
    cache.ensure(pts, threads);

    std::size_t failed_points = 0;
    for (auto [a, T] : pts)
        if (!cache.at(a, T).ok) ++failed_points;
    if (failed_points == pts.size())
        throw ConvergenceError("every trajectory grid point failed", {}, 0.0);

    struct Cell {
        double theta0, phi0;
        bool pole;
        sweep_detail::Incumbent best;
    };
    std::vector<Cell> cells;
    for (double th : theta_list)
        for (double ph : phi_list) {
            bool pole = std::sin(th) < 1e-9;
            cells.push_back({th, ph, pole, {}});
        }

    auto consider = [&](Cell& cell, double a, double T) {
        const auto& pr = cache.at(a, T);
        if (!pr.ok) return;
        CellEval ev = evaluate_cell(pr.ops, cell.theta0, cell.phi0);
        auto v = objective(a, T, ev);
        if (!v) return;
        if (cell.best.better(*v, a, T)) {
            cell.best.valid = true;
            cell.best.value = *v;
            cell.best.a = a;
            cell.best.T = T;
            cell.best.eval = ev;
        }
    };

    // exhaustive scan, cells in parallel, grid order fixed inside each cell
    bool phi_objective = spec.objective == Objective::DeltaPhi;
    parallel_for(cells.size(), threads, [&](std::size_t ci) {
        Cell& cell = cells[ci];
        if (cell.pole && phi_objective) return;  // azimuth degenerate
        for (double a : a_list)
            for (double T : t_list) consider(cell, a, T);
    });

    // local refinement: halve the grid step around each incumbent
    double step_a = spec.a_steps > 1 ? (spec.a_max - spec.a_min) / (spec.a_steps - 1) : 0.0;
    double step_t = spec.t_steps > 1 ? (spec.t_max - spec.t_min) / (spec.t_steps - 1) : 0.0;
    for (int round = 0; round < spec.refine_rounds; ++round) {
        step_a *= 0.5;
        step_t *= 0.5;
        if (step_a == 0.0 && step_t == 0.0) break;
        std::vector<std::pair<double, double>> wanted;
        std::vector<std::array<std::pair<double, double>, 8>> neighborhoods(cells.size());
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            Cell& cell = cells[ci];
            if (!cell.best.valid) continue;
            int slot = 0;
            for (int da = -1; da <= 1; ++da)
                for (int dt = -1; dt <= 1; ++dt) {
                    if (da == 0 && dt == 0) continue;
                    double a = std::clamp(cell.best.a + da * step_a, spec.a_min, spec.a_max);
                    double T = std::clamp(cell.best.T + dt * step_t, spec.t_min, spec.t_max);
                    neighborhoods[ci][slot++] = {a, T};
                    wanted.emplace_back(a, T);
                }
        }
        cache.ensure(wanted, threads);
        parallel_for(cells.size(), threads, [&](std::size_t ci) {
            Cell& cell = cells[ci];
            if (!cell.best.valid) return;
            for (const auto& [a, T] : neighborhoods[ci]) consider(cell, a, T);
        });
    }

    std::vector<SweepRecord> records;
    records.reserve(cells.size());
    for (const Cell& cell : cells) {
        SweepRecord r;
        r.theta0 = cell.theta0;
        r.phi0 = cell.phi0;
        if (cell.pole && phi_objective) {
            r.d_theta = std::numeric_limits<double>::quiet_NaN();
            r.d_phi = std::numeric_limits<double>::quiet_NaN();
            r.purity = std::numeric_limits<double>::quiet_NaN();
            r.flags = "pole";
        } else if (!cell.best.valid) {
            r.flags = "no-valid-point";
        } else {
            r.d_theta = cell.best.eval.d_theta;
            r.d_phi = cell.best.eval.d_phi
                          ? *cell.best.eval.d_phi
                          : std::numeric_limits<double>::quiet_NaN();
            r.purity = cell.best.eval.purity;
            r.argmax_a = cell.best.a;
            r.argmax_T = cell.best.T;
            if (cell.pole) r.flags = "pole";
        }
        if (failed_points > 0) {
            if (!r.flags.empty()) r.flags += ";";
            r.flags += "skipped-points=" + format_int(static_cast<long long>(failed_points));
        }
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<SweepRecord> maximize(const SimulationConfig& base,
                                         const SweepSpec& spec, unsigned threads = 1) {
    return maximize_with_objective(base, spec, standard_objective(spec.objective),
                                   threads);
}

// CSV with a fixed header, LF endings, shortest round-trip numbers. Absent
// cells stay empty; genuinely undefined values print as nan.
inline void write_csv(std::ostream& os, const std::vector<SweepRecord>& records,
                      const std::string& manifest_name = {}) {
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    if (!manifest_name.empty()) os << "# manifest=" << manifest_name << '\n';
    os << "a,T,theta0,phi0,d_theta,d_phi,purity,argmax_a,argmax_T,flags\n";
    for (const auto& r : records) {
        os << cell(r.a) << ',' << cell(r.T) << ',' << format_double(r.theta0) << ','
           << format_double(r.phi0) << ',' << cell(r.d_theta) << ',' << cell(r.d_phi)
           << ',' << cell(r.purity) << ',' << cell(r.argmax_a) << ','
           << cell(r.argmax_T) << ',' << r.flags << '\n';
    }
}

}  // namespace rqc
