#include "thinfilm/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "thinfilm/pentadiag.hpp"
#include "thinfilm/spectral.hpp"

namespace thinfilm {

void StepControls::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(dt_min > 0.0) || !(dt_max >= dt_min)) throw std::invalid_argument("need 0 < dt_min <= dt_max");
    if (!(dt_init > 0.0)) throw std::invalid_argument("dt_init must be positive");
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (n_max < 8 || !is_power_of_two(n_max)) throw std::invalid_argument("n_max must be a power of two >= 8");
    if (!(touchdown_report > 0.0)) throw std::invalid_argument("touchdown_report must be positive");
    if (fixed_dt < 0.0) throw std::invalid_argument("fixed_dt must be >= 0");
    if (!(tail_fraction > 0.0) || !(tail_fraction < 1.0))
        throw std::invalid_argument("tail_fraction must lie in (0,1)");
    if (!(roundoff_level > 0.0)) throw std::invalid_argument("roundoff_level must be positive");
    if (snapshot_every < 0) throw std::invalid_argument("snapshot_every must be >= 0");
    if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
}

const char* to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::TouchDown: return "touch_down";
        case OutcomeKind::BlowUp: return "blow_up";
        case OutcomeKind::RelaxedToConstant: return "relaxed_to_constant";
        case OutcomeKind::RelaxedToPeriodic: return "relaxed_to_periodic";
        case OutcomeKind::HorizonReached: return "horizon_reached";
        case OutcomeKind::ResolutionExhausted: return "resolution_exhausted";
    }
    return "unknown";
}

PeriodicField cn_step(const PeriodicField& current, const PeriodicField& previous,
                      double prev_dt, double dt, const ModelParams& params) {
    const int n = current.size();
    if (previous.size() != n || previous.X != current.X)
        throw std::invalid_argument("cn_step: current/previous mesh mismatch");
    if (!(dt > 0.0)) throw std::invalid_argument("cn_step: dt must be positive");
    const double dx = current.dx();
    const double dx2 = dx * dx;
    const double dx3 = dx2 * dx;
    const double dx4 = dx2 * dx2;

    // Coefficient field at t + dt/2 by linear extrapolation of the last two levels.
    std::vector<double> half(n);
    if (prev_dt > 0.0) {
        const double c = 0.5 * dt / prev_dt;
        for (int j = 0; j < n; ++j)
            half[j] = current.values[j] + c * (current.values[j] - previous.values[j]);
    } else {
        half = current.values;
    }

    // Interface coefficients: w multiplies the third difference, s the first.
    // Both are interface averages, so a steady profile of the matching finite
    // difference equation zeroes every interface flux exactly.
    std::vector<double> w(n), s(n);
    {
        std::vector<double> mob(n), rat(n);
        for (int j = 0; j < n; ++j) {
            mob[j] = params.mobility(half[j]);
            rat[j] = params.ratio(half[j]);
        }
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n;
            w[i] = 0.5 * (mob[ip] + mob[i]);
            s[i] = w[i] * 0.5 * (rat[ip] + rat[i]);
        }
    }

    auto wrap = [n](int j) { return (j % n + n) % n; };

    // Explicit fluxes of the current level; rhs is their divergence scaled by -dt.
    const std::vector<double>& h = current.values;
    std::vector<double> flux(n);
    for (int i = 0; i < n; ++i) {
        const double t3 = h[wrap(i + 2)] - 3.0 * h[wrap(i + 1)] + 3.0 * h[i] - h[wrap(i - 1)];
        flux[i] = w[i] * t3 / dx3 + s[i] * (h[wrap(i + 1)] - h[i]) / dx;
    }
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = -dt * (flux[i] - flux[wrap(i - 1)]) / dx;

    // L = I + (dt/2) K for the frozen-coefficient linear operator K.
    const double c4 = 0.5 * dt / dx4;
    PentaBands bands;
    for (auto& band : bands) band.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int im = wrap(i - 1);
        const double wi = w[i], wm = w[im];
        const double si = dx2 * s[i], sm = dx2 * s[im];
        bands[0][i] = c4 * wm;
        bands[1][i] = c4 * (-wi - 3.0 * wm + sm);
        bands[2][i] = 1.0 + c4 * (3.0 * wi + 3.0 * wm - si - sm);
        bands[3][i] = c4 * (-3.0 * wi - wm + si);
        bands[4][i] = c4 * wi;
    }

    std::vector<double> delta = PentaCyclic(bands).solve(rhs);

    // The exact scheme keeps the mean invariant (telescoping fluxes and unit column
    // sums); enforce that invariant against solver roundoff.
    double mean = 0.0;
    for (double v : delta) mean += v;
    mean /= n;

    PeriodicField out = current;
    for (int j = 0; j < n; ++j) out.values[j] = h[j] + (delta[j] - mean);
    return out;
}

AdaptiveStepInfo adaptive_step(EvolutionState& state, const ModelParams& params, const StepControls& controls) {
    AdaptiveStepInfo info;
    double dt = std::clamp(state.dt, controls.dt_min, controls.dt_max);
    bool halved = false;

    for (;;) {
        double err = std::numeric_limits<double>::infinity();
        PeriodicField h2;
        bool ok = true;
        try {
            PeriodicField h1 = cn_step(state.current, state.previous, state.prev_dt, dt, params);
            PeriodicField hm = cn_step(state.current, state.previous, state.prev_dt, 0.5 * dt, params);
            h2 = cn_step(hm, state.current, 0.5 * dt, 0.5 * dt, params);
            err = linf_distance(h1, h2);
            for (double v : h2.values)
                if (!std::isfinite(v)) ok = false;
        } catch (const numeric_error&) {
            ok = false;  // degenerate linear system at this dt; retry smaller
        }

        if (!ok || !(err <= controls.epsilon)) {
            dt *= 0.5;
            halved = true;
            ++info.halvings;
            if (dt < controls.dt_min)
                throw numeric_error("adaptive step size collapsed below dt_min");
            continue;
        }
        if (err < 0.1 * controls.epsilon && dt < controls.dt_max) {
            if (!halved) {
                dt = std::min(2.0 * dt, controls.dt_max);
                ++info.doublings;
                continue;  // retry the larger step before accepting anything
            }
        } else if (err < 0.1 * controls.epsilon) {
            info.accepted_at_cap = true;
        }

        state.previous = state.current;
        state.current = h2;
        state.prev_dt = dt;
        state.t += dt;
        state.dt = dt;
        ++state.step_index;
        info.error = err;
        return info;
    }
}

namespace {

struct Saved {
    double t, dt, prev_dt;
    long step_index;
    PeriodicField current, previous;
};

}  // namespace

RunRecord evolve_run(const PeriodicField& initial, const ModelParams& params,
                     const StepControls& controls, const RunProbes& probes) {
    const auto t_begin = std::chrono::steady_clock::now();
    params.validate();
    controls.validate();
    if (initial.min() <= 0.0) throw std::invalid_argument("evolve_run: initial field must be positive");
    if (initial.size() > controls.n_max)
        throw std::invalid_argument("evolve_run: initial mesh finer than n_max");

    StepControls eff = controls;
    if (eff.blowup_threshold <= 0.0) eff.blowup_threshold = 1e3 * initial.max();

    RunRecord rec;
    rec.params = params;

    EvolutionState st;
    st.current = initial;
    // Refine under-resolved initial data before stepping.
    while (st.current.size() < eff.n_max &&
           !is_resolved(power_spectrum(st.current), eff.tail_fraction, eff.roundoff_level))
        st.current = zero_pad_double(st.current);
    st.previous = st.current;
    st.prev_dt = 0.0;
    st.dt = eff.fixed_dt > 0.0 ? eff.fixed_dt : std::clamp(eff.dt_init, eff.dt_min, eff.dt_max);
    rec.controls = eff;
    rec.mesh_history.push_back({0.0, st.current.size()});

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto diagnose = [&](const PeriodicField& f, double dt_used) {
        SeriesRow row;
        row.t = st.t;
        row.dt = dt_used;
        row.hmin = f.min();
        row.hmax = f.max();
        row.mass = mass(f);
        row.energy = (probes.energy && row.hmin > 0.0) ? probes.energy(f) : nan;
        row.resolved = is_resolved(power_spectrum(f), eff.tail_fraction, eff.roundoff_level);
        return row;
    };

    std::vector<Saved> ring;
    auto remember = [&]() {
        ring.push_back({st.t, st.dt, st.prev_dt, st.step_index, st.current, st.previous});
        if (ring.size() > 8) ring.erase(ring.begin());
        rec.last_resolved = st.current;
        rec.t_last_resolved = st.t;
    };

    {
        SeriesRow row0 = diagnose(st.current, 0.0);
        rec.series.push_back(row0);
        if (row0.resolved) remember();
        else rec.last_resolved = st.current;  // best available
    }

    Outcome& oc = rec.outcome;
    for (;;) {
        const double hmin = st.current.min();
        const double hmax = st.current.max();
        if (hmin <= 0.0) {
            oc.kind = OutcomeKind::TouchDown;
            oc.detail = "minimum height reached zero";
            oc.value = hmin;
            break;
        }
        if (hmax >= eff.blowup_threshold) {
            oc.kind = OutcomeKind::BlowUp;
            oc.detail = "maximum height reached the blow-up threshold";
            oc.value = hmax;
            break;
        }
        if (st.t >= eff.t_max * (1.0 - 1e-12)) {
            oc.kind = OutcomeKind::HorizonReached;
            oc.detail = "time horizon reached";
            break;
        }
        if (eff.max_steps > 0 && st.step_index >= eff.max_steps) {
            oc.kind = OutcomeKind::HorizonReached;
            oc.detail = "accepted-step budget exhausted before t_max";
            break;
        }

        try {
            if (eff.fixed_dt > 0.0) {
                PeriodicField next = cn_step(st.current, st.previous, st.prev_dt, eff.fixed_dt, params);
                for (double v : next.values)
                    if (!std::isfinite(v)) throw numeric_error("fixed-dt step produced non-finite values");
                st.previous = st.current;
                st.current = next;
                st.prev_dt = eff.fixed_dt;
                st.t += eff.fixed_dt;
                ++st.step_index;
            } else {
                adaptive_step(st, params, eff);
            }
        } catch (const numeric_error& e) {
            oc.kind = OutcomeKind::ResolutionExhausted;
            oc.detail = e.what();
            break;
        }

        SeriesRow row = diagnose(st.current, eff.fixed_dt > 0.0 ? eff.fixed_dt : st.dt);

        if (!row.resolved && st.current.size() < eff.n_max && !ring.empty()) {
            // Spectral tail contaminated: back up to the last resolved state and
            // restart from it on a doubled mesh.
            const Saved& back = ring.back();
            st.t = back.t;
            st.dt = back.dt;
            st.step_index = back.step_index;
            st.current = zero_pad_double(back.current);
            st.previous = st.current;
            st.prev_dt = 0.0;
            rec.mesh_history.push_back({st.t, st.current.size()});
            ring.clear();
            remember();
            continue;
        }

        rec.series.push_back(row);
        if (row.resolved) remember();
        if (eff.snapshot_every > 0 && st.step_index % eff.snapshot_every == 0)
            rec.snapshots.push_back({st.t, st.step_index, st.current});
    }

    oc.t_stop = st.t;
    oc.t_last_resolved = rec.t_last_resolved;
    rec.final_state = st.current;

    if (oc.kind == OutcomeKind::TouchDown)
        oc.locations = touchdown_locations(rec.last_resolved, eff.touchdown_report);

    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return rec;
}

std::vector<double> touchdown_locations(const PeriodicField& f, double report_level) {
    // The relative fallback keeps the report meaningful when the last resolved state
    // sits a few rolled-back steps before the actual touch-down.
    const double level = std::max(report_level, 10.0 * f.min());
    std::vector<double> out;
    for (int j : local_minima_indices(f.values))
        if (f.values[static_cast<size_t>(j)] <= level) out.push_back(f.x(j));
    if (out.empty()) {
        int jmin = 0;
        for (int j = 1; j < f.size(); ++j)
            if (f.values[static_cast<size_t>(j)] < f.values[static_cast<size_t>(jmin)]) jmin = j;
        out.push_back(f.x(jmin));
    }
    return out;
}

}  // namespace thinfilm
