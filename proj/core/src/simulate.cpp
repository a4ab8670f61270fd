#include "ergodrift/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ergodrift/errors.hpp"

namespace ergodrift {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ObservationRecord ObservationRecord::prefix(int n) const {
    if (n < 0 || n > transitions()) throw ValidationError("prefix length out of range");
    ObservationRecord r = *this;
    r.observations.resize(n + 1);
    return r;
}

void ObservationRecord::validate() const {
    if (!(delta_t > 0.0)) throw ValidationError("observation record needs delta_t > 0");
    if (observations.size() < 2) throw ValidationError("observation record needs at least 2 points");
    for (double x : observations) {
        if (!std::isfinite(x)) throw ValidationError("observation record contains a non-finite value");
    }
}

StationarySampler::StationarySampler(const InvariantDensity& pi) : grid_(pi.grid()) {
    const auto& v = pi.values();
    double h = grid_.spacing();
    cdf_.assign(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) cdf_[i] = cdf_[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
    double total = cdf_.back();
    for (double& c : cdf_) c /= total;
}

double StationarySampler::operator()(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    int i = static_cast<int>(it - cdf_.begin()) - 1;
    i = std::clamp(i, 0, grid_.size() - 2);
    double span = cdf_[i + 1] - cdf_[i];
    double t = span > 0.0 ? (u - cdf_[i]) / span : 0.5;
    return grid_.node(i) + std::clamp(t, 0.0, 1.0) * grid_.spacing();
}

double sample_stationary(const InvariantDensity& pi, Rng& rng) { return StationarySampler(pi)(rng); }

PathSample simulate_path(const Drift& b, double x0, double horizon, double fine_step, Rng& rng,
                         bool noise) {
    if (!(fine_step > 0.0) || !(horizon >= 0.0)) {
        throw ValidationError("simulate_path needs fine_step > 0 and horizon >= 0");
    }
    long steps = static_cast<long>(std::ceil(horizon / fine_step - 1e-9));
    double dt = steps > 0 ? horizon / steps : 0.0;
    double sq = std::sqrt(dt);
    PathSample p;
    p.times.reserve(steps + 1);
    p.states.reserve(steps + 1);
    double x = x0;
    p.times.push_back(0.0);
    p.states.push_back(x);
    for (long k = 1; k <= steps; ++k) {
        x += b(x) * dt + (noise ? sq * rng.normal() : 0.0);
        if (!std::isfinite(x)) throw SimulationFailure("Euler path left the finite range");
        p.times.push_back(k * dt);
        p.states.push_back(x);
    }
    return p;
}

double euler_advance(const Drift& b, double x, double span, double fine_step, Rng& rng) {
    long steps = std::max(1L, static_cast<long>(std::ceil(span / fine_step - 1e-9)));
    double dt = span / steps;
    double sq = std::sqrt(dt);
    for (long k = 0; k < steps; ++k) x += b(x) * dt + sq * rng.normal();
    if (!std::isfinite(x)) throw SimulationFailure("Euler path left the finite range");
    return x;
}

ObservationRecord discrete_observations(const Drift& b, const InvariantDensity& pi, double delta_t,
                                        int n, double fine_step, Rng& rng) {
    if (n < 1) throw ValidationError("discrete_observations needs n >= 1");
    if (!(delta_t > 0.0)) throw ValidationError("discrete_observations needs delta_t > 0");
    if (fine_step <= 0.0) fine_step = delta_t / 200.0;
    ObservationRecord r;
    r.delta_t = delta_t;
    r.observations.reserve(n + 1);
    double x = sample_stationary(pi, rng);
    r.observations.push_back(x);
    for (int i = 0; i < n; ++i) {
        x = euler_advance(b, x, delta_t, fine_step, rng);
        r.observations.push_back(x);
    }
    r.provenance = {b.label(), b.fingerprint(), rng.seed(), delta_t / std::ceil(delta_t / fine_step - 1e-9),
                    "euler"};
    return r;
}

ObservationRecord grid_chain_observations(const TransitionKernel& k, const InvariantDensity& pi,
                                          int n, Rng& rng, bool jitter) {
    if (n < 1) throw ValidationError("grid_chain_observations needs n >= 1");
    if (!(k.grid() == pi.grid())) throw ValidationError("kernel and density grids differ");
    const auto& g = k.grid();
    int size = g.size();
    double h = g.spacing();
    std::vector<double> cum(size);
    auto masses = pi.cell_masses();
    std::partial_sum(masses.begin(), masses.end(), cum.begin());
    Eigen::MatrixXd rows_cum(size, size);
    for (int i = 0; i < size; ++i) {
        double s = 0.0;
        for (int j = 0; j < size; ++j) rows_cum(j, i) = (s += k.matrix()(i, j));
    }
    auto report = [&](int node) {
        double x = g.node(node);
        if (!jitter) return x;
        double u = rng.uniform(-0.5, 0.5) * h;
        return std::clamp(x + u, g.lo(), g.hi());
    };
    ObservationRecord r;
    r.delta_t = k.delta_t() > 0.0 ? k.delta_t() : 1.0;
    int state = static_cast<int>(rng.categorical(cum.data(), size));
    r.observations.push_back(report(state));
    for (int i = 0; i < n; ++i) {
        state = static_cast<int>(rng.categorical(rows_cum.col(state).data(), size));
        r.observations.push_back(report(state));
    }
    r.provenance = {"grid_chain", 0, rng.seed(), 0.0, "grid_chain"};
    return r;
}

void write_observations_csv(const ObservationRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << "index,time,value\n";
    for (std::size_t i = 0; i < rec.observations.size(); ++i) {
        out << i << ',' << format_real(static_cast<double>(i) * rec.delta_t) << ','
            << format_real(rec.observations[i]) << '\n';
    }
}

void write_observations_metadata(const ObservationRecord& rec, const std::string& path) {
    nlohmann::ordered_json j;
    j["delta_t"] = rec.delta_t;
    j["transitions"] = rec.transitions();
    j["drift_label"] = rec.provenance.drift_label;
    j["drift_fingerprint"] = rec.provenance.drift_fingerprint;
    j["seed"] = rec.provenance.seed;
    j["fine_step"] = rec.provenance.fine_step;
    j["generator"] = rec.provenance.generator;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

ObservationRecord read_observations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open observations file '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("index,time,value", 0) != 0) {
        throw ValidationError("observations file must start with header index,time,value");
    }
    ObservationRecord r;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, t, v;
        if (!std::getline(ls, a, ',') || !std::getline(ls, t, ',') || !std::getline(ls, v)) {
            throw ValidationError("malformed observation line: " + line);
        }
        try {
            times.push_back(std::stod(t));
            r.observations.push_back(std::stod(v));
        } catch (const std::exception&) {
            throw ValidationError("malformed observation line: " + line);
        }
    }
    if (times.size() < 2) throw ValidationError("observations file needs at least two rows");
    r.delta_t = times[1] - times[0];
    r.provenance.generator = "file";
    r.validate();
    return r;
}

}  // namespace ergodrift
