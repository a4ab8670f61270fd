#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ergodrift/errors.hpp"
#include "ergodrift/lab.hpp"
#include "ergodrift/wavelet.hpp"

#ifndef ERGODRIFT_VERSION
#define ERGODRIFT_VERSION "unknown"
#endif

using namespace ergodrift;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    ExperimentConfig cfg;
    std::uint64_t seed = 0;
    fs::path out;
    std::vector<std::string> outputs;

    std::string file(const std::string& name) {
        outputs.push_back(name);
        return (out / name).string();
    }
    json section(const char* key) const { return cfg.raw.value(key, json::object()); }
};

void cmd_simulate(Run& r) {
    int n = r.section("simulate").value("n", r.cfg.n_schedule.back());
    if (n < 1) throw ValidationError("simulate.n must be >= 1");
    ModelCache cache(r.cfg.grid, r.cfg.delta_t);
    Rng rng(r.seed);
    auto rec = generate_record(r.cfg, cache, n, rng);
    write_observations_csv(rec, r.file("observations.csv"));
    write_observations_metadata(rec, r.file("observations.json"));
}

void cmd_kernel(Run& r) {
    auto format = r.section("kernel").value("format", std::string("text"));
    if (format != "text" && format != "binary") throw ValidationError("kernel.format must be text or binary");
    auto k = transition_kernel(r.cfg.true_drift, r.cfg.grid, r.cfg.delta_t);
    write_kernel(k, r.file(format == "text" ? "kernel.txt" : "kernel.bin"),
                 format == "text" ? KernelFileFormat::text : KernelFileFormat::binary);
    auto pi = invariant_density(r.cfg.true_drift, r.cfg.grid);
    std::ofstream out(r.file("invariant.csv"));
    out << "index,x,density\n";
    for (int i = 0; i < r.cfg.grid.size(); ++i) {
        out << i << ',' << format_real(r.cfg.grid.node(i)) << ',' << format_real(pi.values()[i]) << '\n';
    }
}

void cmd_prior_draw(Run& r) {
    int count = r.section("prior_draw").value("count", 10);
    if (count < 1) throw ValidationError("prior_draw.count must be >= 1");
    Rng rng(r.seed);
    fs::create_directories(r.out / "coefficients");
    std::ofstream summary(r.file("draws.csv"));
    std::ofstream values(r.file("draw_values.csv"));
    summary << "draw,label,fingerprint,support_radius,sup_bound,holder_certificate,ergodicity,coefficient_file\n";
    values << "draw,x,value\n";
    const auto& g = r.cfg.grid;
    for (int d = 0; d < count; ++d) {
        Drift b = r.cfg.prior.sampler(rng);
        std::string file;
        double holder = std::nan("");
        if (const auto* w = std::get_if<WaveletRepr>(&b.representation())) {
            file = "coefficients/draw_" + std::to_string(d) + ".csv";
            write_coefficients_csv(*w->coefficients, r.file(file));
            holder = holder_certificate(*w->coefficients).value();
        }
        auto verdict = check_ergodicity(b, {16, 32, 64}).verdict;
        summary << d << ',' << b.label() << ',' << b.fingerprint() << ',' << format_real(b.support_radius()) << ','
                << format_real(b.sup_bound()) << ',' << format_real(holder) << ',' << to_string(verdict) << ','
                << file << '\n';
        for (int i = 0; i < g.size(); ++i) values << d << ',' << format_real(g.node(i)) << ',' << format_real(b(g.node(i))) << '\n';
    }
}

void cmd_fit(Run& r) {
    auto section = r.section("fit");
    auto cache = std::make_shared<ModelCache>(r.cfg.grid, r.cfg.delta_t);
    Rng rng(r.seed);
    Rng data_rng = rng.split(0), post_rng = rng.split(1);
    ObservationRecord rec;
    if (section.contains("observations")) {
        rec = read_observations_csv(section.at("observations").get<std::string>());
    } else {
        rec = generate_record(r.cfg, *cache, section.value("n", r.cfg.n_schedule.back()), data_rng);
        write_observations_csv(rec, r.file("observations.csv"));
        write_observations_metadata(rec, r.file("observations.json"));
    }
    if (std::abs(rec.delta_t - r.cfg.delta_t) > 1e-9 * r.cfg.delta_t) {
        throw ValidationError("observation spacing does not match delta_t");
    }
    LikelihoodContext ctx(rec, cache, r.cfg.true_drift);
    auto ens = fit_posterior(r.cfg, ctx, post_rng);
    write_ensemble_csv(ens, r.file("ensemble.csv"), (r.out / "members").string());

    auto nu = r.cfg.nu();
    auto m0 = cache->get(r.cfg.true_drift);
    std::vector<GridFunction> p0f;
    for (const auto& id : r.cfg.test_functions) p0f.push_back(apply_operator(m0->kernel, sample_on(r.cfg.grid, test_function(id).f)));
    // Chain members repeat; one transient model per distinct drift.
    std::map<std::uint64_t, std::vector<double>> distances;
    for (const auto& m : ens.members) {
        auto key = m.drift.fingerprint();
        if (distances.count(key)) continue;
        auto model = cache->transient(m.drift);
        auto& d = distances[key];
        for (std::size_t fi = 0; fi < p0f.size(); ++fi) {
            auto f = sample_on(r.cfg.grid, test_function(r.cfg.test_functions[fi]).f);
            d.push_back(weak_distance(apply_operator(model->kernel, f), p0f[fi], nu));
        }
    }
    std::ofstream out(r.file("posterior_summary.csv"));
    out << "test_function,epsilon,complement_mass,ess,acceptance_rate\n";
    for (std::size_t fi = 0; fi < p0f.size(); ++fi) {
        for (double eps : r.cfg.epsilons) {
            double mass = posterior_probability(
                ens, [&](const Drift& b) { return distances.at(b.fingerprint())[fi] > eps; });
            out << r.cfg.test_functions[fi] << ',' << format_real(eps) << ',' << format_real(mass) << ','
                << format_real(ens.ess) << ',' << format_real(ens.acceptance_rate) << '\n';
        }
    }
}

void cmd_consistency(Run& r) {
    auto curve = run_consistency_experiment(r.cfg, r.seed);
    write_consistency_csv(curve, r.file("consistency.csv"));
    write_consistency_summary_csv(curve, r.file("consistency_summary.csv"));
}

void cmd_audit_kl(Run& r) {
    Rng rng(r.seed);
    Rng kl_rng = rng.split(0), mass_rng = rng.split(1);
    auto audit = kl_audit(r.cfg.prior.sampler, r.cfg.true_drift, r.cfg.delta_t, r.cfg.kl.n_pairs, r.cfg.grid, kl_rng,
                          r.cfg.workers);
    write_kl_audit_csv(audit, r.file("kl_audit.csv"));
    auto pi0 = invariant_density(r.cfg.true_drift, r.cfg.grid);
    write_prior_mass_csv(prior_mass_probe(r.cfg.prior.sampler, r.cfg.true_drift, r.cfg.prior_mass.epsilons,
                                          r.cfg.prior_mass.n_draws, pi0, mass_rng),
                         r.file("prior_mass.csv"));
}

void cmd_audit_equicontinuity(Run& r) {
    const auto& e = r.cfg.equicontinuity;
    Rng rng(r.seed);
    auto t = equicontinuity_probe(r.cfg.prior.sampler, e.n_draws, test_function(e.test_function).f, r.cfg.delta_t,
                                  e.compact, e.deltas, r.cfg.grid, rng);
    write_equicontinuity_csv(t, r.file("equicontinuity.csv"));
}

void cmd_martingale(Run& r) {
    auto audit = supermartingale_audit(r.cfg, r.seed);
    write_martingale_csv(audit, r.file("martingale.csv"));
    write_martingale_summary_csv(audit, r.file("martingale_summary.csv"));
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

int execute(const std::string& name, const std::function<void(Run&)>& body, const std::string& config_path,
            std::uint64_t seed, const std::string& out_dir) {
    auto start = std::chrono::steady_clock::now();
    json manifest{{"command", name}, {"version", ERGODRIFT_VERSION}, {"config_path", config_path},
                  {"seed", seed}};
    Run run;
    run.seed = seed;
    run.out = out_dir;
    int code = 0;
    try {
        fs::create_directories(run.out);
        run.cfg = load_experiment_config_file(config_path);
        manifest["config_hash"] = hex(fnv1a_string(run.cfg.raw.dump()));
        body(run);
        manifest["status"] = "ok";
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        manifest["status"] = "validation_error";
        manifest["error"] = e.what();
        code = 2;
    } catch (const BudgetExceeded& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        manifest["status"] = "validation_error";
        manifest["error"] = e.what();
        code = 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        manifest["status"] = "numeric_failure";
        manifest["error"] = e.what();
        code = 3;
    }
    manifest["outputs"] = run.outputs;
    manifest["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::error_code ec;
    if (fs::is_directory(run.out, ec)) std::ofstream(run.out / "manifest.json") << manifest.dump(2) << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian drift estimation for scalar ergodic diffusions"};
    app.set_version_flag("--version", std::string(ERGODRIFT_VERSION));
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        std::function<void(Run&)> body;
    };
    std::vector<Command> commands{
        {"simulate", "simulate discrete observations from the true drift", cmd_simulate},
        {"kernel", "write the transition kernel and invariant density of the true drift", cmd_kernel},
        {"prior-draw", "draw drifts from the prior", cmd_prior_draw},
        {"fit", "posterior ensemble for one observation record", cmd_fit},
        {"consistency", "posterior complement mass over the n schedule", cmd_consistency},
        {"audit-kl", "KL bound audit and small-ball prior mass", cmd_audit_kl},
        {"audit-equicontinuity", "shared modulus of continuity over prior draws", cmd_audit_equicontinuity},
        {"martingale", "D_n / M_n supermartingale audit", cmd_martingale},
    };
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    const Command* chosen = nullptr;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "root seed")->default_val(0);
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->callback([&chosen, &c] { chosen = &c; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return execute(chosen->name, chosen->body, config_path, seed, out_dir);
}
