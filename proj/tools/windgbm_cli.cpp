#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "windgbm/evaluation.hpp"
#include "windgbm/forecaster.hpp"
#include "windgbm/log.hpp"
#include "windgbm/snapshot.hpp"
#include "windgbm/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace windgbm;

namespace {

/// Bad input the user can fix: reported with exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

struct Options {
    std::string data;
    std::string config;
    std::string out;
    std::string resume;
    double alpha = 0.5;
    std::uint64_t seed = 1;
    std::size_t steps = 1000;
    int refit_every = 0;
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

struct Inputs {
    RunConfig config;
    std::string config_text;  // canonical JSON of the effective config
    std::string data_hash;
    SeriesFrame frame;
};

RunConfig read_config(const Options& o) {
    RunConfig c;
    if (!o.config.empty()) {
        try {
            c = config_from_json_text(read_file(o.config));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("invalid config: ") + e.what());
        }
    }
    if (o.refit_every > 0) c.refit_every = o.refit_every;
    return c;
}

Inputs load_inputs(const Options& o) {
    Inputs in;
    in.config = read_config(o);
    in.config_text = config_to_json_text(in.config);
    if (o.data.empty()) throw UsageError("--data is required");
    const std::string bytes = read_file(o.data);
    in.data_hash = sha256_hex(bytes);
    in.frame = parse_csv(bytes, in.config);
    return in;
}

void write_manifest(const std::string& command, const Options& o, const std::string& config_text,
                    const std::string& data_hash, const json& extra = json::object()) {
    json m;
    m["command"] = command;
    m["config_sha256"] = sha256_hex(config_text);
    m["config"] = json::parse(config_text);
    m["input"] = o.data;
    m["input_sha256"] = data_hash;
    m["seed"] = o.seed;
    m["output"] = o.out;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream out(o.out + ".manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest for " + o.out);
    out << m.dump(2) << '\n';
}

synth::Profile profile_from(const json& j, synth::Profile p) {
    p.base = j.value("base", p.base);
    p.amplitude = j.value("amplitude", p.amplitude);
    p.period = j.value("period", p.period);
    return p;
}

synth::SimSpec sim_spec(const Options& o) {
    synth::SimSpec spec;
    if (!o.config.empty()) {
        try {
            const json j = json::parse(read_file(o.config));
            spec.delta_t = j.value("delta_t", spec.delta_t);
            if (j.contains("mu")) spec.mu_profile = profile_from(j.at("mu"), spec.mu_profile);
            if (j.contains("sigma"))
                spec.sigma_profile = profile_from(j.at("sigma"), spec.sigma_profile);
            spec.s0 = j.value("s0", spec.s0);
            if (j.contains("curve")) {
                const auto& c = j.at("curve");
                spec.true_curve.level = c.value("level", spec.true_curve.level);
                spec.true_curve.steepness = c.value("steepness", spec.true_curve.steepness);
                spec.true_curve.midpoint = c.value("midpoint", spec.true_curve.midpoint);
            }
            spec.sigma_f_true = j.value("sigma_f", spec.sigma_f_true);
            spec.obs_noise_var = j.value("obs_noise_var", spec.obs_noise_var);
            spec.spacing_seconds = j.value("spacing_seconds", spec.spacing_seconds);
        } catch (const json::exception& e) {
            throw UsageError(std::string("invalid simulation config: ") + e.what());
        }
    }
    spec.n_steps = o.steps;
    spec.seed = o.seed;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid simulation config: ") + e.what());
    }
    return spec;
}

json sim_spec_json(const synth::SimSpec& s) {
    const auto prof = [](const synth::Profile& p) {
        return json{{"base", p.base}, {"amplitude", p.amplitude}, {"period", p.period}};
    };
    return {{"n_steps", s.n_steps},
            {"delta_t", s.delta_t},
            {"mu", prof(s.mu_profile)},
            {"sigma", prof(s.sigma_profile)},
            {"s0", s.s0},
            {"curve",
             {{"level", s.true_curve.level},
              {"steepness", s.true_curve.steepness},
              {"midpoint", s.true_curve.midpoint}}},
            {"sigma_f", s.sigma_f_true},
            {"obs_noise_var", s.obs_noise_var},
            {"spacing_seconds", s.spacing_seconds},
            {"seed", s.seed}};
}

void run_simulate(const Options& o) {
    const synth::SimSpec spec = sim_spec(o);
    const synth::Simulation sim = synth::simulate(spec);
    write_csv(o.out, sim.frame);
    synth::write_truth_csv(o.out + ".truth", sim);
    const std::string spec_text = sim_spec_json(spec).dump();
    write_manifest("simulate", o, spec_text, "", {{"clamp_events", sim.clamp_events}});
    std::cout << "wrote " << sim.frame.size() << " rows to " << o.out << " (" << sim.clamp_events
              << " clamp events)\n";
}

void run_fit(const Options& o) {
    const Inputs in = load_inputs(o);
    const auto [train, test] = split_train_test(in.frame, in.config);
    const PipelineState state = fit_pipeline(train, in.config);
    save_snapshot(o.out, state);
    write_manifest("fit", o, in.config_text, in.data_hash,
                   {{"train_rows", train.size()},
                    {"delta", state.curve.delta},
                    {"gamma", state.curve.gamma},
                    {"sigma_f", state.curve.sigma_f},
                    {"q_mu", state.hyper.q_mu},
                    {"q_sigma", state.hyper.q_sigma},
                    {"sigma_z2", state.hyper.sigma_z2}});
    std::cout << "fitted on " << train.size() << " rows; snapshot in " << o.out << '\n';
}

void run_forecast(const Options& o) {
    const Inputs in = load_inputs(o);
    const auto [train, test] = split_train_test(in.frame, in.config);
    PipelineState state;
    SeriesFrame remaining = test;
    if (!o.resume.empty()) {
        try {
            state = load_snapshot(o.resume);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        // The snapshot has already consumed steps_done test rows.
        if (state.steps_done > test.size())
            throw UsageError("snapshot is further along than the data");
        remaining = test.slice(state.steps_done, test.size());
    } else {
        state = fit_pipeline(train, in.config);
    }
    const auto records = continue_backtest(state, remaining, in.config, o.alpha);
    write_records_csv(o.out, records);
    write_records_jsonl(o.out + ".jsonl", records);
    save_snapshot(o.out + ".snapshot.json", state);
    write_manifest("forecast", o, in.config_text, in.data_hash,
                   {{"alpha", o.alpha}, {"resume", o.resume}, {"records", records.size()}});
    std::cout << "wrote " << records.size() << " forecasts to " << o.out << '\n';
}

const std::vector<BaselineMethod> kBaselines{BaselineMethod::persistent, BaselineMethod::arma,
                                             BaselineMethod::ar_garch};

void run_evaluate(const Options& o) {
    const Inputs in = load_inputs(o);
    const auto [train, test] = split_train_test(in.frame, in.config);
    const std::vector<double> alphas{o.alpha};
    const ComparisonRun run = run_comparison(train, test, in.config, alphas, kBaselines);
    const auto reports = summarize(run, o.alpha);
    write_text(o.out, reports_to_csv(reports));
    write_manifest("evaluate", o, in.config_text, in.data_hash, {{"alpha", o.alpha}});
    std::cout << reports_to_csv(reports);
}

void run_sweep(const Options& o) {
    const Inputs in = load_inputs(o);
    const auto [train, test] = split_train_test(in.frame, in.config);
    const ComparisonRun run = run_comparison(train, test, in.config, o.alphas, kBaselines);
    write_text(o.out, sweep_to_csv(pce_alpha_sweep(run, o.alphas)));
    write_manifest("sweep-alpha", o, in.config_text, in.data_hash, {{"alphas", o.alphas}});
    std::cout << "wrote " << o.alphas.size() << " alphas x " << 1 + kBaselines.size()
              << " methods to " << o.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic wind power forecasting with a GBM wind model"};
    app.require_subcommand(1, 1);
    Options o;

    const CLI::Validator alpha_check(
        [](std::string& s) -> std::string {
            double a = 0.0;
            if (!CLI::detail::lexical_cast(s, a) || !(a > 0.0 && a < 1.0))
                return "alpha must lie strictly inside (0,1), got " + s;
            return {};
        },
        "ALPHA in (0,1)");

    auto* sim = app.add_subcommand("simulate", "write a synthetic series and its .truth sidecar");
    sim->add_option("--seed", o.seed, "RNG seed");
    sim->add_option("--steps", o.steps, "number of rows")->check(CLI::PositiveNumber);
    sim->add_option("--config", o.config, "simulation spec (JSON)")->check(CLI::ExistingFile);
    sim->add_option("--out", o.out, "output CSV")->required();

    const auto common = [&](CLI::App* cmd) {
        cmd->add_option("--data", o.data, "input CSV: timestamp,wind_speed,power")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--config", o.config, "run config (JSON)")->check(CLI::ExistingFile);
        cmd->add_option("--out", o.out, "output path")->required();
        cmd->add_option("--seed", o.seed, "recorded in the manifest");
        cmd->add_option("--refit-every", o.refit_every, "baseline refit cadence in steps")
            ->check(CLI::PositiveNumber);
    };

    auto* fit = app.add_subcommand("fit", "tune and fit on the training window, write a snapshot");
    common(fit);

    auto* fc = app.add_subcommand("forecast", "one-step forecasts over the test window");
    common(fc);
    fc->add_option("--alpha", o.alpha, "underestimation penalty for the point forecast")
        ->check(alpha_check);
    fc->add_option("--resume", o.resume, "continue from a snapshot")->check(CLI::ExistingFile);

    auto* ev = app.add_subcommand("evaluate", "metric table for the proposed method and baselines");
    common(ev);
    ev->add_option("--alpha", o.alpha, "alpha for PCE and point forecasts")->check(alpha_check);

    auto* sw = app.add_subcommand("sweep-alpha", "average PCE per method over an alpha grid");
    common(sw);
    sw->add_option("--alphas", o.alphas, "alpha grid")->delimiter(',')->check(alpha_check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    // Refits repeat the same warnings; show each one once.
    std::set<std::string> seen;
    set_warning_sink([&seen](const std::string& msg) {
        if (seen.insert(msg).second) std::cerr << "warning: " << msg << '\n';
    });

    try {
        if (*sim) run_simulate(o);
        else if (*fit) run_fit(o);
        else if (*fc) run_forecast(o);
        else if (*ev) run_evaluate(o);
        else if (*sw) run_sweep(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
