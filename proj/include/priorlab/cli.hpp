#pragma once

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "priorlab/csvfmt.hpp"
#include "priorlab/dataset.hpp"
#include "priorlab/decoder.hpp"
#include "priorlab/diffusion.hpp"
#include "priorlab/errors.hpp"
#include "priorlab/forward_ops.hpp"
#include "priorlab/gauss_oracles.hpp"
#include "priorlab/inversion.hpp"
#include "priorlab/linear_theory.hpp"
#include "priorlab/metrics.hpp"
#include "priorlab/ordered_linear.hpp"
#include "priorlab/serialization.hpp"
#include "priorlab/svgplot.hpp"
#include "priorlab/vae.hpp"

namespace priorlab::cli {

using nlohmann::json;

namespace detail {

inline json load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

// Unknown keys are typos until proven otherwise.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (item.key() == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(ctx + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(ctx + ": key '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(ctx + ": key '" + key + "' has the wrong type");
    }
}

// Spectrum: explicit array, or {"base": b, "ratio": r} for s_i = b r^i.
inline Vector parse_spectrum(const json& j, std::size_t n, const std::string& ctx) {
    if (j.is_array()) {
        Vector s = j.get<Vector>();
        if (s.size() != n) throw ConfigError(ctx + ": spectrum length != n");
        return s;
    }
    check_keys(j, {"base", "ratio"}, ctx + ".spectrum");
    return geometric_spectrum(n, require<double>(j, "base", ctx), require<double>(j, "ratio", ctx));
}

inline Vector parse_spectrum_string(const std::string& text) {
    Vector s;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            s.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) s.push_back(std::stod(cur));
    if (s.empty()) throw ConfigError("empty spectrum");
    return s;
}

// {"kind": "lowrank", "n", "spectrum", "count", "seed"} or
// {"kind": "standard_normal", "n", "count", "seed"}.
inline std::vector<Vector> parse_data(const json& j, const std::string& ctx) {
    check_keys(j, {"kind", "n", "spectrum", "count", "seed"}, ctx);
    std::string kind = get_or<std::string>(j, "kind", "lowrank", ctx);
    std::size_t n = require<std::size_t>(j, "n", ctx);
    std::size_t count = require<std::size_t>(j, "count", ctx);
    std::uint64_t seed = require<std::uint64_t>(j, "seed", ctx);
    if (kind == "lowrank") {
        if (!j.contains("spectrum")) throw ConfigError(ctx + ": lowrank data needs a spectrum");
        Vector spectrum = parse_spectrum(j.at("spectrum"), n, ctx);
        return synth_lowrank_dataset(n, spectrum, count, seed);
    }
    if (kind == "standard_normal") {
        RandomSource rng(seed, /*stream_id=*/12);
        std::vector<Vector> data;
        data.reserve(count);
        for (std::size_t i = 0; i < count; ++i) data.push_back(gaussian_vector(rng, n, 1.0));
        return data;
    }
    throw ConfigError(ctx + ": unknown data kind '" + kind + "'");
}

inline ForwardOperator parse_operator(const json& j, const std::string& ctx) {
    check_keys(j, {"kind", "m", "n", "seed", "keep_prob", "side", "ksize", "std", "path"}, ctx);
    std::string kind = require<std::string>(j, "kind", ctx);
    if (kind == "identity") {
        return make_identity(require<std::size_t>(j, "n", ctx));
    }
    if (kind == "dense_gaussian" || kind == "phaseless_gaussian") {
        RandomSource rng(require<std::uint64_t>(j, "seed", ctx), /*stream_id=*/21);
        std::size_t m = require<std::size_t>(j, "m", ctx);
        std::size_t n = require<std::size_t>(j, "n", ctx);
        return kind == "dense_gaussian" ? make_dense_gaussian(m, n, rng)
                                        : make_phaseless_gaussian(m, n, rng);
    }
    if (kind == "inpaint") {
        RandomSource rng(require<std::uint64_t>(j, "seed", ctx), /*stream_id=*/22);
        return make_inpaint(require<std::size_t>(j, "n", ctx),
                            require<double>(j, "keep_prob", ctx), rng);
    }
    if (kind == "blur") {
        return build_blur(require<std::size_t>(j, "side", ctx),
                          require<std::size_t>(j, "ksize", ctx), require<double>(j, "std", ctx));
    }
    if (kind == "rademacher_phaseless") {
        RandomSource rng(require<std::uint64_t>(j, "seed", ctx), /*stream_id=*/23);
        return make_rademacher_phaseless(require<std::size_t>(j, "side", ctx),
                                         require<std::size_t>(j, "ksize", ctx),
                                         require<std::size_t>(j, "m", ctx), rng);
    }
    if (kind == "load") {
        return load_operator(require<std::string>(j, "path", ctx));
    }
    throw ConfigError(ctx + ": unknown operator kind '" + kind + "'");
}

// Owns everything a sweep problem points at.
struct ProblemBundle {
    ForwardOperator op;
    std::optional<GeneratorFamily> family;
    std::vector<Vector> signals;
    std::unique_ptr<Decoder> decoder;
    std::optional<LdmBundle> ldm;
    std::optional<TunableVae> vae;
    std::optional<OrderedLinearAutoencoder> ordered;
    SweepProblem prob;
};

inline void parse_signal_source(ProblemBundle& b, const json& j, const std::string& ctx) {
    check_keys(j, {"source", "n", "spectrum", "seed", "path", "count"}, ctx);
    std::string source = require<std::string>(j, "source", ctx);
    if (source == "family") {
        std::size_t n = require<std::size_t>(j, "n", ctx);
        Vector spectrum = parse_spectrum(j.at("spectrum"), n, ctx);
        b.family = synth_family(n, spectrum, require<std::uint64_t>(j, "seed", ctx));
        return;
    }
    if (source == "tnsr") {
        b.signals.push_back(load_tnsr_vector(require<std::string>(j, "path", ctx)));
        return;
    }
    if (source == "dataset") {
        std::size_t n = require<std::size_t>(j, "n", ctx);
        Vector spectrum = parse_spectrum(j.at("spectrum"), n, ctx);
        b.signals = synth_lowrank_dataset(n, spectrum, require<std::size_t>(j, "count", ctx),
                                          require<std::uint64_t>(j, "seed", ctx));
        return;
    }
    throw ConfigError(ctx + ": unknown signal source '" + source + "'");
}

inline void parse_decoder(ProblemBundle& b, const json& j, const std::string& ctx) {
    check_keys(j, {"type", "dim", "model", "tnsr", "n", "spectrum", "seed"}, ctx);
    std::string type = require<std::string>(j, "type", ctx);
    if (type == "identity") {
        b.decoder = std::make_unique<IdentityDecoder>(require<std::size_t>(j, "dim", ctx));
        return;
    }
    if (type == "linear") {
        b.decoder =
            std::make_unique<LinearDecoder>(load_tnsr_matrix(require<std::string>(j, "tnsr", ctx)));
        return;
    }
    if (type == "vae") {
        b.vae = load_vae(require<std::string>(j, "model", ctx));
        b.decoder = std::make_unique<VaeDecoder>(*b.vae);
        return;
    }
    if (type == "ordered") {
        b.ordered = load_ordered(require<std::string>(j, "model", ctx));
        b.decoder = std::make_unique<LinearDecoder>(b.ordered->w);
        return;
    }
    if (type == "family") {
        std::size_t n = require<std::size_t>(j, "n", ctx);
        Vector spectrum = parse_spectrum(j.at("spectrum"), n, ctx);
        GeneratorFamily f = synth_family(n, spectrum, require<std::uint64_t>(j, "seed", ctx));
        b.decoder = std::make_unique<LinearDecoder>(generator_at(f, n));
        return;
    }
    throw ConfigError(ctx + ": unknown decoder type '" + type + "'");
}

inline SweepMethod parse_method(const std::string& m, const std::string& ctx) {
    if (m == "posterior") return SweepMethod::posterior;
    if (m == "gradient_guided") return SweepMethod::gradient_guided;
    if (m == "latent_map") return SweepMethod::latent_map;
    if (m == "linear_closed_form") return SweepMethod::linear_closed_form;
    throw ConfigError(ctx + ": unknown method '" + m + "'");
}

inline void parse_inversion_config(InversionConfig& cfg, const json& j, const std::string& ctx) {
    check_keys(j,
               {"inner_steps", "inner_step_size", "sigma_const", "sigma_floor", "sigma_values",
                "guidance_step", "return_truncated"},
               ctx);
    cfg.inner_steps = get_or<std::size_t>(j, "inner_steps", cfg.inner_steps, ctx);
    cfg.inner_step_size = get_or<double>(j, "inner_step_size", cfg.inner_step_size, ctx);
    cfg.sigma_const = get_or<double>(j, "sigma_const", cfg.sigma_const, ctx);
    cfg.sigma_floor = get_or<double>(j, "sigma_floor", cfg.sigma_floor, ctx);
    cfg.guidance_step = get_or<double>(j, "guidance_step", cfg.guidance_step, ctx);
    cfg.return_truncated = get_or<bool>(j, "return_truncated", cfg.return_truncated, ctx);
    if (j.contains("sigma_values")) cfg.sigma_values = j.at("sigma_values").get<Vector>();
}

inline void parse_map_config(MapConfig& cfg, const json& j, const std::string& ctx) {
    check_keys(j, {"gamma", "steps", "step_size"}, ctx);
    cfg.gamma = get_or<double>(j, "gamma", cfg.gamma, ctx);
    cfg.steps = get_or<std::size_t>(j, "steps", cfg.steps, ctx);
    cfg.step_size = get_or<double>(j, "step_size", cfg.step_size, ctx);
}

// Shared between `invert` and `sweep`.
inline std::unique_ptr<ProblemBundle> build_problem(const json& j, const std::string& ctx) {
    auto b = std::make_unique<ProblemBundle>();
    b->op = parse_operator(j.at("operator"), ctx + ".operator");
    parse_signal_source(*b, j.at("signal"), ctx + ".signal");

    b->prob.task = get_or<std::string>(j, "task", "run", ctx);
    b->prob.sigma = require<double>(j, "sigma", ctx);
    b->prob.method = parse_method(require<std::string>(j, "method", ctx), ctx);
    b->prob.seed = require<std::uint64_t>(j, "seed", ctx);
    b->prob.peak = get_or<double>(j, "peak", 1.0, ctx);
    b->prob.gamma = get_or<double>(j, "gamma", 0.0, ctx);

    if (j.contains("decoder")) parse_decoder(*b, j.at("decoder"), ctx + ".decoder");
    if (j.contains("net_model")) {
        b->ldm = load_ldm(j.at("net_model").get<std::string>());
    }
    if (j.contains("inversion")) {
        parse_inversion_config(b->prob.inv, j.at("inversion"), ctx + ".inversion");
    }
    if (j.contains("map")) parse_map_config(b->prob.map, j.at("map"), ctx + ".map");
    b->prob.inv.guidance = b->prob.method == SweepMethod::gradient_guided
                               ? GuidanceMode::gradient
                               : GuidanceMode::quadratic_prox;

    b->prob.op = &b->op;
    if (b->family) b->prob.family = &*b->family;
    if (!b->signals.empty()) b->prob.test_signals = &b->signals;
    if (b->decoder) b->prob.decoder = b->decoder.get();
    if (b->ldm) {
        b->prob.net = &b->ldm->net;
        b->prob.schedule = &b->ldm->schedule;
    }

    bool needs_net = b->prob.method == SweepMethod::posterior ||
                     b->prob.method == SweepMethod::gradient_guided;
    if (needs_net && !b->ldm) throw ConfigError(ctx + ": method needs 'net_model'");
    bool needs_decoder = b->prob.method != SweepMethod::linear_closed_form;
    if (needs_decoder && !b->decoder) throw ConfigError(ctx + ": method needs 'decoder'");
    return b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct TheoryOptions {
    Vector spectrum;
    double sigma = 0.0;
    double gamma = 0.0;
    std::size_t mc_trials = 20000;
    std::uint64_t seed = 0;
    std::string out;  // empty = stdout
};

inline int cmd_theory(const TheoryOptions& opt) {
    if (opt.spectrum.empty()) throw ConfigError("theory: spectrum is required");
    const std::size_t n = opt.spectrum.size();
    Matrix eye = Matrix::identity(n);
    GeneratorFamily fam = family_from_svd(eye, opt.spectrum, eye);
    DenoiseProblem p(std::move(fam), opt.sigma, opt.gamma);
    OptimalKInfo info = optimal_k_info(p);

    std::string csv = "k,closed_form_mse,mc_mean,mc_std_error,optimal\n";
    for (std::size_t k = 1; k <= n; ++k) {
        csv += format_size(k);
        csv += ',';
        csv += format_double(closed_form_mse(p, k));
        csv += ',';
        if (opt.mc_trials > 0) {
            RandomSource rng(opt.seed, /*stream_id=*/100 + k);
            McEstimate mc = mc_mse_oracle(p, k, rng, opt.mc_trials);
            csv += format_double(mc.mean);
            csv += ',';
            csv += format_double(mc.std_error);
        } else {
            csv += ',';
        }
        csv += ',';
        csv += (k == info.k) ? '1' : '0';
        csv += '\n';
    }
    if (info.empty_candidate_set) {
        std::cerr << "theory: no singular value meets the threshold; optimal k chosen by "
                     "exhaustive search\n";
    }
    if (opt.out.empty()) {
        std::cout << csv;
    } else {
        write_text_file(opt.out, csv);
    }
    return 0;
}

inline int cmd_train_vae(const json& cfg, const std::string& out_override) {
    detail::check_keys(cfg, {"data", "model", "train", "out"}, "train-vae");
    std::vector<Vector> data = detail::parse_data(cfg.at("data"), "train-vae.data");

    const json& jm = cfg.at("model");
    detail::check_keys(jm, {"d", "hidden"}, "train-vae.model");
    const json& jt = cfg.at("train");
    detail::check_keys(jt,
                       {"epochs", "step_size", "momentum", "lambda_reg", "lambda_drop", "law_p",
                        "seed"},
                       "train-vae.train");

    VaeTrainConfig tc;
    tc.n = data.front().size();
    tc.d = detail::require<std::size_t>(jm, "d", "train-vae.model");
    tc.hidden = detail::get_or<std::size_t>(jm, "hidden", 32, "train-vae.model");
    tc.epochs = detail::require<std::size_t>(jt, "epochs", "train-vae.train");
    tc.step_size = detail::require<double>(jt, "step_size", "train-vae.train");
    tc.momentum = detail::get_or<double>(jt, "momentum", 0.0, "train-vae.train");
    tc.lambda_reg = detail::get_or<double>(jt, "lambda_reg", 1e-3, "train-vae.train");
    tc.lambda_drop = detail::get_or<double>(jt, "lambda_drop", 0.1, "train-vae.train");
    tc.law_p = detail::get_or<double>(jt, "law_p", 0.1, "train-vae.train");
    tc.seed = detail::require<std::uint64_t>(jt, "seed", "train-vae.train");

    std::string out = out_override.empty()
                          ? detail::require<std::string>(cfg, "out", "train-vae")
                          : out_override;

    VaeTrainResult res = vae_train(data, tc);
    save_vae(res.model, out);

    std::string trace = "step,loss\n";
    for (std::size_t i = 0; i < res.loss_trace.size(); ++i) {
        trace += format_size(i) + "," + format_double(res.loss_trace[i]) + "\n";
    }
    write_text_file(out + ".trace.csv", trace);
    std::cout << "trained vae: n=" << tc.n << " d=" << tc.d << " steps=" << res.loss_trace.size()
              << " final_loss=" << format_double(res.loss_trace.back()) << "\n";
    return 0;
}

inline int cmd_train_ldm(const json& cfg, const std::string& out_override) {
    detail::check_keys(cfg, {"data", "encoder_model", "train", "out"}, "train-ldm");
    std::vector<Vector> data = detail::parse_data(cfg.at("data"), "train-ldm.data");

    if (cfg.contains("encoder_model")) {
        TunableVae enc = load_vae(cfg.at("encoder_model").get<std::string>());
        std::vector<Vector> latents;
        latents.reserve(data.size());
        for (const Vector& x : data) latents.push_back(vae_encode(enc, x).mu);
        data = std::move(latents);
    }

    const json& jt = cfg.at("train");
    detail::check_keys(jt,
                       {"T", "beta_start", "beta_end", "lambda_mix", "law_p", "hidden", "steps",
                        "step_size", "momentum", "seed"},
                       "train-ldm.train");
    LdmTrainConfig tc;
    tc.T = detail::get_or<std::size_t>(jt, "T", 200, "train-ldm.train");
    tc.beta_start = detail::get_or<double>(jt, "beta_start", 1e-4, "train-ldm.train");
    tc.beta_end = detail::get_or<double>(jt, "beta_end", 0.05, "train-ldm.train");
    tc.lambda_mix = detail::get_or<double>(jt, "lambda_mix", 0.1, "train-ldm.train");
    tc.law_p = detail::get_or<double>(jt, "law_p", 0.1, "train-ldm.train");
    tc.hidden = detail::get_or<std::size_t>(jt, "hidden", 64, "train-ldm.train");
    tc.steps = detail::require<std::size_t>(jt, "steps", "train-ldm.train");
    tc.step_size = detail::require<double>(jt, "step_size", "train-ldm.train");
    tc.momentum = detail::get_or<double>(jt, "momentum", 0.0, "train-ldm.train");
    tc.seed = detail::require<std::uint64_t>(jt, "seed", "train-ldm.train");

    std::string out = out_override.empty()
                          ? detail::require<std::string>(cfg, "out", "train-ldm")
                          : out_override;

    LdmTrainResult res = ldm_train(data, tc);
    LdmBundle bundle;
    bundle.net = std::move(res.net);
    bundle.schedule = std::move(res.schedule);
    bundle.lambda_mix = tc.lambda_mix;
    bundle.law_p = tc.law_p;
    bundle.beta_start = tc.beta_start;
    bundle.beta_end = tc.beta_end;
    bundle.seed = tc.seed;
    save_ldm(bundle, out);

    std::string trace = "step,loss\n";
    for (std::size_t i = 0; i < res.loss_trace.size(); ++i) {
        trace += format_size(i) + "," + format_double(res.loss_trace[i]) + "\n";
    }
    write_text_file(out + ".trace.csv", trace);
    std::cout << "trained ldm: d=" << bundle.net.d << " T=" << bundle.net.T
              << " steps=" << res.loss_trace.size()
              << " final_loss=" << format_double(res.loss_trace.back()) << "\n";
    return 0;
}

inline int cmd_invert(const json& cfg, const std::string& out_override) {
    detail::check_keys(cfg,
                       {"task", "operator", "signal", "sigma", "method", "decoder", "net_model",
                        "k", "seed", "inversion", "map", "gamma", "peak", "out", "recon_out",
                        "timings"},
                       "invert");
    auto bundle = detail::build_problem(cfg, "invert");
    std::size_t k = detail::require<std::size_t>(cfg, "k", "invert");
    bool timings = detail::get_or<bool>(cfg, "timings", false, "invert");

    SweepRun run = run_sweep_case(bundle->prob, k, /*trial=*/0);
    std::string csv = records_to_csv({run.record}, timings);

    std::string out = out_override.empty() ? detail::get_or<std::string>(cfg, "out", "", "invert")
                                           : out_override;
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_text_file(out, csv);
    }
    if (cfg.contains("recon_out")) {
        save_tnsr(cfg.at("recon_out").get<std::string>(), run.xhat);
    }
    return 0;
}

inline int cmd_sweep(const json& cfg, const std::string& out_override) {
    detail::check_keys(cfg,
                       {"task", "operator", "signal", "sigma", "method", "decoder", "net_model",
                        "k_values", "trials", "seed", "inversion", "map", "gamma", "peak", "out",
                        "svg_out", "svg_metric", "svg_title", "timings"},
                       "sweep");
    auto bundle = detail::build_problem(cfg, "sweep");
    std::vector<std::size_t> k_values =
        detail::require<std::vector<std::size_t>>(cfg, "k_values", "sweep");
    std::size_t trials = detail::require<std::size_t>(cfg, "trials", "sweep");
    bool timings = detail::get_or<bool>(cfg, "timings", false, "sweep");

    std::vector<ExperimentRecord> records = sweep_k(bundle->prob, k_values, trials);
    std::string csv = records_to_csv(records, timings);

    std::string out = out_override.empty() ? detail::require<std::string>(cfg, "out", "sweep")
                                           : out_override;
    write_text_file(out, csv);

    if (cfg.contains("svg_out")) {
        std::string metric = detail::get_or<std::string>(cfg, "svg_metric", "mse", "sweep");
        std::string title = detail::get_or<std::string>(cfg, "svg_title",
                                                        bundle->prob.task + ": " + metric + " vs k",
                                                        "sweep");
        write_text_file(cfg.at("svg_out").get<std::string>(),
                        svg_from_records_csv(csv, metric, title));
    }
    std::cout << "sweep: wrote " << records.size() << " records to " << out << "\n";
    return 0;
}

inline int cmd_plotdata(const std::string& in_path, const std::string& out_path,
                        const std::string& metric, const std::string& title) {
    std::string csv = read_text_file(in_path);
    std::string t = title.empty() ? (metric + " vs k") : title;
    write_text_file(out_path, svg_from_records_csv(csv, metric, t));
    return 0;
}

// ---------------------------------------------------------------------------
// Entry point. args excludes the program name.
// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"tunable-complexity generative priors laboratory"};
    app.require_subcommand(1);

    // theory
    auto* theory = app.add_subcommand("theory", "closed-form risk table with MC validation");
    std::string theory_spectrum;
    TheoryOptions topt;
    std::string theory_config;
    theory->add_option("--config", theory_config, "JSON config");
    theory->add_option("--spectrum", theory_spectrum, "comma-separated singular values");
    theory->add_option("--sigma", topt.sigma, "noise std");
    theory->add_option("--gamma", topt.gamma, "prior weight");
    theory->add_option("--mc-trials", topt.mc_trials, "Monte-Carlo trials per k (0 disables)");
    theory->add_option("--seed", topt.seed, "rng seed");
    theory->add_option("--out", topt.out, "output CSV path (default stdout)");

    // train-vae / train-ldm / invert / sweep
    std::string cfg_path, out_override, seed_override_str;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* o = sub->add_option("--config", cfg_path, "JSON config");
        if (config_required) o->required();
        sub->add_option("--out", out_override, "override output path");
        sub->add_option("--seed", seed_override_str, "override config seed");
    };
    auto* train_vae = app.add_subcommand("train-vae", "train a nested-dropout VAE");
    add_common(train_vae, true);
    auto* train_ldm = app.add_subcommand("train-ldm", "train a truncated-latent denoiser");
    add_common(train_ldm, true);
    auto* invert = app.add_subcommand("invert", "single inversion run");
    add_common(invert, true);
    auto* sweep = app.add_subcommand("sweep", "k-sweep to CSV (and optional SVG)");
    add_common(sweep, true);

    // plotdata
    auto* plotdata = app.add_subcommand("plotdata", "render a sweep CSV as an SVG chart");
    std::string plot_in, plot_out, plot_metric = "mse", plot_title;
    plotdata->add_option("--in", plot_in, "input records CSV")->required();
    plotdata->add_option("--out", plot_out, "output SVG path")->required();
    plotdata->add_option("--metric", plot_metric, "column to plot (mse, psnr_db, residual)");
    plotdata->add_option("--title", plot_title, "chart title");

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    std::string prog = "priorlab";
    argv.push_back(prog.data());
    for (std::string& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (theory->parsed()) {
            if (!theory_config.empty()) {
                json j = detail::load_config_file(theory_config);
                detail::check_keys(j, {"spectrum", "sigma", "gamma", "mc_trials", "seed", "out"},
                                   "theory");
                if (j.contains("spectrum")) topt.spectrum = j.at("spectrum").get<Vector>();
                topt.sigma = detail::get_or<double>(j, "sigma", topt.sigma, "theory");
                topt.gamma = detail::get_or<double>(j, "gamma", topt.gamma, "theory");
                topt.mc_trials =
                    detail::get_or<std::size_t>(j, "mc_trials", topt.mc_trials, "theory");
                topt.seed = detail::get_or<std::uint64_t>(j, "seed", topt.seed, "theory");
                if (topt.out.empty()) topt.out = detail::get_or<std::string>(j, "out", "", "theory");
            }
            if (!theory_spectrum.empty()) {
                topt.spectrum = detail::parse_spectrum_string(theory_spectrum);
            }
            if (!(topt.sigma > 0.0)) throw ConfigError("theory: sigma must be positive");
            return cmd_theory(topt);
        }

        auto load_cfg = [&]() {
            json j = detail::load_config_file(cfg_path);
            if (!seed_override_str.empty() && j.is_object()) {
                std::uint64_t seed = 0;
                try {
                    seed = std::stoull(seed_override_str);
                } catch (const std::exception&) {
                    throw ConfigError("--seed: not an unsigned integer");
                }
                if (j.contains("seed")) j["seed"] = seed;
                if (j.contains("train") && j["train"].contains("seed")) {
                    j["train"]["seed"] = seed;
                }
            }
            return j;
        };
        if (train_vae->parsed()) return cmd_train_vae(load_cfg(), out_override);
        if (train_ldm->parsed()) return cmd_train_ldm(load_cfg(), out_override);
        if (invert->parsed()) return cmd_invert(load_cfg(), out_override);
        if (sweep->parsed()) return cmd_sweep(load_cfg(), out_override);
        if (plotdata->parsed()) return cmd_plotdata(plot_in, plot_out, plot_metric, plot_title);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const TrainingDiverged& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const NonFiniteObjective& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const DegenerateVariance& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const SingularGenerator& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const InvalidValue& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace priorlab::cli
