#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "priorlab/diffusion.hpp"
#include "priorlab/errors.hpp"
#include "priorlab/forward_ops.hpp"
#include "priorlab/ordered_linear.hpp"
#include "priorlab/tnsr_io.hpp"
#include "priorlab/vae.hpp"

namespace priorlab {

// Persistence layout: "<base>.json" manifest next to one "<base>.<name>.tnsr"
// file per tensor. Manifests record every hyperparameter needed to rebuild
// the object; derived tables (time embeddings, schedules) are recomputed.

namespace detail {

inline nlohmann::json load_manifest(const std::string& base, const std::string& expected_type) {
    std::ifstream is(base + ".json");
    if (!is) throw IoError("cannot open manifest: " + base + ".json");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad manifest " + base + ".json: " + e.what());
    }
    if (!j.contains("type") || j["type"] != expected_type) {
        throw IoError("manifest " + base + ".json is not of type " + expected_type);
    }
    return j;
}

inline void write_manifest(const std::string& base, const nlohmann::json& j) {
    std::ofstream os(base + ".json", std::ios::trunc);
    if (!os) throw IoError("cannot write manifest: " + base + ".json");
    os << j.dump(2) << '\n';
}

}  // namespace detail

inline void save_vae(const TunableVae& m, const std::string& base) {
    nlohmann::json j;
    j["type"] = "tunable_vae";
    j["n"] = m.n;
    j["d"] = m.d;
    j["hidden"] = m.hidden;
    j["lambda_reg"] = m.lambda_reg;
    j["lambda_drop"] = m.lambda_drop;
    j["seed"] = m.seed;
    j["steps_trained"] = m.steps_trained;
    j["step_size"] = m.step_size;
    detail::write_manifest(base, j);
    save_tnsr(base + ".w1.tnsr", m.w1);
    save_tnsr(base + ".b1.tnsr", m.b1);
    save_tnsr(base + ".wm.tnsr", m.wm);
    save_tnsr(base + ".bm.tnsr", m.bm);
    save_tnsr(base + ".wv.tnsr", m.wv);
    save_tnsr(base + ".bv.tnsr", m.bv);
    save_tnsr(base + ".w2.tnsr", m.w2);
    save_tnsr(base + ".b2.tnsr", m.b2);
    save_tnsr(base + ".w3.tnsr", m.w3);
    save_tnsr(base + ".b3.tnsr", m.b3);
}

inline TunableVae load_vae(const std::string& base) {
    nlohmann::json j = detail::load_manifest(base, "tunable_vae");
    TunableVae m;
    m.n = j.at("n").get<std::size_t>();
    m.d = j.at("d").get<std::size_t>();
    m.hidden = j.at("hidden").get<std::size_t>();
    m.lambda_reg = j.at("lambda_reg").get<double>();
    m.lambda_drop = j.at("lambda_drop").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.steps_trained = j.at("steps_trained").get<std::size_t>();
    m.step_size = j.at("step_size").get<double>();
    m.w1 = load_tnsr_matrix(base + ".w1.tnsr");
    m.b1 = load_tnsr_vector(base + ".b1.tnsr");
    m.wm = load_tnsr_matrix(base + ".wm.tnsr");
    m.bm = load_tnsr_vector(base + ".bm.tnsr");
    m.wv = load_tnsr_matrix(base + ".wv.tnsr");
    m.bv = load_tnsr_vector(base + ".bv.tnsr");
    m.w2 = load_tnsr_matrix(base + ".w2.tnsr");
    m.b2 = load_tnsr_vector(base + ".b2.tnsr");
    m.w3 = load_tnsr_matrix(base + ".w3.tnsr");
    m.b3 = load_tnsr_vector(base + ".b3.tnsr");
    if (m.w1.rows() != m.hidden || m.w1.cols() != m.n || m.w3.rows() != m.n) {
        throw IoError("load_vae: tensor shapes disagree with manifest");
    }
    return m;
}

struct LdmBundle {
    DenoiserNet net;
    NoiseSchedule schedule;
    double lambda_mix = 0.1;
    double law_p = 0.1;
    double beta_start = 1e-4;
    double beta_end = 0.05;
    std::uint64_t seed = 0;
};

inline void save_ldm(const LdmBundle& b, const std::string& base) {
    nlohmann::json j;
    j["type"] = "ldm_denoiser";
    j["d"] = b.net.d;
    j["hidden"] = b.net.hidden;
    j["T"] = b.net.T;
    j["beta_start"] = b.beta_start;
    j["beta_end"] = b.beta_end;
    j["lambda_mix"] = b.lambda_mix;
    j["law_p"] = b.law_p;
    j["seed"] = b.seed;
    detail::write_manifest(base, j);
    save_tnsr(base + ".a1.tnsr", b.net.a1);
    save_tnsr(base + ".c1.tnsr", b.net.c1);
    save_tnsr(base + ".a2.tnsr", b.net.a2);
    save_tnsr(base + ".c2.tnsr", b.net.c2);
    save_tnsr(base + ".a3.tnsr", b.net.a3);
    save_tnsr(base + ".c3.tnsr", b.net.c3);
}

inline LdmBundle load_ldm(const std::string& base) {
    nlohmann::json j = detail::load_manifest(base, "ldm_denoiser");
    LdmBundle b;
    b.net.d = j.at("d").get<std::size_t>();
    b.net.hidden = j.at("hidden").get<std::size_t>();
    b.net.T = j.at("T").get<std::size_t>();
    b.beta_start = j.at("beta_start").get<double>();
    b.beta_end = j.at("beta_end").get<double>();
    b.lambda_mix = j.at("lambda_mix").get<double>();
    b.law_p = j.at("law_p").get<double>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.net.a1 = load_tnsr_matrix(base + ".a1.tnsr");
    b.net.c1 = load_tnsr_vector(base + ".c1.tnsr");
    b.net.a2 = load_tnsr_matrix(base + ".a2.tnsr");
    b.net.c2 = load_tnsr_vector(base + ".c2.tnsr");
    b.net.a3 = load_tnsr_matrix(base + ".a3.tnsr");
    b.net.c3 = load_tnsr_vector(base + ".c3.tnsr");
    b.net.time_embed = make_time_embedding(b.net.T);
    b.schedule = make_schedule(b.net.T, b.beta_start, b.beta_end);
    if (b.net.a1.cols() != b.net.input_dim() || b.net.a3.rows() != b.net.d) {
        throw IoError("load_ldm: tensor shapes disagree with manifest");
    }
    return b;
}

inline void save_ordered(const OrderedLinearAutoencoder& m, double law_p, std::uint64_t seed,
                         const std::string& base) {
    nlohmann::json j;
    j["type"] = "ordered_linear";
    j["n"] = m.signal_dim();
    j["d"] = m.latent_dim();
    j["law_p"] = law_p;
    j["seed"] = seed;
    detail::write_manifest(base, j);
    save_tnsr(base + ".w.tnsr", m.w);
}

inline OrderedLinearAutoencoder load_ordered(const std::string& base) {
    nlohmann::json j = detail::load_manifest(base, "ordered_linear");
    OrderedLinearAutoencoder m;
    m.w = load_tnsr_matrix(base + ".w.tnsr");
    if (m.w.rows() != j.at("n").get<std::size_t>() ||
        m.w.cols() != j.at("d").get<std::size_t>()) {
        throw IoError("load_ordered: tensor shape disagrees with manifest");
    }
    return m;
}

// Operator bundles carry the construction descriptor so a sweep can replay
// identical measurements.
inline void save_operator(const ForwardOperator& op, const std::string& base) {
    nlohmann::json j;
    j["type"] = "forward_operator";
    j["kind"] = operator_kind_name(op.kind);
    j["m"] = op.m;
    j["n"] = op.n;
    j["side"] = op.side;
    j["ksize"] = op.ksize;
    j["keep"] = op.keep;
    detail::write_manifest(base, j);
    if (!op.a.empty()) save_tnsr(base + ".a.tnsr", op.a);
    if (!op.kernel.empty()) save_tnsr(base + ".kernel.tnsr", op.kernel);
    if (!op.sign_flip.empty()) save_tnsr(base + ".sign.tnsr", op.sign_flip);
}

inline ForwardOperator load_operator(const std::string& base) {
    nlohmann::json j = detail::load_manifest(base, "forward_operator");
    ForwardOperator op;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense_gaussian") op.kind = OperatorKind::dense_gaussian;
    else if (kind == "inpaint_mask") op.kind = OperatorKind::inpaint_mask;
    else if (kind == "identity") op.kind = OperatorKind::identity;
    else if (kind == "phaseless_gaussian") op.kind = OperatorKind::phaseless_gaussian;
    else if (kind == "circular_blur") op.kind = OperatorKind::circular_blur;
    else if (kind == "rademacher_phaseless") op.kind = OperatorKind::rademacher_phaseless;
    else throw IoError("load_operator: unknown kind " + kind);
    op.m = j.at("m").get<std::size_t>();
    op.n = j.at("n").get<std::size_t>();
    op.side = j.at("side").get<std::size_t>();
    op.ksize = j.at("ksize").get<std::size_t>();
    op.keep = j.at("keep").get<std::vector<std::size_t>>();
    if (op.kind == OperatorKind::dense_gaussian || op.kind == OperatorKind::phaseless_gaussian) {
        op.a = load_tnsr_matrix(base + ".a.tnsr");
    }
    if (op.kind == OperatorKind::circular_blur || op.kind == OperatorKind::rademacher_phaseless) {
        op.kernel = load_tnsr_vector(base + ".kernel.tnsr");
    }
    if (op.kind == OperatorKind::rademacher_phaseless) {
        op.sign_flip = load_tnsr_vector(base + ".sign.tnsr");
    }
    return op;
}

}  // namespace priorlab
