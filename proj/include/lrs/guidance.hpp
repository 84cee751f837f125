#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrs/errors.hpp"
#include "lrs/features.hpp"
#include "lrs/rng.hpp"

namespace lrs {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class GuidanceSource { llm, manual, random };

// The 2k model-returned coefficients: per-metric importance weights (alphas,
// summing to 1) and per-metric target values (betas, each in (0,1)).
struct AlphaBeta {
    std::vector<double> alphas;
    std::vector<double> betas;
    GuidanceSource source = GuidanceSource::manual;

    std::size_t k() const { return alphas.size(); }

    void validate() const {
        if (alphas.size() != betas.size())
            throw std::invalid_argument("alpha/beta count mismatch");
        if (alphas.empty()) throw std::invalid_argument("alpha-beta must be non-empty");
        double sum = 0.0;
        for (double a : alphas) {
            if (!(a > 0.0 && a < 1.0))
                throw std::invalid_argument("alpha values must lie in (0,1)");
            sum += a;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw std::invalid_argument("alpha values must sum to 1");
        for (double b : betas)
            if (!(b > 0.0 && b < 1.0))
                throw std::invalid_argument("beta values must lie in (0,1)");
    }
};

// Influence = sigmoid( sum_i alpha_i * (1 - (beta_i - metric_i)) ).
// The raw overload is the bare formula; the AlphaBeta overload also checks
// arity.
inline double influence(std::span<const double> features, std::span<const double> alphas,
                        std::span<const double> betas) {
    double x = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i)
        x += alphas[i] * (1.0 - (betas[i] - features[i]));
    return sigmoid(x);
}

inline double influence(std::span<const double> features, const AlphaBeta& ab) {
    if (features.size() != ab.k())
        throw std::invalid_argument("feature row arity does not match alpha-beta");
    return influence(features, ab.alphas, ab.betas);
}

enum class BiasProvenance { llm, random_static, random_dynamic, uniform };

inline const char* to_string(BiasProvenance p) {
    switch (p) {
        case BiasProvenance::llm: return "llm";
        case BiasProvenance::random_static: return "random_static";
        case BiasProvenance::random_dynamic: return "random_dynamic";
        case BiasProvenance::uniform: return "uniform";
    }
    return "?";
}

// Per-run probabilities in (0,1) that the biased decoder multiplies into the
// random keys.
struct BiasVector {
    std::vector<double> values;
    BiasProvenance provenance = BiasProvenance::uniform;

    std::size_t size() const { return values.size(); }

    static BiasVector uniform(std::size_t m, double value = 0.5) {
        return BiasVector{std::vector<double>(m, value), BiasProvenance::uniform};
    }
};

inline BiasVector build_bias(const FeatureMatrix& matrix, const AlphaBeta& ab) {
    ab.validate();
    if (matrix.k() != ab.k())
        throw std::invalid_argument("feature matrix arity does not match alpha-beta");
    BiasVector bias;
    bias.provenance = BiasProvenance::llm;
    bias.values.reserve(matrix.m());
    for (const auto& row : matrix.rows) bias.values.push_back(influence(row, ab));
    return bias;
}

// One uniform draw, fixed for the whole execution.
inline BiasVector random_bias_static(std::size_t m, std::uint64_t seed) {
    rng::Stream stream(rng::derive_seed(seed, "static-bias"));
    BiasVector bias;
    bias.provenance = BiasProvenance::random_static;
    bias.values.reserve(m);
    for (std::size_t i = 0; i < m; ++i) bias.values.push_back(stream.next_open_unit());
    return bias;
}

// Supplies a fresh uniform vector per generation; deterministic under seed.
class DynamicBiasStream {
public:
    DynamicBiasStream(std::size_t m, std::uint64_t seed)
        : m_(m), stream_(rng::derive_seed(seed, "dynamic-bias")) {}

    BiasVector next() {
        BiasVector bias;
        bias.provenance = BiasProvenance::random_dynamic;
        bias.values.reserve(m_);
        for (std::size_t i = 0; i < m_; ++i) bias.values.push_back(stream_.next_open_unit());
        return bias;
    }

private:
    std::size_t m_;
    rng::Stream stream_;
};

// ---------------------------------------------------------------------------
// Parsing and rendering of the key=value response block
// ---------------------------------------------------------------------------

struct ParseOptions {
    // |sum(alpha) - 1| up to this is repaired by rescaling; beyond it the
    // response is rejected so silent large corrections cannot mask model
    // failure.
    double alpha_sum_tolerance = 0.05;
    // Clamp beta values at exactly 0 or 1 into the open interval instead of
    // rejecting them. Off by default.
    bool lenient_beta = false;
};

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(std::string(text), &used);
        while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
        return used == text.size();
    } catch (const std::exception&) {
        return false;
    }
}

// Finds `key=<number>` anywhere in the response, tolerant of surrounding
// prose, markdown fences, whitespace around '=' and trailing punctuation.
inline bool find_key_value(std::string_view text, const std::string& key, double& out) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string_view::npos) {
        // reject matches embedded in a longer identifier (e.g. alpha_12)
        const std::size_t after_key = pos + key.size();
        if (pos > 0) {
            const unsigned char prev = text[pos - 1];
            if (std::isalnum(prev) || prev == '_') {
                pos = after_key;
                continue;
            }
        }
        std::size_t i = after_key;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
        if (i >= text.size() || (text[i] != '=' && text[i] != ':')) {
            pos = after_key;
            continue;
        }
        ++i;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.' ||
                text[j] == '-' || text[j] == '+' || text[j] == 'e' || text[j] == 'E'))
            ++j;
        if (j > i && parse_double(text.substr(i, j - i), out)) return true;
        pos = after_key;
    }
    return false;
}

}  // namespace detail

// Extracts alpha_1..alpha_k / beta_1..beta_k from a model response and
// validates the constraints. Throws ParseError (carrying the raw text) on
// any violation so the caller can retry.
inline AlphaBeta parse_alpha_beta(const std::string& text, std::size_t k,
                                  const ParseOptions& options = {}) {
    AlphaBeta ab;
    ab.source = GuidanceSource::llm;
    ab.alphas.resize(k);
    ab.betas.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::string akey = "alpha_" + std::to_string(i + 1);
        if (!detail::find_key_value(text, akey, ab.alphas[i]))
            throw ParseError("missing or non-numeric " + akey, text);
        const std::string bkey = "beta_" + std::to_string(i + 1);
        if (!detail::find_key_value(text, bkey, ab.betas[i]))
            throw ParseError("missing or non-numeric " + bkey, text);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(ab.alphas[i] > 0.0 && ab.alphas[i] < 1.0))
            throw ParseError("alpha_" + std::to_string(i + 1) + " outside (0,1)", text);
        sum += ab.alphas[i];
    }
    if (std::abs(sum - 1.0) > options.alpha_sum_tolerance)
        throw ParseError("alpha values sum to " + std::to_string(sum) +
                         ", beyond the repair tolerance", text);
    for (double& a : ab.alphas) a /= sum;
    for (std::size_t i = 0; i < k; ++i) {
        double& b = ab.betas[i];
        if (options.lenient_beta && (b == 0.0 || b == 1.0))
            b = std::min(1.0 - 1e-6, std::max(1e-6, b));
        if (!(b > 0.0 && b < 1.0))
            throw ParseError("beta_" + std::to_string(i + 1) + " outside (0,1)", text);
    }
    ab.validate();
    return ab;
}

// Canonical key=value rendering; parse_alpha_beta(render(ab)) == ab up to
// formatting precision.
inline std::string render_alpha_beta(const AlphaBeta& ab) {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < ab.k(); ++i) {
        std::snprintf(buf, sizeof(buf), "alpha_%zu=%.17g\n", i + 1, ab.alphas[i]);
        out += buf;
    }
    for (std::size_t i = 0; i < ab.k(); ++i) {
        std::snprintf(buf, sizeof(buf), "beta_%zu=%.17g\n", i + 1, ab.betas[i]);
        out += buf;
    }
    return out;
}

// One CSV row of coefficients for offline distribution analysis.
inline std::string alpha_beta_csv_row(const std::string& instance, const std::string& model,
                                      const AlphaBeta& ab) {
    std::string out = instance + "," + model;
    char buf[32];
    for (double a : ab.alphas) {
        std::snprintf(buf, sizeof(buf), ",%.10g", a);
        out += buf;
    }
    for (double b : ab.betas) {
        std::snprintf(buf, sizeof(buf), ",%.10g", b);
        out += buf;
    }
    return out;
}

}  // namespace lrs
