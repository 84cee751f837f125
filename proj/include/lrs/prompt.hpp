#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "lrs/features.hpp"
#include "lrs/instance.hpp"

namespace lrs {

struct PromptOptions {
    // Reproduce the published metric descriptions and data header character
    // for character (including the header's stray space). Only meaningful
    // for the curated metric set; other sets always use their own cleaned
    // descriptions.
    bool verbatim = false;
    int significant_digits = 3;
};

// The three prompt sections plus the full rendering sent to the model.
struct PromptBundle {
    std::string problem_tag;
    std::string evaluation_tag;
    std::string rules_tag;
    std::string rendered;
    std::size_t token_estimate = 0;
};

namespace detail {

inline constexpr const char* kProblemText =
    "The Longest Run Subsequence (LRS) problem is defined as follows: Given an input "
    "string S over an alphabet Sigma, the goal is to extract a subsequence S* composed of "
    "entire runs from S, such that each symbol from the alphabet appears in at most one "
    "run in S*, and the total length of S* is maximized. A run is a maximal sequence of "
    "consecutive identical characters. The selected runs in S* must preserve their "
    "original order in S, and cannot overlap.";

inline constexpr const char* kVerbatimHeader =
    "node,normalized-length,opportunity ,distance-next,character-frequency";

inline constexpr const char* kVerbatimDescriptions =
    "- Normalized_length: Length of the run divided by the total string length.\n"
    "\n"
    "- Opportunity: Estimated potential contribution of the run to the total LRS 1/(1+ "
    "gap), where gap= next_run_start - start.\n"
    "\n"
    "- Distance_next: Normalized distance to the next occurrence of the same symbol.\n"
    "\n"
    "- Global Character Frequency: Frequency of the character in the entire string "
    "divided by its total length.";

inline std::string cleaned_descriptions(const MetricSet& set) {
    std::string out;
    for (std::size_t i = 0; i < set.metrics.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += "- " + set.metrics[i].name + ": " + set.metrics[i].description;
    }
    return out;
}

inline std::string cleaned_header(const FeatureMatrix& matrix) {
    std::string out = "run";
    for (const auto& name : matrix.metric_names) {
        out += ',';
        out += name;
    }
    return out;
}

inline std::string influence_equation(const std::vector<std::string>& metric_names) {
    std::string out = "Influence = sigmoid(\n";
    for (std::size_t i = 0; i < metric_names.size(); ++i) {
        out += (i == 0) ? "      " : "    + ";
        out += "alpha_" + std::to_string(i + 1) + " * (1 - (beta_" + std::to_string(i + 1) +
               " - " + metric_names[i] + "))\n";
    }
    out += ")";
    return out;
}

}  // namespace detail

inline std::string prompt_data_header(const FeatureMatrix& matrix, bool verbatim) {
    return verbatim ? std::string(detail::kVerbatimHeader) : detail::cleaned_header(matrix);
}

// Assembles the three-tag analysis prompt for one instance. The data block
// carries one header row plus one rendered row per run.
inline PromptBundle build_prompt(const LrsInstance& inst, const FeatureMatrix& matrix,
                                 const MetricSet& set, const PromptOptions& options = {}) {
    if (inst.m() == 0) throw std::invalid_argument("cannot build a prompt for an empty instance");
    if (matrix.m() != inst.m() || matrix.k() != set.k())
        throw std::invalid_argument("feature matrix does not match instance/metric set");
    const bool verbatim = options.verbatim && set.id == "curated";

    PromptBundle bundle;
    bundle.problem_tag = std::string("[BEGIN PROBLEM]\n\n") + detail::kProblemText +
                         "\n\n[END PROBLEM]";

    std::string data = prompt_data_header(matrix, verbatim);
    for (const auto& row : format_rows_scientific(matrix, options.significant_digits)) {
        data += '\n';
        data += row;
    }
    bundle.evaluation_tag =
        "[BEGIN EVALUATION SEQUENCE]\n\nMetrics description:\n\n" +
        (verbatim ? std::string(detail::kVerbatimDescriptions) : detail::cleaned_descriptions(set)) +
        "\n\n[BEGIN DATA]\n\n" + data + "\n\n[END DATA]\n\n[END EVALUATION SEQUENCE]";

    std::string rules = "[BEGIN RULES ANSWERING]\n\n";
    rules += "Consider the following equation to assign a probability range to each node:\n\n";
    rules += detail::influence_equation(matrix.metric_names);
    rules += "\n\n";
    rules +=
        "- Alpha: Represents the weighting coefficients assigned to each metric. The sum of "
        "all alpha values must equal 1, and each alpha value is constrained to the range "
        "(0, 1).\n";
    rules +=
        "- Beta: Represents a factor of desirable results for each metric. Each beta value "
        "is independent and constrained to the range (0, 1).\n\n";
    rules += "The response must be only in the following format:\n\n";
    for (std::size_t i = 0; i < set.k(); ++i)
        rules += "alpha_" + std::to_string(i + 1) + "={{value_alpha_" + std::to_string(i + 1) +
                 "}}\n";
    for (std::size_t i = 0; i < set.k(); ++i)
        rules += "beta_" + std::to_string(i + 1) + "={{value_beta_" + std::to_string(i + 1) +
                 "}}\n";
    rules += "\n[END RULES ANSWERING]";
    bundle.rules_tag = std::move(rules);

    bundle.rendered =
        bundle.problem_tag + "\n\n" + bundle.evaluation_tag + "\n\n" + bundle.rules_tag + "\n";
    bundle.token_estimate = bundle.rendered.size() / 4;
    return bundle;
}

// Checks that all section markers are present exactly once and correctly
// ordered, and that the data block has one header row plus m data rows.
inline bool validate_prompt_structure(const std::string& rendered, std::size_t m,
                                      std::string* why = nullptr) {
    static constexpr const char* kMarkers[] = {
        "[BEGIN PROBLEM]",  "[END PROBLEM]", "[BEGIN EVALUATION SEQUENCE]",
        "[BEGIN DATA]",     "[END DATA]",    "[END EVALUATION SEQUENCE]",
        "[BEGIN RULES ANSWERING]", "[END RULES ANSWERING]",
    };
    std::size_t cursor = 0;
    std::size_t data_begin = 0, data_end = 0;
    for (const char* marker : kMarkers) {
        const auto pos = rendered.find(marker, cursor);
        if (pos == std::string::npos) {
            if (why) *why = std::string("missing or misordered marker: ") + marker;
            return false;
        }
        if (rendered.find(marker, pos + 1) != std::string::npos) {
            if (why) *why = std::string("duplicated marker: ") + marker;
            return false;
        }
        if (std::string_view(marker) == "[BEGIN DATA]") data_begin = pos + std::strlen(marker);
        if (std::string_view(marker) == "[END DATA]") data_end = pos;
        cursor = pos + 1;
    }
    std::size_t lines = 0;
    bool in_line = false;
    for (std::size_t i = data_begin; i < data_end; ++i) {
        if (rendered[i] == '\n') {
            in_line = false;
        } else if (!in_line && rendered[i] != '\r' && rendered[i] != ' ') {
            in_line = true;
            ++lines;
        }
    }
    if (lines != m + 1) {
        if (why)
            *why = "data block has " + std::to_string(lines) + " rows, expected " +
                   std::to_string(m + 1);
        return false;
    }
    return true;
}

}  // namespace lrs
