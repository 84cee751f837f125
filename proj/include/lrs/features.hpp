#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lrs/instance.hpp"

namespace lrs {

// Convention for the distance metric when a run's character never recurs:
// the formal definition defaults the next position to n, while the published
// extraction-code description uses a flat 1.0. The formal rule is the
// default; the flag exists for comparisons against code generated from the
// prose description.
enum class DistanceDefault { formula, one };

// M_L: run length over the maximum run length in the instance.
inline std::vector<double> metric_normalized_length(const LrsInstance& inst) {
    std::size_t l_max = 1;
    for (const Run& r : inst.runs) l_max = std::max(l_max, r.length);
    std::vector<double> out;
    out.reserve(inst.m());
    for (const Run& r : inst.runs)
        out.push_back(static_cast<double>(r.length) / static_cast<double>(l_max));
    return out;
}

// M_O: fraction of the alphabet still occurring strictly after the run's end.
inline std::vector<double> metric_opportunity(const LrsInstance& inst) {
    const std::size_t m = inst.m();
    std::vector<double> out(m);
    const double sigma = static_cast<double>(inst.alphabet.size());
    // sweep right-to-left counting distinct characters in the suffix
    std::unordered_set<char32_t> seen;
    for (std::size_t i = m; i-- > 0;) {
        out[i] = static_cast<double>(seen.size()) / sigma;
        seen.insert(inst.runs[i].character);
    }
    return out;
}

// M_D: normalized distance from the run's end to the next occurrence of its
// character; the next position defaults to the last string position when the
// character never recurs.
inline std::vector<double> metric_distance_next(const LrsInstance& inst,
                                                DistanceDefault mode = DistanceDefault::formula) {
    const std::size_t n = inst.n();
    const std::size_t m = inst.m();
    std::vector<double> out(m);
    std::unordered_map<char32_t, std::size_t> next_start;  // char -> start of next same-char run
    for (std::size_t i = m; i-- > 0;) {
        const Run& r = inst.runs[i];
        auto it = next_start.find(r.character);
        if (it != next_start.end()) {
            out[i] = static_cast<double>(it->second - r.end()) / static_cast<double>(n);
        } else if (mode == DistanceDefault::one) {
            out[i] = 1.0;
        } else {
            out[i] = static_cast<double>(n - 1 - r.end()) / static_cast<double>(n);
        }
        next_start[r.character] = r.start;
    }
    return out;
}

// M_F: total occurrences of the run's character over the string length.
inline std::vector<double> metric_char_frequency(const LrsInstance& inst) {
    std::unordered_map<char32_t, std::size_t> count;
    for (char32_t c : inst.text) ++count[c];
    std::vector<double> out;
    out.reserve(inst.m());
    const double n = static_cast<double>(inst.n());
    for (const Run& r : inst.runs) out.push_back(static_cast<double>(count[r.character]) / n);
    return out;
}

// ---------------------------------------------------------------------------
// Ablation metric set: four metrics kept deliberately expensive-looking in
// formulation but normalized to [0,1]. Formal conventions:
//   character change frequency   adjacent unequal pairs strictly after the
//                                run's end, over n-1
//   sequence break potential     fraction of other runs whose character
//                                occurs on both sides of this run (selecting
//                                it splits their block), over m-1
//   immediate next run length    l_{i+1} / l_max, 0 for the last run
//   external fragmentation       non-matching characters between the run's
//                                end and the next occurrence of its
//                                character, over n
// ---------------------------------------------------------------------------

inline std::vector<double> metric_change_frequency(const LrsInstance& inst) {
    const std::size_t n = inst.n();
    const std::size_t m = inst.m();
    std::vector<double> out(m, 0.0);
    if (n < 2) return out;
    // changes[k] = number of adjacent unequal pairs (j, j+1) with j >= k
    std::vector<std::size_t> changes(n + 1, 0);
    for (std::size_t j = n - 1; j-- > 0;)
        changes[j] = changes[j + 1] + (inst.text[j] != inst.text[j + 1] ? 1 : 0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t e = inst.runs[i].end();
        out[i] = (e + 1 < n) ? static_cast<double>(changes[e + 1]) / static_cast<double>(n - 1)
                             : 0.0;
    }
    return out;
}

inline std::vector<double> metric_sequence_break_potential(const LrsInstance& inst) {
    const std::size_t m = inst.m();
    std::vector<double> out(m, 0.0);
    if (m < 2) return out;
    std::unordered_map<char32_t, std::size_t> before, after;
    for (const Run& r : inst.runs) ++after[r.character];
    for (std::size_t i = 0; i < m; ++i) {
        const char32_t c = inst.runs[i].character;
        --after[c];
        std::size_t broken = 0;
        for (const auto& [ch, cnt_after] : after) {
            if (ch == c || cnt_after == 0) continue;
            auto it = before.find(ch);
            if (it != before.end() && it->second > 0) broken += it->second + cnt_after;
        }
        out[i] = static_cast<double>(broken) / static_cast<double>(m - 1);
        ++before[c];
    }
    return out;
}

inline std::vector<double> metric_next_run_length(const LrsInstance& inst) {
    const std::size_t m = inst.m();
    std::size_t l_max = 1;
    for (const Run& r : inst.runs) l_max = std::max(l_max, r.length);
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i)
        out[i] = static_cast<double>(inst.runs[i + 1].length) / static_cast<double>(l_max);
    return out;
}

inline std::vector<double> metric_external_fragmentation(const LrsInstance& inst) {
    const std::size_t n = inst.n();
    const std::size_t m = inst.m();
    std::vector<double> out(m);
    std::unordered_map<char32_t, std::size_t> next_start;
    for (std::size_t i = m; i-- > 0;) {
        const Run& r = inst.runs[i];
        auto it = next_start.find(r.character);
        // everything strictly between the run's end and the next occurrence
        // differs from the run's character by maximality of runs; with no
        // next occurrence the window ends one short of the last position
        std::size_t span = 0;
        if (it != next_start.end())
            span = it->second - r.end() - 1;
        else if (r.end() + 2 <= n)
            span = n - 2 - r.end();
        out[i] = static_cast<double>(span) / static_cast<double>(n);
        next_start[r.character] = r.start;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metric sets and the feature matrix
// ---------------------------------------------------------------------------

struct MetricDef {
    std::string name;         // column name used in prompts and CSV headers
    std::string description;  // one-line description used in the prompt
    std::function<std::vector<double>(const LrsInstance&)> compute;
};

struct MetricSet {
    std::string id;
    std::vector<MetricDef> metrics;

    std::size_t k() const { return metrics.size(); }

    static MetricSet curated() {
        return MetricSet{
            "curated",
            {
                {"normalized-length",
                 "Length of the run divided by the maximum run length in the entire list.",
                 [](const LrsInstance& i) { return metric_normalized_length(i); }},
                {"opportunity",
                 "Fraction of the total alphabet that appears in the string after the current "
                 "run has ended.",
                 [](const LrsInstance& i) { return metric_opportunity(i); }},
                {"distance-next",
                 "Normalized distance to the next occurrence of the same symbol.",
                 [](const LrsInstance& i) { return metric_distance_next(i); }},
                {"character-frequency",
                 "Frequency of the character in the entire string divided by its total length.",
                 [](const LrsInstance& i) { return metric_char_frequency(i); }},
            }};
    }

    static MetricSet simple2() {
        auto full = curated();
        return MetricSet{"simple2", {full.metrics[0], full.metrics[1]}};
    }

    static MetricSet random4() {
        return MetricSet{
            "random4",
            {
                {"character-change-frequency",
                 "Number of subsequent character changes in the string after the run, "
                 "normalized.",
                 [](const LrsInstance& i) { return metric_change_frequency(i); }},
                {"sequence-break-potential",
                 "Proportion of other runs that would become unreachable if this run were to "
                 "be selected.",
                 [](const LrsInstance& i) { return metric_sequence_break_potential(i); }},
                {"immediate-next-run-length",
                 "Length of the very next run in the sequence, normalized.",
                 [](const LrsInstance& i) { return metric_next_run_length(i); }},
                {"external-fragmentation-potential",
                 "Non-matching characters between the run and the next occurrence of its "
                 "character, normalized.",
                 [](const LrsInstance& i) { return metric_external_fragmentation(i); }},
            }};
    }

    static MetricSet by_name(const std::string& name) {
        if (name == "curated") return curated();
        if (name == "simple2") return simple2();
        if (name == "random4") return random4();
        throw ConfigError("unknown metric set: " + name);
    }
};

// Per-run metric values, one row per run, columns in metric-set order.
struct FeatureMatrix {
    std::vector<std::string> metric_names;
    std::vector<std::vector<double>> rows;

    std::size_t m() const { return rows.size(); }
    std::size_t k() const { return metric_names.size(); }
};

inline FeatureMatrix build_feature_matrix(const LrsInstance& inst, const MetricSet& set) {
    if (set.metrics.empty()) throw ConfigError("metric set must not be empty");
    FeatureMatrix matrix;
    matrix.metric_names.reserve(set.k());
    std::vector<std::vector<double>> columns;
    columns.reserve(set.k());
    for (const MetricDef& def : set.metrics) {
        matrix.metric_names.push_back(def.name);
        columns.push_back(def.compute(inst));
    }
    matrix.rows.assign(inst.m(), std::vector<double>(set.k()));
    for (std::size_t i = 0; i < inst.m(); ++i)
        for (std::size_t j = 0; j < set.k(); ++j) matrix.rows[i][j] = columns[j][i];
    return matrix;
}

// Fixed-precision scientific rendering, e.g. 0.3 -> "3.00e-1". Stable across
// runs and platforms; used verbatim inside prompts.
inline std::string format_scientific(double value, int significant_digits = 3) {
    const int decimals = significant_digits - 1;
    if (value == 0.0) {
        std::string mantissa = "0.";
        mantissa.append(static_cast<std::size_t>(decimals), '0');
        return mantissa + "e0";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*e", decimals, value);
    // normalize the exponent: strip '+' and leading zeros ("e-01" -> "e-1")
    std::string s(buf);
    const auto epos = s.find('e');
    std::string mantissa = s.substr(0, epos);
    int exponent = std::stoi(s.substr(epos + 1));
    return mantissa + "e" + std::to_string(exponent);
}

// Rows rendered as `<run_id>,<v1>,<v2>,...` with 1-based run ids.
inline std::vector<std::string> format_rows_scientific(const FeatureMatrix& matrix,
                                                       int significant_digits = 3) {
    std::vector<std::string> out;
    out.reserve(matrix.m());
    for (std::size_t i = 0; i < matrix.m(); ++i) {
        std::string line = std::to_string(i + 1);
        for (double v : matrix.rows[i]) {
            line += ',';
            line += format_scientific(v, significant_digits);
        }
        out.push_back(std::move(line));
    }
    return out;
}

// CSV export: header of metric names prefixed by the run column, then the
// same rows the prompt data block carries.
inline std::string feature_matrix_csv(const FeatureMatrix& matrix) {
    std::string out = "run";
    for (const auto& name : matrix.metric_names) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (const auto& line : format_rows_scientific(matrix)) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace lrs
