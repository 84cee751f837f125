#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrs/errors.hpp"
#include "lrs/rng.hpp"

namespace lrs {

// A maximal uniform substring. Indices are 0-based; `end` is inclusive.
struct Run {
    char32_t character = 0;
    std::size_t start = 0;
    std::size_t length = 0;

    std::size_t end() const { return start + length - 1; }

    bool operator==(const Run&) const = default;
};

namespace detail {

// Minimal UTF-8 decode/encode. Instance files are plain text; anything that
// is not well-formed UTF-8 is rejected at the I/O boundary.
inline std::u32string decode_utf8(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) {
        const unsigned char b0 = bytes[i];
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xe0) == 0xc0) {
            cp = b0 & 0x1f;
            len = 2;
        } else if ((b0 & 0xf0) == 0xe0) {
            cp = b0 & 0x0f;
            len = 3;
        } else if ((b0 & 0xf8) == 0xf0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            throw FormatError("invalid UTF-8 lead byte");
        }
        if (i + len > bytes.size()) throw FormatError("truncated UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char b = bytes[i + k];
            if ((b & 0xc0) != 0x80) throw FormatError("invalid UTF-8 continuation byte");
            cp = (cp << 6) | (b & 0x3f);
        }
        static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMin[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff))
            throw FormatError("invalid UTF-8 code point");
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline std::string encode_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else {
            out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        }
    }
    return out;
}

}  // namespace detail

// Splits a string into its maximal uniform substrings, left to right.
inline std::vector<Run> decompose(std::u32string_view text) {
    std::vector<Run> runs;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t j = i + 1;
        while (j < text.size() && text[j] == text[i]) ++j;
        runs.push_back(Run{text[i], i, j - i});
        i = j;
    }
    return runs;
}

inline std::vector<Run> decompose(std::string_view utf8) {
    return decompose(detail::decode_utf8(utf8));
}

// An LRS instance: the input string, its alphabet and its run decomposition.
// Immutable after construction; safe to share across threads.
struct LrsInstance {
    std::u32string text;
    std::vector<char32_t> alphabet;  // sorted, distinct
    std::vector<Run> runs;
    std::string name;

    std::size_t n() const { return text.size(); }
    std::size_t m() const { return runs.size(); }

    static LrsInstance from_text(std::string_view utf8, std::string name = "") {
        return from_text(detail::decode_utf8(utf8), std::move(name));
    }

    static LrsInstance from_text(std::u32string text, std::string name = "") {
        LrsInstance inst;
        inst.text = std::move(text);
        inst.name = std::move(name);
        inst.runs = decompose(inst.text);
        std::set<char32_t> symbols(inst.text.begin(), inst.text.end());
        inst.alphabet.assign(symbols.begin(), symbols.end());
        return inst;
    }

    std::string utf8_text() const { return detail::encode_utf8(text); }
};

// A feasible selection of runs and its objective value.
struct RunSolution {
    std::vector<std::size_t> selected;  // ascending run indices
    std::int64_t score = 0;

    bool operator==(const RunSolution&) const = default;
};

namespace detail {

inline void check_selection_indices(const LrsInstance& inst,
                                    const std::vector<std::size_t>& selected) {
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t idx : selected) {
        if (idx >= inst.m())
            throw std::out_of_range("run index " + std::to_string(idx) + " out of range");
        if (!first && idx <= prev)
            throw std::invalid_argument("selection indices must be strictly ascending");
        prev = idx;
        first = false;
    }
}

}  // namespace detail

// True iff, within the selected sequence, all runs of any one character form
// one contiguous block. Full scan; the incremental structure used by the
// decoders is cross-checked against this.
inline bool is_feasible(const LrsInstance& inst, const std::vector<std::size_t>& selected) {
    detail::check_selection_indices(inst, selected);
    std::unordered_map<char32_t, bool> finished;  // char -> block closed
    char32_t open = 0;
    bool any = false;
    for (std::size_t idx : selected) {
        const char32_t c = inst.runs[idx].character;
        if (any && c == open) continue;
        auto [it, inserted] = finished.emplace(c, false);
        if (!inserted && it->second) return false;  // re-opens a closed block
        if (any) finished[open] = true;
        open = c;
        any = true;
    }
    return true;
}

// Total length of the selected runs. The selection must be feasible.
inline std::int64_t objective(const LrsInstance& inst,
                              const std::vector<std::size_t>& selected) {
    if (!is_feasible(inst, selected))
        throw std::invalid_argument("objective() called on infeasible selection");
    std::int64_t score = 0;
    for (std::size_t idx : selected) score += static_cast<std::int64_t>(inst.runs[idx].length);
    return score;
}

// Incremental feasibility structure used by the decoders. Holds the current
// selection ordered by run index and answers "may run i be inserted?" in
// O(log k).
//
// Insertion of run i with character c is legal iff
//   (a) the selection neighbors immediately left and right of i do not share
//       a character c' != c (insertion would split that block), and
//   (b) if c is already selected, i is adjacent in selection order to c's
//       block.
class SelectionBuilder {
public:
    explicit SelectionBuilder(const LrsInstance& inst) : inst_(&inst) {}

    bool can_insert(std::size_t idx) const {
        const char32_t c = inst_->runs[idx].character;
        auto right = selected_.lower_bound(idx);
        auto left = right;
        const bool has_left = left != selected_.begin();
        if (has_left) --left;
        const bool has_right = right != selected_.end();

        const char32_t cl = has_left ? inst_->runs[*left].character : 0;
        const char32_t cr = has_right ? inst_->runs[*right].character : 0;
        if (has_left && has_right && cl == cr && cl != c) return false;
        auto it = char_count_.find(c);
        if (it != char_count_.end() && it->second > 0) {
            if (!(has_left && cl == c) && !(has_right && cr == c)) return false;
        }
        return true;
    }

    bool try_insert(std::size_t idx) {
        if (!can_insert(idx)) return false;
        selected_.insert(idx);
        ++char_count_[inst_->runs[idx].character];
        score_ += static_cast<std::int64_t>(inst_->runs[idx].length);
        return true;
    }

    RunSolution solution() const {
        return RunSolution{{selected_.begin(), selected_.end()}, score_};
    }

    std::int64_t score() const { return score_; }

private:
    const LrsInstance* inst_;
    std::set<std::size_t> selected_;
    std::unordered_map<char32_t, std::size_t> char_count_;
    std::int64_t score_ = 0;
};

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

// Largest alphabet that stays on contiguous printable ASCII from 'A'.
inline constexpr std::size_t kMaxGeneratedAlphabet = 58;

// Generates a random instance: n characters drawn i.i.d. uniformly from an
// alphabet of `sigma` symbols 'A', 'B', ... Deterministic for a fixed seed
// and rng::kGeneratorVersion. `rep` is the replicate index used in the
// instance name.
inline LrsInstance generate(std::size_t n, std::size_t sigma, std::uint64_t seed,
                            std::size_t rep = 1) {
    if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
    if (sigma < 1) throw std::invalid_argument("generate: sigma must be >= 1");
    if (sigma > kMaxGeneratedAlphabet)
        throw CapabilityError("generate: sigma > " + std::to_string(kMaxGeneratedAlphabet) +
                              " not supported by the ASCII symbol scheme");
    rng::Stream stream(rng::derive_seed(seed, "instance-gen"));
    std::u32string text(n, U'A');
    for (auto& ch : text)
        ch = static_cast<char32_t>(U'A' + stream.next_below(sigma));
    std::string name = "len_" + std::to_string(n) + "_sigma_" + std::to_string(sigma) + "_" +
                       std::to_string(rep);
    return LrsInstance::from_text(std::move(text), std::move(name));
}

// ---------------------------------------------------------------------------
// Exact solvers
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEnumerationMaxRuns = 22;
inline constexpr std::size_t kDpMaxAlphabet = 12;

// Brute force over all 2^m run subsets with a full feasibility scan per
// subset. Independent of the DP below; used as its cross-check.
inline RunSolution exact_solve_enumeration(const LrsInstance& inst) {
    const std::size_t m = inst.m();
    if (m > kEnumerationMaxRuns)
        throw CapabilityError("enumeration oracle limited to m <= " +
                              std::to_string(kEnumerationMaxRuns));
    // map characters to small ids once
    std::unordered_map<char32_t, int> char_id;
    for (const Run& r : inst.runs) char_id.emplace(r.character, static_cast<int>(char_id.size()));
    std::vector<int> run_char(m);
    for (std::size_t i = 0; i < m; ++i) run_char[i] = char_id[inst.runs[i].character];

    std::uint64_t best_mask = 0;
    std::int64_t best_score = 0;
    const std::uint64_t total = std::uint64_t{1} << m;
    std::vector<std::uint8_t> closed(char_id.size());
    for (std::uint64_t mask = 1; mask < total; ++mask) {
        std::fill(closed.begin(), closed.end(), 0);
        int open = -1;
        std::int64_t score = 0;
        bool ok = true;
        for (std::size_t i = 0; i < m; ++i) {
            if (!(mask & (std::uint64_t{1} << i))) continue;
            const int c = run_char[i];
            if (c != open) {
                if (closed[c]) {
                    ok = false;
                    break;
                }
                if (open >= 0) closed[open] = 1;
                open = c;
            }
            score += static_cast<std::int64_t>(inst.runs[i].length);
        }
        if (ok && score > best_score) {
            best_score = score;
            best_mask = mask;
        }
    }
    RunSolution sol;
    sol.score = best_score;
    for (std::size_t i = 0; i < m; ++i)
        if (best_mask & (std::uint64_t{1} << i)) sol.selected.push_back(i);
    return sol;
}

// Left-to-right DP over states (set of permanently closed characters,
// currently open character or none). Taking a run of a new character closes
// the open one. O(m * 2^sigma * sigma) time.
inline RunSolution exact_solve_dp(const LrsInstance& inst) {
    const std::size_t m = inst.m();
    const std::size_t sigma = inst.alphabet.size();
    if (sigma > kDpMaxAlphabet)
        throw CapabilityError("dp oracle limited to sigma <= " + std::to_string(kDpMaxAlphabet));
    std::unordered_map<char32_t, int> char_id;
    for (std::size_t i = 0; i < sigma; ++i) char_id[inst.alphabet[i]] = static_cast<int>(i);

    const std::size_t open_states = sigma + 1;       // sigma means "none open"
    const std::size_t num_states = (std::size_t{1} << sigma) * open_states;
    if (m > 0 && num_states > (std::size_t{64} << 20) / m)
        throw CapabilityError("dp oracle: state table too large for this instance");

    constexpr std::int64_t kUnreached = -1;
    // layer[i][state] = best score over runs [0, i) ending in `state`
    std::vector<std::vector<std::int64_t>> layer(m + 1,
                                                 std::vector<std::int64_t>(num_states, kUnreached));
    const auto state_of = [&](std::uint32_t mask, std::size_t open) {
        return static_cast<std::size_t>(mask) * open_states + open;
    };
    layer[0][state_of(0, sigma)] = 0;

    for (std::size_t i = 0; i < m; ++i) {
        const int c = char_id[inst.runs[i].character];
        const auto len = static_cast<std::int64_t>(inst.runs[i].length);
        for (std::size_t s = 0; s < num_states; ++s) {
            const std::int64_t cur = layer[i][s];
            if (cur == kUnreached) continue;
            const auto mask = static_cast<std::uint32_t>(s / open_states);
            const std::size_t open = s % open_states;
            // skip run i
            layer[i + 1][s] = std::max(layer[i + 1][s], cur);
            // take run i
            if (open == static_cast<std::size_t>(c)) {
                layer[i + 1][s] = std::max(layer[i + 1][s], cur + len);
            } else if (!(mask & (std::uint32_t{1} << c))) {
                std::uint32_t next_mask = mask;
                if (open != sigma) next_mask |= std::uint32_t{1} << open;
                const std::size_t next = state_of(next_mask, static_cast<std::size_t>(c));
                layer[i + 1][next] = std::max(layer[i + 1][next], cur + len);
            }
        }
    }

    std::size_t best_state = state_of(0, sigma);
    std::int64_t best = 0;
    for (std::size_t s = 0; s < num_states; ++s)
        if (layer[m][s] > best) {
            best = layer[m][s];
            best_state = s;
        }

    // walk backwards to recover one optimal selection
    RunSolution sol;
    sol.score = best;
    std::size_t state = best_state;
    std::int64_t remaining = best;
    for (std::size_t i = m; i-- > 0;) {
        const int c = char_id[inst.runs[i].character];
        const auto len = static_cast<std::int64_t>(inst.runs[i].length);
        if (layer[i][state] == remaining) continue;  // run i was skipped
        const auto mask = static_cast<std::uint32_t>(state / open_states);
        const std::size_t open = state % open_states;
        bool took = false;
        if (open == static_cast<std::size_t>(c)) {
            // either extended an open block or opened it fresh from a
            // predecessor state; try "extend" first
            if (layer[i][state] == remaining - len) {
                took = true;
            } else {
                // opened at run i: predecessor had some other open character
                // (or none) and c's bit unset
                for (std::size_t prev_open = 0; prev_open <= sigma && !took; ++prev_open) {
                    if (prev_open == static_cast<std::size_t>(c)) continue;
                    std::uint32_t prev_mask = mask;
                    if (prev_open != sigma) {
                        if (!(mask & (std::uint32_t{1} << prev_open))) continue;
                        prev_mask = mask & ~(std::uint32_t{1} << prev_open);
                    }
                    const std::size_t prev = state_of(prev_mask, prev_open);
                    if (layer[i][prev] == remaining - len) {
                        state = prev;
                        took = true;
                    }
                }
            }
        }
        if (took) {
            sol.selected.push_back(i);
            remaining -= len;
        }
    }
    std::reverse(sol.selected.begin(), sol.selected.end());
    return sol;
}

// Exact oracle: enumeration for small run counts, DP for small alphabets.
inline RunSolution exact_solve(const LrsInstance& inst) {
    if (inst.m() <= kEnumerationMaxRuns) return exact_solve_enumeration(inst);
    if (inst.alphabet.size() <= kDpMaxAlphabet) return exact_solve_dp(inst);
    throw CapabilityError("instance exceeds both exact-solver modes (m=" +
                          std::to_string(inst.m()) + ", sigma=" +
                          std::to_string(inst.alphabet.size()) + ")");
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

// Reads a single-line instance file (trailing newline tolerated).
inline LrsInstance read_instance(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open instance file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!bytes.empty() && (bytes.back() == '\n' || bytes.back() == '\r')) bytes.pop_back();
    if (bytes.empty()) throw FormatError("empty instance file: " + path.string());
    if (bytes.find('\n') != std::string::npos || bytes.find('\r') != std::string::npos)
        throw FormatError("instance file must be a single line: " + path.string());
    return LrsInstance::from_text(bytes, path.stem().string());
}

// Writes `<dir>/<name>.txt` and returns the path.
inline std::filesystem::path write_instance(const LrsInstance& inst,
                                            const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto path = dir / (inst.name + ".txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write instance file: " + path.string());
    out << inst.utf8_text() << '\n';
    return path;
}

// One row of the generation manifest that accompanies a generated corpus.
struct ManifestRow {
    std::string file;
    std::size_t n = 0;
    std::size_t sigma = 0;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
};

inline void write_manifest(const std::vector<ManifestRow>& rows,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write manifest: " + path.string());
    out << "file,n,sigma,k,seed,generator_version\n";
    for (const auto& r : rows)
        out << r.file << ',' << r.n << ',' << r.sigma << ',' << r.rep << ',' << r.seed << ','
            << rng::kGeneratorVersion << '\n';
}

}  // namespace lrs
