#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "macroforge/strips.hpp"

namespace macroforge {

/*
  Bijection between ground-action signatures and dense item ids 1..k, in
  lexicographic signature order. Item 0 is never used; SPMF files reserve
  non-positive integers for separators.
*/
class ActionDictionary {
public:
    ActionDictionary() = default;

    static ActionDictionary from_signatures(const std::set<std::string>& signatures) {
        ActionDictionary dict;
        dict.signatures_.reserve(signatures.size() + 1);
        dict.signatures_.push_back("");  // id 0 unused
        for (const auto& sig : signatures) {  // std::set iterates in sorted order
            dict.ids_.emplace(sig, static_cast<int>(dict.signatures_.size()));
            dict.signatures_.push_back(sig);
        }
        return dict;
    }

    int size() const {
        return static_cast<int>(signatures_.size()) - 1;
    }

    // 0 when the signature is not in the dictionary.
    int id(const std::string& signature) const {
        auto it = ids_.find(signature);
        return it == ids_.end() ? 0 : it->second;
    }

    const std::string& signature(int item) const {
        if (item < 1 || item > size())
            throw std::out_of_range("item id out of range: " + std::to_string(item));
        return signatures_[item];
    }

    bool operator==(const ActionDictionary&) const = default;

private:
    std::vector<std::string> signatures_;
    std::unordered_map<std::string, int> ids_;
};

// A plan corpus as integer item sequences.
struct SequenceDatabase {
    std::vector<std::vector<int>> sequences;
    ActionDictionary dictionary;
    std::vector<std::string> origins;  // one label per sequence (plan file names)

    int size() const {
        return static_cast<int>(sequences.size());
    }
};

// A frequent maximal contiguous action sequence.
struct Pattern {
    std::vector<int> items;
    int support = 0;

    bool operator==(const Pattern&) const = default;
};

struct MiningConfig {
    double minsup = 0.01;  // fraction of the database, in (0, 1]
    int max_length = 0;    // 0 = unlimited

    // ceil(minsup * N), at least 1. The epsilon absorbs binary-representation
    // noise in products like 0.07 * 100.
    int threshold(int database_size) const {
        int t = static_cast<int>(std::ceil(minsup * database_size - 1e-9));
        return t < 1 ? 1 : t;
    }
};

inline SequenceDatabase build_sequence_db(const std::vector<Plan>& plans,
                                          std::vector<std::string> origins = {}) {
    if (plans.empty())
        throw std::invalid_argument("cannot build a sequence database from an empty corpus");
    std::set<std::string> signatures;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        if (plans[i].steps.empty())
            throw std::invalid_argument("plan " + std::to_string(i) + " is empty");
        signatures.insert(plans[i].steps.begin(), plans[i].steps.end());
    }
    SequenceDatabase db;
    db.dictionary = ActionDictionary::from_signatures(signatures);
    db.sequences.reserve(plans.size());
    for (const auto& plan : plans) {
        std::vector<int> seq;
        seq.reserve(plan.steps.size());
        for (const auto& step : plan.steps)
            seq.push_back(db.dictionary.id(step));
        db.sequences.push_back(std::move(seq));
    }
    if (origins.empty()) {
        for (std::size_t i = 0; i < plans.size(); ++i)
            origins.push_back("plan-" + std::to_string(i));
    }
    db.origins = std::move(origins);
    return db;
}

// Number of sequences containing `items` contiguously, counted once per
// sequence regardless of occurrence multiplicity.
inline int support_of(const SequenceDatabase& db, std::span<const int> items) {
    if (items.empty())
        throw std::invalid_argument("support_of: empty pattern");
    int support = 0;
    for (const auto& seq : db.sequences) {
        if (seq.size() < items.size())
            continue;
        for (std::size_t start = 0; start + items.size() <= seq.size(); ++start) {
            if (std::equal(items.begin(), items.end(), seq.begin() + start)) {
                ++support;
                break;
            }
        }
    }
    return support;
}

namespace mining_detail {

struct Occurrence {
    int seq;
    int pos;  // start index of the pattern occurrence
};

}  // namespace mining_detail

/*
  Mines all maximal frequent contiguous patterns by depth-first prefix
  growth over vertical occurrence lists (sequence, start-position). Because
  occurrences are contiguous, every substring of a frequent pattern occurs
  wherever the pattern occurs and is itself frequent; so a frequent pattern
  is non-maximal exactly when one of its single-item left or right
  extensions is frequent. That local test makes the maximality filter exact
  without pairwise containment checks.
*/
inline std::vector<Pattern> mine_maximal(const SequenceDatabase& db, const MiningConfig& cfg) {
    using mining_detail::Occurrence;
    if (db.sequences.empty())
        throw std::invalid_argument("mine_maximal: empty database");
    const int threshold = cfg.threshold(db.size());
    const int max_length = cfg.max_length;
    const int alphabet = db.dictionary.size();

    std::vector<Pattern> out;
    std::vector<int> pattern;

    auto distinct = [](const std::vector<Occurrence>& occs) {
        int count = 0, last = -1;
        for (const auto& occ : occs) {
            if (occ.seq != last) {
                ++count;
                last = occ.seq;
            }
        }
        return count;
    };

    auto dfs = [&](auto&& self, const std::vector<Occurrence>& occs, int support) -> void {
        const int length = static_cast<int>(pattern.size());
        bool length_capped = max_length > 0 && length >= max_length;

        // Right extensions, grouped by next item; occurrence order is
        // preserved, so the lists stay sorted by (seq, pos).
        std::map<int, std::vector<Occurrence>> right;
        for (const auto& occ : occs) {
            const auto& seq = db.sequences[occ.seq];
            std::size_t next = occ.pos + length;
            if (next < seq.size())
                right[seq[next]].push_back(occ);
        }
        bool has_frequent_right = false;
        for (auto& [item, item_occs] : right) {
            if (distinct(item_occs) >= threshold) {
                has_frequent_right = true;
                if (!length_capped) {
                    pattern.push_back(item);
                    self(self, item_occs, distinct(item_occs));
                    pattern.pop_back();
                }
            }
        }

        // Frequent left extension?
        bool has_frequent_left = false;
        {
            std::map<int, std::pair<int, int>> counts;  // item -> (count, last seq)
            for (const auto& occ : occs) {
                if (occ.pos == 0)
                    continue;
                int item = db.sequences[occ.seq][occ.pos - 1];
                auto& [count, last] = counts[item];
                if (count == 0 || last != occ.seq) {
                    ++count;
                    last = occ.seq;
                }
            }
            for (const auto& [item, cl] : counts) {
                if (cl.first >= threshold) {
                    has_frequent_left = true;
                    break;
                }
            }
        }

        if (length_capped || (!has_frequent_right && !has_frequent_left))
            out.push_back({pattern, support});
    };

    for (int item = 1; item <= alphabet; ++item) {
        std::vector<Occurrence> occs;
        for (int si = 0; si < db.size(); ++si) {
            const auto& seq = db.sequences[si];
            for (std::size_t pos = 0; pos < seq.size(); ++pos) {
                if (seq[pos] == item)
                    occs.push_back({si, static_cast<int>(pos)});
            }
        }
        int support = distinct(occs);
        if (support >= threshold) {
            pattern.assign(1, item);
            dfs(dfs, occs, support);
            pattern.clear();
        }
    }

    std::sort(out.begin(), out.end(),
              [](const Pattern& a, const Pattern& b) { return a.items < b.items; });
    return out;
}

/*
  SPMF sequence-file format: one line per sequence; each item is a positive
  integer followed by " -1 "; the line is terminated by "-2".
*/
inline std::string spmf_encode(const SequenceDatabase& db) {
    std::string out;
    for (const auto& seq : db.sequences) {
        for (int item : seq) {
            out += std::to_string(item);
            out += " -1 ";
        }
        out += "-2\n";
    }
    return out;
}

inline std::vector<std::vector<int>> spmf_decode(const std::string& text) {
    std::vector<std::vector<int>> sequences;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<int> values;
        for (const auto& tok : detail::split_ws(line)) {
            try {
                std::size_t used = 0;
                int v = std::stoi(tok, &used);
                if (used != tok.size())
                    throw std::invalid_argument(tok);
                values.push_back(v);
            } catch (const std::exception&) {
                throw FormatError("not an integer: '" + tok + "'", line_no);
            }
        }
        std::vector<int> seq;
        std::size_t i = 0;
        while (true) {
            if (i >= values.size())
                throw FormatError("sequence not terminated by -2", line_no);
            if (values[i] == -2) {
                if (i + 1 != values.size())
                    throw FormatError("tokens after the -2 terminator", line_no);
                break;
            }
            if (values[i] <= 0)
                throw FormatError("expected a positive item, got "
                                  + std::to_string(values[i]), line_no);
            if (i + 1 >= values.size() || values[i + 1] != -1)
                throw FormatError("item " + std::to_string(values[i])
                                  + " not followed by -1", line_no);
            seq.push_back(values[i]);
            i += 2;
        }
        if (seq.empty())
            throw FormatError("empty sequence", line_no);
        sequences.push_back(std::move(seq));
    }
    return sequences;
}

// Dictionary sidecar: one "id<TAB>signature" per line, ids dense from 1.
inline std::string encode_dictionary(const ActionDictionary& dict) {
    std::string out;
    for (int i = 1; i <= dict.size(); ++i) {
        out += std::to_string(i);
        out += '\t';
        out += dict.signature(i);
        out += '\n';
    }
    return out;
}

inline ActionDictionary decode_dictionary(const std::string& text) {
    std::set<std::string> signatures;
    std::vector<std::string> in_order;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("expected id<TAB>signature", line_no);
        int id;
        try {
            id = std::stoi(line.substr(0, tab));
        } catch (const std::exception&) {
            throw FormatError("bad item id", line_no);
        }
        std::string sig = line.substr(tab + 1);
        if (sig.empty())
            throw FormatError("empty signature", line_no);
        if (id != static_cast<int>(in_order.size()) + 1)
            throw FormatError("item ids must be dense from 1; got " + std::to_string(id),
                              line_no);
        if (!signatures.insert(sig).second)
            throw FormatError("duplicate signature: " + sig, line_no);
        in_order.push_back(sig);
    }
    ActionDictionary dict = ActionDictionary::from_signatures(signatures);
    // The file must already be in dictionary order, or ids would not round-trip.
    for (std::size_t i = 0; i < in_order.size(); ++i) {
        if (dict.signature(static_cast<int>(i) + 1) != in_order[i])
            throw FormatError("signatures out of lexicographic order: " + in_order[i], 0);
    }
    return dict;
}

// A pattern with its items decoded back to action signatures.
struct SignaturePattern {
    std::vector<std::string> signatures;
    int support = 0;

    bool operator==(const SignaturePattern&) const = default;
};

// Mined-pattern file: one pattern per line, "sig1 ; sig2 ; ... #SUP: <count>".
inline std::string encode_patterns(const std::vector<Pattern>& patterns,
                                   const ActionDictionary& dict) {
    std::string out;
    for (const auto& pattern : patterns) {
        for (std::size_t i = 0; i < pattern.items.size(); ++i) {
            if (i > 0)
                out += " ; ";
            out += dict.signature(pattern.items[i]);
        }
        out += " #SUP: " + std::to_string(pattern.support) + "\n";
    }
    return out;
}

inline std::vector<SignaturePattern> decode_patterns(const std::string& text) {
    std::vector<SignaturePattern> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos || line[begin] == ';' || line[begin] == '#')
            continue;
        std::size_t sup = line.rfind("#SUP:");
        if (sup == std::string::npos)
            throw FormatError("missing #SUP: marker", line_no);
        SignaturePattern pattern;
        try {
            pattern.support = std::stoi(line.substr(sup + 5));
        } catch (const std::exception&) {
            throw FormatError("bad support count", line_no);
        }
        std::string items = line.substr(0, sup);
        std::size_t pos = 0;
        while (pos != std::string::npos) {
            std::size_t sep = items.find(" ; ", pos);
            std::string sig = sep == std::string::npos
                ? items.substr(pos)
                : items.substr(pos, sep - pos);
            while (!sig.empty() && (sig.back() == ' ' || sig.back() == '\t'))
                sig.pop_back();
            while (!sig.empty() && (sig.front() == ' ' || sig.front() == '\t'))
                sig.erase(sig.begin());
            if (sig.empty())
                throw FormatError("empty action signature", line_no);
            pattern.signatures.push_back(sig);
            pos = sep == std::string::npos ? std::string::npos : sep + 3;
        }
        if (pattern.signatures.empty())
            throw FormatError("pattern with no actions", line_no);
        out.push_back(std::move(pattern));
    }
    return out;
}

}  // namespace macroforge
