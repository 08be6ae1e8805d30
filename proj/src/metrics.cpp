#include "deeptrace/metrics.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <limits>
#include <optional>
#include <queue>

#include "deeptrace/errors.hpp"

namespace deeptrace {

const char* metric_key(MetricName m) {
    switch (m) {
        case MetricName::OneSidedAnswer: return "one_sided_answer";
        case MetricName::OverconfidentAnswer: return "overconfident_answer";
        case MetricName::RelevantStatements: return "relevant_statements";
        case MetricName::UncitedSources: return "uncited_sources";
        case MetricName::UnsupportedStatements: return "unsupported_statements";
        case MetricName::SourceNecessity: return "source_necessity";
        case MetricName::CitationAccuracy: return "citation_accuracy";
        case MetricName::CitationThoroughness: return "citation_thoroughness";
    }
    return "?";
}

const char* metric_title(MetricName m) {
    switch (m) {
        case MetricName::OneSidedAnswer: return "One-Sided Answer";
        case MetricName::OverconfidentAnswer: return "Overconfident Answer";
        case MetricName::RelevantStatements: return "Relevant Statements";
        case MetricName::UncitedSources: return "Uncited Sources";
        case MetricName::UnsupportedStatements: return "Unsupported Statements";
        case MetricName::SourceNecessity: return "Source Necessity";
        case MetricName::CitationAccuracy: return "Citation Accuracy";
        case MetricName::CitationThoroughness: return "Citation Thoroughness";
    }
    return "?";
}

MetricName parse_metric_key(const std::string& key) {
    for (MetricName m : kAllMetrics)
        if (key == metric_key(m)) return m;
    throw UnknownMetric(key);
}

bool metric_is_binary(MetricName m) {
    return m == MetricName::OneSidedAnswer || m == MetricName::OverconfidentAnswer;
}

bool metric_is_debate_only(MetricName m) { return metric_is_binary(m); }

bool one_sided(const std::vector<StanceLabel>& stances) {
    bool has_pro = false;
    bool has_con = false;
    for (StanceLabel s : stances) {
        if (s == StanceLabel::Pro) has_pro = true;
        if (s == StanceLabel::Con) has_con = true;
    }
    return !(has_pro && has_con);
}

bool overconfident(bool is_one_sided, int confidence) {
    return is_one_sided && confidence == 5;
}

MetricValue relevant_ratio(int n_relevant, int n_total) {
    if (n_total == 0) return MetricValue::undefined(MetricName::RelevantStatements);
    return MetricValue::of(MetricName::RelevantStatements, Rational(n_relevant, n_total));
}

MetricValue uncited_sources_ratio(const BinaryMatrix& citation, int k) {
    if (static_cast<int>(citation.cols()) != k)
        throw Error("citation matrix has " + std::to_string(citation.cols()) +
                    " columns, expected " + std::to_string(k));
    if (k == 0) return MetricValue::undefined(MetricName::UncitedSources);
    int empty = 0;
    for (std::size_t c = 0; c < citation.cols(); ++c)
        if (citation.col_empty(c)) ++empty;
    return MetricValue::of(MetricName::UncitedSources, Rational(empty, k));
}

MetricValue unsupported_ratio(const BinaryMatrix& support, int n_relevant) {
    if (static_cast<int>(support.rows()) != n_relevant)
        throw Error("support matrix has " + std::to_string(support.rows()) +
                    " rows, expected " + std::to_string(n_relevant));
    if (n_relevant == 0) return MetricValue::undefined(MetricName::UnsupportedStatements);
    int unsupported = 0;
    for (std::size_t r = 0; r < support.rows(); ++r)
        if (support.row_empty(r)) ++unsupported;
    return MetricValue::of(MetricName::UnsupportedStatements, Rational(unsupported, n_relevant));
}

namespace {

/// Dynamic bitset sized for the supported-row universe.
class RowSet {
public:
    explicit RowSet(std::size_t bits = 0) : bits_(bits), words_((bits + 63) / 64, 0) {}

    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

    bool empty() const {
        for (std::uint64_t w : words_)
            if (w != 0) return false;
        return true;
    }

    int count() const {
        int n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    RowSet& operator|=(const RowSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }

    /// this & other
    RowSet and_with(const RowSet& o) const {
        RowSet out(bits_);
        for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = words_[i] & o.words_[i];
        return out;
    }

    /// this & ~other
    RowSet minus(const RowSet& o) const {
        RowSet out(bits_);
        for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = words_[i] & ~o.words_[i];
        return out;
    }

    bool intersects(const RowSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if ((words_[i] & o.words_[i]) != 0) return true;
        return false;
    }

    bool subset_of(const RowSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if ((words_[i] & ~o.words_[i]) != 0) return false;
        return true;
    }

private:
    std::size_t bits_;
    std::vector<std::uint64_t> words_;
};

struct BudgetExhausted {};

/// Exact minimum hitting set by iterative deepening over column index order.
/// Columns are tried in ascending order at every level, so the first cover
/// found at the optimal depth is the lexicographically smallest one.
class CoverSearch {
public:
    CoverSearch(const BinaryMatrix& support, std::int64_t node_budget)
        : budget_(node_budget) {
        const std::size_t cols = support.cols();
        std::vector<std::size_t> supported_rows;
        for (std::size_t r = 0; r < support.rows(); ++r)
            if (!support.row_empty(r)) supported_rows.push_back(r);
        n_rows_ = supported_rows.size();

        col_cover_.assign(cols, RowSet(n_rows_));
        for (std::size_t i = 0; i < supported_rows.size(); ++i)
            for (std::size_t c = 0; c < cols; ++c)
                if (support.get(supported_rows[i], c)) col_cover_[c].set(i);

        universe_ = RowSet(n_rows_);
        for (std::size_t i = 0; i < n_rows_; ++i) universe_.set(i);

        suffix_union_.assign(cols + 1, RowSet(n_rows_));
        for (std::size_t c = cols; c-- > 0;) {
            suffix_union_[c] = suffix_union_[c + 1];
            suffix_union_[c] |= col_cover_[c];
        }
    }

    std::vector<int> greedy() const {
        std::vector<int> chosen;
        RowSet uncovered = universe_;
        while (!uncovered.empty()) {
            int best = -1;
            int best_gain = 0;
            for (std::size_t c = 0; c < col_cover_.size(); ++c) {
                const int gain = col_cover_[c].and_with(uncovered).count();
                if (gain > best_gain) {  // ties keep the smallest index
                    best_gain = gain;
                    best = static_cast<int>(c);
                }
            }
            if (best < 0) break;  // unreachable: every supported row has a column
            chosen.push_back(best);
            uncovered = uncovered.minus(col_cover_[best]);
        }
        // Strip columns made redundant by later greedy picks.
        for (std::size_t i = chosen.size(); i-- > 0;) {
            RowSet rest(n_rows_);
            for (std::size_t j = 0; j < chosen.size(); ++j)
                if (j != i) rest |= col_cover_[chosen[j]];
            if (universe_.subset_of(rest)) chosen.erase(chosen.begin() + i);
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    /// Returns the lexicographically smallest minimum cover, or nullopt when
    /// the node budget ran out first.
    std::optional<std::vector<int>> exact() {
        if (n_rows_ == 0) return std::vector<int>{};
        const std::vector<int> ub = greedy();
        int max_gain = 0;
        for (const RowSet& rs : col_cover_) max_gain = std::max(max_gain, rs.count());
        const int lower =
            max_gain == 0 ? 0 : (static_cast<int>(n_rows_) + max_gain - 1) / max_gain;

        try {
            for (int target = lower; target <= static_cast<int>(ub.size()); ++target) {
                chosen_.clear();
                if (dfs(target, 0, universe_)) return chosen_;
            }
        } catch (const BudgetExhausted&) {
            return std::nullopt;
        }
        return ub;  // unreachable: the greedy size is always feasible
    }

private:
    bool dfs(int target, std::size_t start, const RowSet& uncovered) {
        if (uncovered.empty()) return true;
        if (static_cast<int>(chosen_.size()) >= target) return false;
        if (--budget_ < 0) throw BudgetExhausted{};
        // All remaining rows must be reachable from columns >= start.
        if (!uncovered.subset_of(suffix_union_[start])) return false;
        const int remaining = target - static_cast<int>(chosen_.size());
        int max_gain = 0;
        for (std::size_t c = start; c < col_cover_.size(); ++c)
            max_gain = std::max(max_gain, col_cover_[c].and_with(uncovered).count());
        if (static_cast<std::int64_t>(max_gain) * remaining < uncovered.count()) return false;

        for (std::size_t c = start; c < col_cover_.size(); ++c) {
            if (!col_cover_[c].intersects(uncovered)) continue;
            chosen_.push_back(static_cast<int>(c));
            if (dfs(target, c + 1, uncovered.minus(col_cover_[c]))) return true;
            chosen_.pop_back();
        }
        return false;
    }

    std::size_t n_rows_ = 0;
    RowSet universe_{0};
    std::vector<RowSet> col_cover_;
    std::vector<RowSet> suffix_union_;
    std::vector<int> chosen_;
    std::int64_t budget_;
};

}  // namespace

int hopcroft_karp_matching(const BinaryMatrix& m) {
    const int n_left = static_cast<int>(m.rows());
    const int n_right = static_cast<int>(m.cols());
    std::vector<std::vector<int>> adj(n_left);
    for (int r = 0; r < n_left; ++r)
        for (int c = 0; c < n_right; ++c)
            if (m.get(r, c)) adj[r].push_back(c);

    const int kInf = std::numeric_limits<int>::max();
    std::vector<int> match_left(n_left, -1), match_right(n_right, -1), dist(n_left);

    auto bfs = [&]() {
        std::queue<int> q;
        bool reachable_free = false;
        for (int u = 0; u < n_left; ++u) {
            if (match_left[u] == -1) {
                dist[u] = 0;
                q.push(u);
            } else {
                dist[u] = kInf;
            }
        }
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v : adj[u]) {
                const int w = match_right[v];
                if (w == -1) {
                    reachable_free = true;
                } else if (dist[w] == kInf) {
                    dist[w] = dist[u] + 1;
                    q.push(w);
                }
            }
        }
        return reachable_free;
    };

    std::function<bool(int)> dfs = [&](int u) {
        for (int v : adj[u]) {
            const int w = match_right[v];
            if (w == -1 || (dist[w] == dist[u] + 1 && dfs(w))) {
                match_left[u] = v;
                match_right[v] = u;
                return true;
            }
        }
        dist[u] = kInf;
        return false;
    };

    int matching = 0;
    while (bfs())
        for (int u = 0; u < n_left; ++u)
            if (match_left[u] == -1 && dfs(u)) ++matching;
    return matching;
}

std::pair<NecessityResult, MetricValue> source_necessity(const BinaryMatrix& support,
                                                         int k_listed,
                                                         const NecessityOptions& opts) {
    NecessityResult res;
    res.matching_size = hopcroft_karp_matching(support);

    CoverSearch search(support, opts.node_budget);
    std::optional<std::vector<int>> cover = search.exact();
    if (!cover) {
        if (!opts.allow_greedy_fallback)
            throw InstanceTooLarge(std::to_string(support.rows()) + "x" +
                                   std::to_string(support.cols()) + " support matrix, budget " +
                                   std::to_string(opts.node_budget));
        cover = search.greedy();
        res.approximate = true;
    }
    for (int c : *cover) res.necessary_sources.push_back(c + 1);
    res.cover_size = static_cast<int>(res.necessary_sources.size());

    if (k_listed == 0)
        return {res, MetricValue::undefined(MetricName::SourceNecessity)};
    return {res, MetricValue::of(MetricName::SourceNecessity,
                                 Rational(res.cover_size, k_listed))};
}

namespace {

std::pair<std::int64_t, std::int64_t> overlap_and_citations(
    const BinaryMatrix& citation, const BinaryMatrix& support,
    const std::vector<int>& support_columns) {
    if (citation.rows() != support.rows())
        throw Error("citation and support matrices disagree on row count");
    if (support_columns.size() != support.cols())
        throw Error("support column map size mismatch");
    std::int64_t overlap = 0;
    std::int64_t cited = 0;
    for (std::size_t r = 0; r < citation.rows(); ++r) {
        for (std::size_t a = 0; a < support.cols(); ++a) {
            const auto c = static_cast<std::size_t>(support_columns[a]);
            if (!citation.get(r, c)) continue;
            ++cited;
            if (support.get(r, a)) ++overlap;
        }
    }
    return {overlap, cited};
}

}  // namespace

MetricValue citation_accuracy(const BinaryMatrix& citation, const BinaryMatrix& support,
                              const std::vector<int>& support_columns) {
    const auto [overlap, cited] = overlap_and_citations(citation, support, support_columns);
    if (cited == 0) return MetricValue::undefined(MetricName::CitationAccuracy);
    return MetricValue::of(MetricName::CitationAccuracy, Rational(overlap, cited));
}

MetricValue citation_thoroughness(const BinaryMatrix& citation, const BinaryMatrix& support,
                                  const std::vector<int>& support_columns) {
    const auto [overlap, cited] = overlap_and_citations(citation, support, support_columns);
    (void)cited;
    const std::int64_t total_support = support.sum();
    if (total_support == 0) return MetricValue::undefined(MetricName::CitationThoroughness);
    return MetricValue::of(MetricName::CitationThoroughness, Rational(overlap, total_support));
}

}  // namespace deeptrace
