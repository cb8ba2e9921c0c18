#include "trajclust/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "csv.hpp"
#include "trajclust/error.hpp"

namespace trajclust {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

inline double ward_update(double d_ik, double d_jk, double d_ij, double n_i, double n_j,
                          double n_k) {
    return ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * d_ij) / (n_i + n_j + n_k);
}

// Active cluster slots, iterated in ascending order.
class ActiveList {
public:
    explicit ActiveList(std::size_t n) : next_(n + 1), prev_(n + 1) {
        for (std::size_t i = 0; i <= n; ++i) {
            next_[i] = i + 1;
            prev_[i] = i == 0 ? kNone : i - 1;
        }
        start_ = 0;
        end_ = n;
    }
    std::size_t first() const { return start_; }
    std::size_t end() const { return end_; }
    std::size_t next(std::size_t i) const { return next_[i]; }
    void remove(std::size_t i) {
        if (i == start_) {
            start_ = next_[i];
        } else {
            next_[prev_[i]] = next_[i];
        }
        prev_[next_[i]] = prev_[i];
    }

private:
    std::vector<std::size_t> next_;
    std::vector<std::size_t> prev_;
    std::size_t start_;
    std::size_t end_;
};

struct RawMerge {
    std::size_t lo;
    std::size_t hi;
    double height;
    double order_key;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        std::size_t root = x;
        while (parent_[root] != root) root = parent_[root];
        while (parent_[x] != root) {
            const std::size_t up = parent_[x];
            parent_[x] = root;
            x = up;
        }
        return root;
    }
    void attach(std::size_t child_root, std::size_t new_root) { parent_[child_root] = new_root; }

private:
    std::vector<std::size_t> parent_;
};

} // namespace

std::string_view to_string(WardVariant v) noexcept {
    return v == WardVariant::ward_d ? "ward_d" : "ward_d2";
}

WardVariant parse_ward_variant(std::string_view text) {
    if (text == "d" || text == "ward_d" || text == "ward.D") return WardVariant::ward_d;
    if (text == "d2" || text == "ward_d2" || text == "ward.D2") return WardVariant::ward_d2;
    throw Error(ErrorCategory::invalid_argument,
                "unknown ward variant '" + std::string(text) + "' (expected d or d2)");
}

std::vector<std::size_t> Partition::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) {
        if (l < k) ++sizes[l];
    }
    return sizes;
}

void validate_partition(const Partition& partition) {
    if (partition.k == 0) throw Error(ErrorCategory::validation, "partition with k = 0");
    std::vector<std::size_t> sizes(partition.k, 0);
    for (auto l : partition.labels) {
        if (l >= partition.k) {
            throw Error(ErrorCategory::validation, "partition label " + std::to_string(l) +
                                                       " out of range for k=" +
                                                       std::to_string(partition.k));
        }
        ++sizes[l];
    }
    for (std::size_t c = 0; c < partition.k; ++c) {
        if (sizes[c] == 0) {
            throw Error(ErrorCategory::validation, "partition cluster " + std::to_string(c) +
                                                       " is empty");
        }
    }
}

void validate_tree(const MergeTree& tree) {
    if (tree.n < 2) throw Error(ErrorCategory::validation, "merge tree needs n >= 2");
    if (tree.merges.size() != tree.n - 1) {
        throw Error(ErrorCategory::validation,
                    "merge tree over " + std::to_string(tree.n) + " leaves needs " +
                        std::to_string(tree.n - 1) + " merges, got " +
                        std::to_string(tree.merges.size()));
    }
    std::vector<std::size_t> size(2 * tree.n - 1, 0);
    std::vector<bool> used(2 * tree.n - 1, false);
    std::fill(size.begin(), size.begin() + static_cast<std::ptrdiff_t>(tree.n), 1);
    for (std::size_t m = 0; m < tree.merges.size(); ++m) {
        const auto& merge = tree.merges[m];
        const std::size_t node = tree.n + m;
        if (merge.left >= merge.right || merge.right >= node) {
            throw Error(ErrorCategory::validation,
                        "merge " + std::to_string(m) + " references invalid nodes");
        }
        if (used[merge.left] || used[merge.right]) {
            throw Error(ErrorCategory::validation,
                        "merge " + std::to_string(m) + " reuses an already merged node");
        }
        used[merge.left] = used[merge.right] = true;
        size[node] = size[merge.left] + size[merge.right];
        if (merge.size != size[node]) {
            throw Error(ErrorCategory::validation,
                        "merge " + std::to_string(m) + " size does not telescope");
        }
        if (!std::isfinite(merge.height)) {
            throw Error(ErrorCategory::validation,
                        "merge " + std::to_string(m) + " has a non-finite height");
        }
    }
}

MergeTree ward_linkage(CondensedDistanceMatrix matrix, WardVariant variant) {
    const std::size_t n = matrix.size();
    if (n < 2) {
        throw Error(ErrorCategory::invalid_argument,
                    "ward linkage needs at least 2 observations, got " + std::to_string(n));
    }
    auto values = matrix.values();
    for (double& v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCategory::numerical, "non-finite entry in dissimilarity matrix");
        }
        if (variant == WardVariant::ward_d2) v *= v;
    }

    std::vector<double> size(n, 1.0);
    ActiveList active(n);
    std::vector<std::size_t> chain;
    chain.reserve(n);
    std::vector<RawMerge> raw;
    raw.reserve(n - 1);
    // order key of the merge that built the cluster currently in each slot
    std::vector<double> slot_key(n, -std::numeric_limits<double>::infinity());
    // creation order of the cluster in each slot: leaves 0..n-1, then n + step
    std::vector<std::size_t> slot_id(n);
    std::iota(slot_id.begin(), slot_id.end(), 0);

    for (std::size_t step = 0; step + 1 < n; ++step) {
        if (chain.empty()) {
            // restart from the cluster created earliest
            std::size_t start = active.first();
            for (std::size_t k = active.next(start); k < active.end(); k = active.next(k)) {
                if (slot_id[k] < slot_id[start]) start = k;
            }
            chain.push_back(start);
        }

        std::size_t a = kNone;
        std::size_t b = kNone;
        for (;;) {
            a = chain.back();
            const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : kNone;
            std::size_t best = prev;
            double best_d = prev == kNone ? std::numeric_limits<double>::infinity()
                                          : matrix(a, prev);
            for (std::size_t k = active.first(); k < active.end(); k = active.next(k)) {
                if (k == a) continue;
                const double d = matrix(a, k);
                if (d < best_d ||
                    (d == best_d && best != prev && slot_id[k] < slot_id[best])) {
                    best_d = d;
                    best = k;
                }
            }
            if (best == prev) {
                b = prev;
                break;
            }
            chain.push_back(best);
        }
        chain.pop_back();
        chain.pop_back();

        const std::size_t lo = std::min(a, b);
        const std::size_t hi = std::max(a, b);
        const double d_ij = matrix(lo, hi);
        const double n_i = size[lo];
        const double n_j = size[hi];
        for (std::size_t k = active.first(); k < active.end(); k = active.next(k)) {
            if (k == lo || k == hi) continue;
            double& d_hk = matrix.at(hi, k);
            d_hk = ward_update(matrix(lo, k), d_hk, d_ij, n_i, n_j, size[k]);
        }
        active.remove(lo);
        size[hi] = n_i + n_j;

        const double height =
            variant == WardVariant::ward_d2 ? std::sqrt(std::max(0.0, d_ij)) : d_ij;
        const double key = std::max({height, slot_key[lo], slot_key[hi]});
        slot_key[hi] = key;
        slot_id[hi] = n + step;
        raw.push_back({lo, hi, height, key});
    }

    // The chain discovers merges out of height order. A stable sort on the
    // monotone key keeps every child merge ahead of its parent.
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return raw[x].order_key < raw[y].order_key;
    });

    MergeTree tree;
    tree.n = n;
    tree.merges.reserve(n - 1);
    UnionFind sets(n);
    std::vector<std::size_t> node_of(n);
    std::iota(node_of.begin(), node_of.end(), 0);
    std::vector<std::size_t> members(n, 1);
    double last_height = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < order.size(); ++m) {
        const auto& r = raw[order[m]];
        const std::size_t root_a = sets.find(r.lo);
        const std::size_t root_b = sets.find(r.hi);
        const std::size_t id_a = node_of[root_a];
        const std::size_t id_b = node_of[root_b];
        const std::size_t merged = members[root_a] + members[root_b];
        sets.attach(root_a, root_b);
        node_of[root_b] = n + m;
        members[root_b] = merged;
        tree.merges.push_back({std::min(id_a, id_b), std::max(id_a, id_b), r.height, merged});
        if (r.height < last_height) ++tree.monotonicity_violations;
        last_height = std::max(last_height, r.height);
    }
    return tree;
}

Partition cut(const MergeTree& tree, std::size_t k) {
    if (k < 1 || k > tree.n) {
        throw Error(ErrorCategory::invalid_argument,
                    "cannot cut a tree over " + std::to_string(tree.n) + " leaves into " +
                        std::to_string(k) + " clusters");
    }
    const std::size_t applied = tree.n - k;
    std::vector<std::size_t> parent(2 * tree.n - 1);
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t m = 0; m < applied; ++m) {
        parent[tree.merges[m].left] = tree.n + m;
        parent[tree.merges[m].right] = tree.n + m;
    }
    // parents always have larger ids, so resolving from the top down is linear
    for (std::size_t node = tree.n + applied; node-- > 0;) {
        parent[node] = parent[parent[node]];
    }
    Partition p;
    p.k = k;
    p.labels.resize(tree.n);
    std::vector<std::size_t> label_of(2 * tree.n - 1, kNone);
    std::size_t next_label = 0;
    for (std::size_t leaf = 0; leaf < tree.n; ++leaf) {
        auto& label = label_of[parent[leaf]];
        if (label == kNone) label = next_label++;
        p.labels[leaf] = label;
    }
    return p;
}

void write_tree_csv(std::ostream& out, const MergeTree& tree) {
    csv::write_row(out, {"merge_index", "left", "right", "height", "size"});
    for (std::size_t m = 0; m < tree.merges.size(); ++m) {
        const auto& merge = tree.merges[m];
        csv::write_row(out, {std::to_string(m), std::to_string(merge.left),
                             std::to_string(merge.right), csv::format_double(merge.height),
                             std::to_string(merge.size)});
    }
}

void write_tree_csv(const std::filesystem::path& path, const MergeTree& tree) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write '" + path.string() + "'");
    write_tree_csv(out, tree);
}

MergeTree read_tree_csv(std::istream& in) {
    csv::Reader reader(in, "tree.csv");
    const auto c_index = reader.column("merge_index");
    const auto c_left = reader.column("left");
    const auto c_right = reader.column("right");
    const auto c_height = reader.column("height");
    const auto c_size = reader.column("size");
    MergeTree tree;
    double last = -std::numeric_limits<double>::infinity();
    while (reader.next()) {
        if (reader.parse_unsigned(c_index) != tree.merges.size()) {
            reader.fail("merge_index out of sequence");
        }
        Merge m;
        m.left = reader.parse_unsigned(c_left);
        m.right = reader.parse_unsigned(c_right);
        m.height = reader.parse_double(c_height);
        m.size = reader.parse_unsigned(c_size);
        if (m.height < last) ++tree.monotonicity_violations;
        last = std::max(last, m.height);
        tree.merges.push_back(m);
    }
    tree.n = tree.merges.size() + 1;
    validate_tree(tree);
    return tree;
}

MergeTree read_tree_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");
    return read_tree_csv(in);
}

} // namespace trajclust
