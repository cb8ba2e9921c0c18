#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajclust::oracle {

double jaccard_grid(const StateTimeline& a, const StateTimeline& b, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be > 0");
    const double w = std::min(a.horizon, b.horizon);
    const auto cells = static_cast<long>(std::ceil(w / resolution));
    double both = 0.0;
    double either = 0.0;
    for (std::size_t c = 0; c < a.onsets.size(); ++c) {
        for (long k = 0; k < cells; ++k) {
            const double t = static_cast<double>(k) * resolution;
            const double width = std::min(resolution, w - t);
            const bool pa = a.onsets[c] <= t;
            const bool pb = b.onsets[c] <= t;
            if (pa && pb) both += width;
            if (pa || pb) either += width;
        }
    }
    if (either == 0.0) return 0.0;
    return 1.0 - both / either;
}

FullMatrix expand(const CondensedDistanceMatrix& m) {
    const std::size_t n = m.size();
    FullMatrix d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) d[i][j] = m(i, j);
    }
    return d;
}

std::vector<Merge> naive_ward(const FullMatrix& input, WardVariant variant) {
    const std::size_t n = input.size();
    FullMatrix d = input;
    if (variant == WardVariant::ward_d2) {
        for (auto& row : d) {
            for (auto& x : row) x *= x;
        }
    }
    std::vector<std::size_t> node(n);
    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) node[i] = i;

    std::vector<Merge> merges;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        std::size_t bj = 0;
        std::pair<std::size_t, std::size_t> best_ids{n * 3, n * 3};
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                const std::pair<std::size_t, std::size_t> ids{std::min(node[i], node[j]),
                                                              std::max(node[i], node[j])};
                if (d[i][j] < best || (d[i][j] == best && ids < best_ids)) {
                    best = d[i][j];
                    bi = i;
                    bj = j;
                    best_ids = ids;
                }
            }
        }
        const double ni = static_cast<double>(size[bi]);
        const double nj = static_cast<double>(size[bj]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            const double nk = static_cast<double>(size[k]);
            const double updated =
                ((ni + nk) * d[bi][k] + (nj + nk) * d[bj][k] - nk * best) / (ni + nj + nk);
            d[bi][k] = d[k][bi] = updated;
        }
        const double height = variant == WardVariant::ward_d2 ? std::sqrt(best) : best;
        merges.push_back({best_ids.first, best_ids.second, height, size[bi] + size[bj]});
        size[bi] += size[bj];
        active[bj] = false;
        node[bi] = n + step;
    }
    return merges;
}

double point_biserial_pearson(const CondensedDistanceMatrix& m,
                              const std::vector<std::size_t>& labels) {
    const std::size_t n = m.size();
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            x.push_back(m(i, j));
            y.push_back(labels[i] == labels[j] ? 0.0 : 1.0);
        }
    }
    const double len = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= len;
    my /= len;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace trajclust::oracle
