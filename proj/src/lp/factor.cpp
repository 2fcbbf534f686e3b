#include "factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bpool::lp {

namespace {

constexpr double kSingularTol = 1e-11;
constexpr double kThreshold = 0.1;

/// Product-form update file: B_k = B_0 E_1 ... E_k.
class EtaFile {
public:
    void clear() {
        r_.clear();
        pivot_.clear();
        start_.assign(1, 0);
        idx_.clear();
        val_.clear();
    }

    void push(std::size_t r, const std::vector<double>& alpha) {
        r_.push_back(r);
        pivot_.push_back(alpha[r]);
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (i != r && alpha[i] != 0.0) {
                idx_.push_back(i);
                val_.push_back(alpha[i]);
            }
        }
        start_.push_back(idx_.size());
    }

    std::size_t size() const noexcept { return r_.size(); }

    void forward(std::vector<double>& v) const {
        for (std::size_t e = 0; e < r_.size(); ++e) {
            const double vr = v[r_[e]] / pivot_[e];
            v[r_[e]] = vr;
            if (vr == 0.0) continue;
            for (std::size_t p = start_[e]; p < start_[e + 1]; ++p) v[idx_[p]] -= val_[p] * vr;
        }
    }

    void backward(std::vector<double>& v) const {
        for (std::size_t e = r_.size(); e-- > 0;) {
            double s = v[r_[e]];
            for (std::size_t p = start_[e]; p < start_[e + 1]; ++p) s -= val_[p] * v[idx_[p]];
            v[r_[e]] = s / pivot_[e];
        }
    }

private:
    std::vector<std::size_t> r_;
    std::vector<double> pivot_;
    std::vector<std::size_t> start_{0};
    std::vector<std::size_t> idx_;
    std::vector<double> val_;
};

/// Left-looking sparse LU with threshold partial pivoting, columns taken in
/// ascending-count order so slack and singleton columns go first.
class SparseLu final : public BasisFactor {
public:
    explicit SparseLu(std::size_t m) : m_(m), work_(m) {}

    SingularList factor(const ColumnStore& store, std::span<const std::size_t> head) override {
        const std::size_t m = m_;
        eta_.clear();
        pinv_.assign(m, kNone);
        qpos_.assign(m, 0);
        udiag_.assign(m, 0.0);
        lp_.assign(1, 0);
        li_.clear();
        lx_.clear();
        up_.assign(1, 0);
        ui_.clear();
        ux_.clear();

        std::vector<std::size_t> row_count(m, 0);
        for (std::size_t k = 0; k < m; ++k) store.for_each(head[k], [&](std::size_t i, double) { ++row_count[i]; });
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return store.size(head[a]) < store.size(head[b]);
        });

        std::vector<double> x(m, 0.0);
        std::vector<std::size_t> mark(m, 0);
        std::size_t stamp = 0;
        std::vector<std::size_t> topo;
        std::vector<std::pair<std::size_t, std::size_t>> stack;
        std::vector<std::size_t> singular;
        std::size_t npiv = 0;

        for (std::size_t pos : order) {
            ++stamp;
            topo.clear();
            // Depth-first reach of the column pattern through L.
            store.for_each(head[pos], [&](std::size_t i0, double) {
                if (mark[i0] == stamp) return;
                mark[i0] = stamp;
                stack.emplace_back(i0, 0);
                while (!stack.empty()) {
                    auto& [node, next] = stack.back();
                    const std::size_t s = pinv_[node];
                    bool pushed = false;
                    if (s != kNone) {
                        for (std::size_t p = lp_[s] + next; p < lp_[s + 1]; ++p) {
                            ++next;
                            const std::size_t child = li_[p];
                            if (mark[child] != stamp) {
                                mark[child] = stamp;
                                stack.emplace_back(child, 0);
                                pushed = true;
                                break;
                            }
                        }
                    }
                    if (!pushed) {
                        topo.push_back(node);
                        stack.pop_back();
                    }
                }
            });
            store.for_each(head[pos], [&](std::size_t i, double v) { x[i] = v; });

            for (std::size_t t = topo.size(); t-- > 0;) {
                const std::size_t i = topo[t];
                const std::size_t s = pinv_[i];
                if (s == kNone) continue;
                const double xi = x[i];
                if (xi == 0.0) continue;
                for (std::size_t p = lp_[s]; p < lp_[s + 1]; ++p) x[li_[p]] -= lx_[p] * xi;
            }

            double biggest = 0.0;
            for (std::size_t i : topo) {
                if (pinv_[i] == kNone) biggest = std::max(biggest, std::fabs(x[i]));
            }
            if (biggest <= kSingularTol) {
                singular.push_back(pos);
                for (std::size_t i : topo) x[i] = 0.0;
                continue;
            }
            std::size_t piv = kNone;
            for (std::size_t i : topo) {
                if (pinv_[i] != kNone || std::fabs(x[i]) < kThreshold * biggest) continue;
                if (piv == kNone || row_count[i] < row_count[piv] || (row_count[i] == row_count[piv] && i < piv)) {
                    piv = i;
                }
            }
            const std::size_t s = npiv++;
            const double d = x[piv];
            udiag_[s] = d;
            qpos_[s] = pos;
            for (std::size_t i : topo) {
                if (pinv_[i] != kNone && x[i] != 0.0) {
                    ui_.push_back(pinv_[i]);
                    ux_.push_back(x[i]);
                }
            }
            up_.push_back(ui_.size());
            pinv_[piv] = s;
            for (std::size_t i : topo) {
                if (pinv_[i] == kNone && x[i] != 0.0) {
                    li_.push_back(i);
                    lx_.push_back(x[i] / d);
                }
                x[i] = 0.0;
            }
            lp_.push_back(li_.size());
        }

        if (!singular.empty()) {
            SingularList out;
            std::size_t next_row = 0;
            for (std::size_t pos : singular) {
                while (pinv_[next_row] != kNone) ++next_row;
                out.emplace_back(pos, next_row++);
            }
            return out;
        }
        for (auto& i : li_) i = pinv_[i];
        return {};
    }

    void ftran(std::vector<double>& v) const override {
        auto& w = work_;
        for (std::size_t i = 0; i < m_; ++i) w[pinv_[i]] = v[i];
        for (std::size_t s = 0; s < m_; ++s) {
            const double ws = w[s];
            if (ws == 0.0) continue;
            for (std::size_t p = lp_[s]; p < lp_[s + 1]; ++p) w[li_[p]] -= lx_[p] * ws;
        }
        for (std::size_t s = m_; s-- > 0;) {
            if (w[s] == 0.0) continue;
            const double ws = w[s] / udiag_[s];
            w[s] = ws;
            for (std::size_t p = up_[s]; p < up_[s + 1]; ++p) w[ui_[p]] -= ux_[p] * ws;
        }
        for (std::size_t s = 0; s < m_; ++s) v[qpos_[s]] = w[s];
        eta_.forward(v);
    }

    void btran(std::vector<double>& v) const override {
        eta_.backward(v);
        auto& w = work_;
        for (std::size_t s = 0; s < m_; ++s) {
            double acc = v[qpos_[s]];
            for (std::size_t p = up_[s]; p < up_[s + 1]; ++p) acc -= ux_[p] * w[ui_[p]];
            w[s] = acc / udiag_[s];
        }
        for (std::size_t s = m_; s-- > 0;) {
            double acc = w[s];
            for (std::size_t p = lp_[s]; p < lp_[s + 1]; ++p) acc -= lx_[p] * w[li_[p]];
            w[s] = acc;
        }
        for (std::size_t i = 0; i < m_; ++i) v[i] = w[pinv_[i]];
    }

    void update(std::size_t r, const std::vector<double>& alpha) override { eta_.push(r, alpha); }
    std::size_t n_updates() const noexcept override { return eta_.size(); }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t m_;
    std::vector<std::size_t> pinv_, qpos_;
    std::vector<double> udiag_;
    std::vector<std::size_t> lp_, li_, up_, ui_;
    std::vector<double> lx_, ux_;
    EtaFile eta_;
    mutable std::vector<double> work_;
};

/// Explicit inverse, updated by elementary row operations.
class DenseInverse final : public BasisFactor {
public:
    explicit DenseInverse(std::size_t m) : m_(m) {}

    SingularList factor(const ColumnStore& store, std::span<const std::size_t> head) override {
        const std::size_t m = m_;
        updates_ = 0;
        // Row-major [B | I], Gauss-Jordan by columns of B.
        std::vector<double> a(m * m, 0.0), r(m * m, 0.0);
        for (std::size_t k = 0; k < m; ++k) store.for_each(head[k], [&](std::size_t i, double v) { a[i * m + k] = v; });
        for (std::size_t i = 0; i < m; ++i) r[i * m + i] = 1.0;
        std::vector<char> used(m, 0);
        std::vector<std::size_t> row_of(m, 0);
        std::vector<std::size_t> singular;
        for (std::size_t k = 0; k < m; ++k) {
            std::size_t p = m;
            double best = kSingularTol;
            for (std::size_t i = 0; i < m; ++i) {
                if (!used[i] && std::fabs(a[i * m + k]) > best) {
                    best = std::fabs(a[i * m + k]);
                    p = i;
                }
            }
            if (p == m) {
                singular.push_back(k);
                continue;
            }
            used[p] = 1;
            row_of[k] = p;
            const double inv = 1.0 / a[p * m + k];
            for (std::size_t j = 0; j < m; ++j) {
                a[p * m + j] *= inv;
                r[p * m + j] *= inv;
            }
            for (std::size_t i = 0; i < m; ++i) {
                const double f = a[i * m + k];
                if (i == p || f == 0.0) continue;
                for (std::size_t j = 0; j < m; ++j) {
                    a[i * m + j] -= f * a[p * m + j];
                    r[i * m + j] -= f * r[p * m + j];
                }
            }
        }
        if (!singular.empty()) {
            SingularList out;
            std::size_t next_row = 0;
            for (std::size_t k : singular) {
                while (used[next_row]) ++next_row;
                out.emplace_back(k, next_row++);
            }
            return out;
        }
        // Binv column-major: Binv[k, i] = r[row_of[k], i].
        inv_.assign(m * m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < m; ++i) inv_[i * m + k] = r[row_of[k] * m + i];
        }
        return {};
    }

    void ftran(std::vector<double>& v) const override {
        std::vector<double> out(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            const double vi = v[i];
            if (vi == 0.0) continue;
            const double* col = &inv_[i * m_];
            for (std::size_t k = 0; k < m_; ++k) out[k] += col[k] * vi;
        }
        v.swap(out);
    }

    void btran(std::vector<double>& v) const override {
        std::vector<double> out(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            const double* col = &inv_[i * m_];
            double acc = 0.0;
            for (std::size_t k = 0; k < m_; ++k) acc += col[k] * v[k];
            out[i] = acc;
        }
        v.swap(out);
    }

    void update(std::size_t r, const std::vector<double>& alpha) override {
        std::vector<std::size_t> nz;
        for (std::size_t k = 0; k < m_; ++k) {
            if (k != r && alpha[k] != 0.0) nz.push_back(k);
        }
        const double piv = alpha[r];
        for (std::size_t j = 0; j < m_; ++j) {
            double* col = &inv_[j * m_];
            const double t = col[r] / piv;
            col[r] = t;
            if (t == 0.0) continue;
            for (std::size_t k : nz) col[k] -= alpha[k] * t;
        }
        ++updates_;
    }

    std::size_t n_updates() const noexcept override { return updates_; }

private:
    std::size_t m_;
    std::vector<double> inv_;
    std::size_t updates_ = 0;
};

}  // namespace

std::unique_ptr<BasisFactor> make_sparse_factor(std::size_t m) { return std::make_unique<SparseLu>(m); }
std::unique_ptr<BasisFactor> make_dense_factor(std::size_t m) { return std::make_unique<DenseInverse>(m); }

}  // namespace bpool::lp
