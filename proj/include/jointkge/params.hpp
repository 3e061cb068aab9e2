#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointkge/vecmath.hpp"

namespace jointkge {

// Two learning-rate groups: structure parameters use lambda_s, text-side
// parameters use lambda_t.
enum class LrGroup : uint8_t { Structure = 0, Text = 1 };

// Named dense parameter tables. A slot is a (rows x cols) row-major table;
// a plain vector or matrix is just a table whose rows happen to be touched
// together. Gradients accumulate per row; sgd_step only visits touched rows.
class ParameterStore {
public:
    struct Slot {
        size_t rows = 0;
        size_t cols = 0;
        LrGroup group = LrGroup::Structure;
        std::vector<double> value;
        std::vector<double> grad;
        std::set<size_t> touched;
    };

    Slot& add(const std::string& name, size_t rows, size_t cols, LrGroup group) {
        auto [it, inserted] = slots_.try_emplace(name);
        if (!inserted) throw std::invalid_argument("duplicate slot: " + name);
        Slot& s = it->second;
        s.rows = rows;
        s.cols = cols;
        s.group = group;
        s.value.assign(rows * cols, 0.0);
        s.grad.assign(rows * cols, 0.0);
        return s;
    }

    bool has(const std::string& name) const { return slots_.count(name) != 0; }

    Slot& slot(const std::string& name) {
        auto it = slots_.find(name);
        if (it == slots_.end()) throw std::out_of_range("no slot: " + name);
        return it->second;
    }
    const Slot& slot(const std::string& name) const {
        auto it = slots_.find(name);
        if (it == slots_.end()) throw std::out_of_range("no slot: " + name);
        return it->second;
    }

    std::span<double> row(const std::string& name, size_t i) {
        Slot& s = slot(name);
        if (i >= s.rows) throw std::out_of_range("row " + std::to_string(i) + " of " + name);
        return {s.value.data() + i * s.cols, s.cols};
    }
    std::span<const double> row(const std::string& name, size_t i) const {
        const Slot& s = slot(name);
        if (i >= s.rows) throw std::out_of_range("row " + std::to_string(i) + " of " + name);
        return {s.value.data() + i * s.cols, s.cols};
    }

    Vec row_vec(const std::string& name, size_t i) const {
        auto r = row(name, i);
        return Vec(r.begin(), r.end());
    }

    // Gradient view of one row; marks the row touched.
    std::span<double> grad_row(const std::string& name, size_t i) {
        Slot& s = slot(name);
        if (i >= s.rows) throw std::out_of_range("grad row " + std::to_string(i) + " of " + name);
        s.touched.insert(i);
        return {s.grad.data() + i * s.cols, s.cols};
    }

    // Whole-tensor views for matrix/vector slots (marks every row touched).
    std::span<double> grad_all(const std::string& name) {
        Slot& s = slot(name);
        for (size_t i = 0; i < s.rows; ++i) s.touched.insert(i);
        return {s.grad.data(), s.grad.size()};
    }
    std::span<const double> values(const std::string& name) const {
        const Slot& s = slot(name);
        return {s.value.data(), s.value.size()};
    }

    void accumulate_grad_row(const std::string& name, size_t i, const Vec& g) {
        auto gr = grad_row(name, i);
        check_same_size("accumulate_grad_row", g.size(), gr.size());
        for (size_t k = 0; k < g.size(); ++k) gr[k] += g[k];
    }

    void clear_grads() {
        for (auto& [name, s] : slots_) {
            for (size_t i : s.touched) {
                double* g = s.grad.data() + i * s.cols;
                std::fill(g, g + s.cols, 0.0);
            }
            s.touched.clear();
        }
    }

    // p <- p - lr_group * (grad + 2 * l2 * p), touched rows only (lazy L2),
    // then accumulators cleared.
    void sgd_step(double lr_structure, double lr_text, double l2_weight) {
        for (auto& [name, s] : slots_) {
            const double lr = (s.group == LrGroup::Structure) ? lr_structure : lr_text;
            for (size_t i : s.touched) {
                double* p = s.value.data() + i * s.cols;
                double* g = s.grad.data() + i * s.cols;
                for (size_t k = 0; k < s.cols; ++k) {
                    if (!std::isfinite(g[k]))
                        throw std::runtime_error("non-finite gradient in slot " + name +
                                                 " row " + std::to_string(i));
                    p[k] -= lr * (g[k] + 2.0 * l2_weight * p[k]);
                    g[k] = 0.0;
                }
            }
            s.touched.clear();
        }
    }

    // Project the named rows back onto the unit L2 sphere. Zero rows are left
    // alone with a warning.
    void renormalize_rows(const std::string& name, const std::set<size_t>& ids) {
        Slot& s = slot(name);
        for (size_t i : ids) {
            double* p = s.value.data() + i * s.cols;
            const double n = l2_norm({p, s.cols});
            if (n == 0.0) {
                std::cerr << "warning: zero row " << i << " in slot " << name
                          << ", not renormalized\n";
                continue;
            }
            // already on the unit sphere: leave the bits alone
            if (std::fabs(n - 1.0) <= 1e-12) continue;
            for (size_t k = 0; k < s.cols; ++k) p[k] /= n;
        }
    }

    void init_uniform(const std::string& name, double lo, double hi, std::mt19937_64& rng) {
        Slot& s = slot(name);
        std::uniform_real_distribution<double> dist(lo, hi);
        for (auto& v : s.value) v = dist(rng);
    }

    const std::map<std::string, Slot>& slots() const { return slots_; }
    std::map<std::string, Slot>& slots() { return slots_; }

private:
    std::map<std::string, Slot> slots_;  // ordered: deterministic iteration
};

struct GradCheckReport {
    std::map<std::string, double> max_rel_err;  // per slot
    double overall = 0.0;
};

// Central-difference check of the analytic gradients that `loss_fn` accumulates
// into the store. `loss_fn` must be deterministic. Relative error is
// |a - n| / max(|a|, |n|, 1e-8).
inline GradCheckReport check_gradients(ParameterStore& store,
                                       const std::function<double()>& loss_fn,
                                       double eps = 1e-5) {
    store.clear_grads();
    loss_fn();
    std::map<std::string, std::vector<double>> analytic;
    for (const auto& [name, s] : store.slots()) analytic[name] = s.grad;
    store.clear_grads();

    GradCheckReport report;
    for (auto& [name, s] : store.slots()) {
        double worst = 0.0;
        for (size_t k = 0; k < s.value.size(); ++k) {
            const double saved = s.value[k];
            const double a = analytic[name][k];
            // probe at several step widths; the wider ones suppress roundoff on
            // components whose true gradient is near zero
            double best = std::numeric_limits<double>::infinity();
            for (const double h : {eps, 10.0 * eps, 100.0 * eps}) {
                s.value[k] = saved + h;
                const double fp = loss_fn();
                store.clear_grads();
                s.value[k] = saved - h;
                const double fm = loss_fn();
                store.clear_grads();
                s.value[k] = saved;
                const double numeric = (fp - fm) / (2.0 * h);
                const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
                best = std::min(best, std::fabs(a - numeric) / denom);
            }
            worst = std::max(worst, best);
        }
        report.max_rel_err[name] = worst;
        report.overall = std::max(report.overall, worst);
    }
    return report;
}

}  // namespace jointkge
