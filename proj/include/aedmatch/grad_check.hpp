#pragma once

#include <aedmatch/autodiff.hpp>
#include <aedmatch/params.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace aedmatch {

/// Scalar-valued computation over the parameters bound on a tape.
using ScalarObjective = std::function<ad::Var(TapeParams&)>;

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool passed = true;
};

/// Compares reverse-mode gradients with central differences
/// (f(w + eps) - f(w - eps)) / 2 eps, element by element. Relative error uses
/// the denominator max(|analytic|, |numeric|, 1e-8).
inline GradCheckReport grad_check(const ScalarObjective& f, const ParamStore& store, double eps = 1e-5,
                                  double tolerance = 1e-3) {
    std::vector<Tensor> analytic;
    {
        ad::Tape tape;
        TapeParams params(tape, store);
        ad::Var out = f(params);
        tape.backward(out);
        analytic = params.gradients();
    }

    ParamStore probe = store;
    const auto evaluate = [&]() {
        ad::Tape tape;
        TapeParams params(tape, probe, false);
        return f(params).scalar();
    };

    GradCheckReport report;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        GradCheckEntry entry;
        entry.name = probe.entries()[i].name;
        Tensor& w = probe.entries()[i].value;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double saved = w[k];
            w[k] = saved + eps;
            const double up = evaluate();
            w[k] = saved - eps;
            const double down = evaluate();
            w[k] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[i][k];
            const double abs_err = std::abs(a - numeric);
            const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-8});
            entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        entry.passed = entry.max_rel_error < tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.passed = report.passed && entry.passed;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace aedmatch
