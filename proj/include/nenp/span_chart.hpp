#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "nenp/core.hpp"

namespace nenp {

/// Dense table s(i, j, l) over all spans 0 <= i < j <= n and all labels. The O slice stays 0.
class SpanScoreChart {
public:
    SpanScoreChart(int length, int label_count)
        : n_{length}, labels_{label_count},
          data_(static_cast<std::size_t>((length + 1) * (length + 1) * label_count), 0.0) {
        if (length < 1) throw validation_error("chart length must be at least 1");
        if (label_count < 1) throw validation_error("chart needs at least the O label");
    }

    int length() const noexcept { return n_; }
    int label_count() const noexcept { return labels_; }

    double operator()(int i, int j, LabelId l) const { return data_[index(i, j, l)]; }

    /// Sets an entity-label score; O scores are fixed.
    void set(int i, int j, LabelId l, double value) {
        if (l == null_label) throw validation_error("the O slice of a chart is fixed at 0");
        data_[index(i, j, l)] = value;
    }

    bool in_range(int i, int j) const noexcept { return 0 <= i && i < j && j <= n_; }

private:
    std::size_t index(int i, int j, LabelId l) const {
        assert(in_range(i, j) && 0 <= l && l < labels_);
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(n_ + 1) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(labels_) +
               static_cast<std::size_t>(l);
    }

    int n_;
    int labels_;
    std::vector<double> data_;
};

} // namespace nenp
