#pragma once

#include <optional>

#include "stc/matrix.hpp"

namespace stc {

/// Activity classes used throughout: 0 standing, 1 walking, 2 running.
inline constexpr int kNumClasses = 3;

/// One window of a multichannel series: values are channels x time steps.
struct TimeSeriesSample {
    Matrix values;
    int subject_id = 0;
    std::optional<int> label;

    [[nodiscard]] std::size_t channels() const { return values.rows(); }
    [[nodiscard]] std::size_t length() const { return values.cols(); }
};

}  // namespace stc
