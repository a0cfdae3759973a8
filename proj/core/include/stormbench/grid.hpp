#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stormbench/iq_buffer.hpp"

namespace stormbench {

// Dense row-major matrix of complex values.
class ComplexGrid {
public:
    ComplexGrid() = default;
    ComplexGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    Sample& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const Sample& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<Sample> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const Sample> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const Sample> data() const noexcept { return data_; }
    std::span<Sample> data() noexcept { return data_; }

    double energy() const noexcept { return stormbench::energy(data_); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Sample> data_;
};

double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b);

}  // namespace stormbench
