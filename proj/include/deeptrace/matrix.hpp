#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace deeptrace {

/// Dense row-major 0/1 matrix.
class BinaryMatrix {
public:
    BinaryMatrix() = default;
    BinaryMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool get(std::size_t r, std::size_t c) const { return data_[index(r, c)] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { data_[index(r, c)] = v ? 1 : 0; }

    const std::vector<std::uint8_t>& data() const { return data_; }

    bool row_empty(std::size_t r) const {
        for (std::size_t c = 0; c < cols_; ++c)
            if (get(r, c)) return false;
        return true;
    }

    bool col_empty(std::size_t c) const {
        for (std::size_t r = 0; r < rows_; ++r)
            if (get(r, c)) return false;
        return true;
    }

    std::int64_t sum() const {
        std::int64_t s = 0;
        for (std::uint8_t v : data_) s += v;
        return s;
    }

    static BinaryMatrix from_rows(const std::vector<std::vector<int>>& rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows[0].size();
        BinaryMatrix m(r, c);
        for (std::size_t i = 0; i < r; ++i) {
            if (rows[i].size() != c) throw std::invalid_argument("ragged matrix rows");
            for (std::size_t j = 0; j < c; ++j) m.set(i, j, rows[i][j] != 0);
        }
        return m;
    }

    bool operator==(const BinaryMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t index(std::size_t r, std::size_t c) const {
        if (r >= rows_ || c >= cols_) throw std::out_of_range("matrix index");
        return r * cols_ + c;
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

}  // namespace deeptrace
