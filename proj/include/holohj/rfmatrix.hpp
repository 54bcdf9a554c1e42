#pragma once

#include <optional>
#include <vector>

#include "holohj/ratfun.hpp"

namespace holohj {

/// Dense matrix over R(z).
class RFMatrix {
 public:
  RFMatrix() = default;
  RFMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static RFMatrix identity(std::size_t n) {
    RFMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = RationalFunction(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  RationalFunction& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const RationalFunction& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<RationalFunction> row(std::size_t i) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_)};
  }

  bool is_zero() const {
    for (const auto& x : data_)
      if (!x.is_zero()) return false;
    return true;
  }

  RFMatrix transpose() const {
    RFMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  RFMatrix diff(std::size_t var) const {
    RFMatrix d(rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k) d.data_[k] = data_[k].diff(var);
    return d;
  }

  friend RFMatrix operator+(const RFMatrix& a, const RFMatrix& b) {
    RFMatrix r = a;
    for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += b.data_[k];
    return r;
  }
  friend RFMatrix operator-(const RFMatrix& a, const RFMatrix& b) {
    RFMatrix r = a;
    for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= b.data_[k];
    return r;
  }
  friend RFMatrix operator*(const RFMatrix& a, const RFMatrix& b) {
    RFMatrix r(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const auto& x = a(i, k);
        if (x.is_zero()) continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          if (!b(k, j).is_zero()) r(i, j) += x * b(k, j);
      }
    return r;
  }
  friend RFMatrix operator*(const RationalFunction& c, const RFMatrix& a) {
    RFMatrix r = a;
    for (auto& x : r.data_) x = c * x;
    return r;
  }

  friend bool operator==(const RFMatrix& a, const RFMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  /// Kronecker product, row-major (a outer).
  friend RFMatrix kron(const RFMatrix& a, const RFMatrix& b) {
    RFMatrix r(a.rows_ * b.rows_, a.cols_ * b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) {
        if (a(i, j).is_zero()) continue;
        for (std::size_t k = 0; k < b.rows_; ++k)
          for (std::size_t l = 0; l < b.cols_; ++l) r(i * b.rows_ + k, j * b.cols_ + l) = a(i, j) * b(k, l);
      }
    return r;
  }

  /// Least common multiple of all entry denominators (monic).
  Poly denominator_lcm() const {
    Poly l(1);
    for (const auto& x : data_)
      if (!x.den().is_constant()) l = lcm(l, x.den());
    return l;
  }

  const std::vector<RationalFunction>& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<RationalFunction> data_;
};

using RFRow = std::vector<RationalFunction>;

/// v * M for a row vector v.
inline RFRow row_times(const RFRow& v, const RFMatrix& m) {
  RFRow r(m.cols());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k].is_zero()) continue;
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!m(k, j).is_zero()) r[j] += v[k] * m(k, j);
  }
  return r;
}

inline bool is_zero_row(const RFRow& v) {
  for (const auto& x : v)
    if (!x.is_zero()) return false;
  return true;
}

/// Incremental row echelon form over R(z) that remembers how every stored
/// row was built from the inserted vectors, so dependencies come out as
/// explicit combinations.
class Echelon {
 public:
  /// `avoid_from`: variables with index >= avoid_from (free parameters) are
  /// avoided as pivot entries when another choice exists.
  explicit Echelon(std::size_t avoid_from = kMaxVars) : avoid_from_(avoid_from) {}

  std::size_t rank() const { return rows_.size(); }

  /// Reduces v; returns the coefficients c with v = sum c_k * inserted_k when v
  /// lies in the span, otherwise nothing. Does not modify the echelon.
  std::optional<RFRow> express(const RFRow& v) const {
    auto [residual, combo] = reduce(v);
    if (!is_zero_row(residual)) return std::nullopt;
    return combo;
  }

  /// Inserts v if independent; returns the dependency combination otherwise.
  std::optional<RFRow> insert(const RFRow& v) {
    auto [residual, combo] = reduce(v);
    if (is_zero_row(residual)) return combo;
    // residual = v - sum combo_k inserted_k; store with pivot normalized.
    std::size_t piv = residual.size();
    for (std::size_t j = 0; j < residual.size(); ++j) {
      if (residual[j].is_zero()) continue;
      if (piv == residual.size()) piv = j;
      if (!uses_parameters(residual[j])) {
        piv = j;
        break;
      }
    }
    const RationalFunction inv = residual[piv].inverse();
    Row row;
    row.pivot = piv;
    row.values.resize(residual.size());
    for (std::size_t j = 0; j < residual.size(); ++j) row.values[j] = inv * residual[j];
    // The stored row equals inv * (v - sum combo_k inserted_k).
    row.combo.assign(inserted_ + 1, RationalFunction{});
    for (std::size_t k = 0; k < inserted_; ++k) row.combo[k] = -(inv * combo[k]);
    row.combo[inserted_] = inv;
    rows_.push_back(std::move(row));
    ++inserted_;
    return std::nullopt;
  }

 private:
  struct Row {
    std::size_t pivot;
    RFRow values;
    RFRow combo;  // row = sum combo_k * inserted_k
  };

  bool uses_parameters(const RationalFunction& f) const {
    const std::uint32_t s = f.support();
    return avoid_from_ < kMaxVars && (s >> avoid_from_) != 0;
  }

  std::pair<RFRow, RFRow> reduce(RFRow v) const {
    RFRow combo(inserted_);
    for (const auto& r : rows_) {
      const RationalFunction c = v[r.pivot];
      if (c.is_zero()) continue;
      for (std::size_t j = 0; j < v.size(); ++j)
        if (!r.values[j].is_zero()) v[j] -= c * r.values[j];
      for (std::size_t k = 0; k < r.combo.size(); ++k)
        if (!r.combo[k].is_zero()) combo[k] += c * r.combo[k];
    }
    return {std::move(v), std::move(combo)};
  }

  std::vector<Row> rows_;
  std::size_t inserted_ = 0;
  std::size_t avoid_from_;
};

}  // namespace holohj
