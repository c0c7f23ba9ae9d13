// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcsd/error.hpp"

namespace bcsd {

/// Extents of a phase-space field: voxels x directions x energy nodes.
struct FieldShape
{
    std::size_t voxels = 0;
    std::size_t directions = 0;
    std::size_t energies = 0;

    std::size_t slice_size() const { return voxels * directions; }
    std::size_t size() const { return slice_size() * energies; }
    bool operator==(const FieldShape&) const = default;
};

std::string to_string(const FieldShape& s);

inline void require_same_shape(const FieldShape& a, const FieldShape& b, const char* what)
{
    if (!(a == b)) {
        throw ContractError(std::string(what) + ": shape mismatch " + to_string(a) + " vs "
                            + to_string(b));
    }
}

struct StateTag;
struct RemappedTag;
struct DualTag;

/*!
 * Dense values over (energy node, direction, voxel), voxel fastest.
 *
 * The tag distinguishes the state/control axis (uniform eps nodes), the
 * remapped axis (tau nodes) and adjoint fields so they are not mixed by
 * accident; `retag` converts explicitly.
 */
template<class Tag>
class BasicField
{
  public:
    BasicField() = default;
    explicit BasicField(FieldShape shape, double fill = 0.0)
        : shape_(shape), data_(shape.size(), fill)
    {
    }

    const FieldShape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t k, std::size_t m, std::size_t v)
    {
        return data_[(k * shape_.directions + m) * shape_.voxels + v];
    }
    double operator()(std::size_t k, std::size_t m, std::size_t v) const
    {
        return data_[(k * shape_.directions + m) * shape_.voxels + v];
    }

    std::span<double> slice(std::size_t k)
    {
        return {data_.data() + k * shape_.slice_size(), shape_.slice_size()};
    }
    std::span<const double> slice(std::size_t k) const
    {
        return {data_.data() + k * shape_.slice_size(), shape_.slice_size()};
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    BasicField& operator+=(const BasicField& o)
    {
        require_same_shape(shape_, o.shape_, "field +=");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += o.data_[i];
        }
        return *this;
    }
    BasicField& operator-=(const BasicField& o)
    {
        require_same_shape(shape_, o.shape_, "field -=");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] -= o.data_[i];
        }
        return *this;
    }
    BasicField& operator*=(double a)
    {
        for (double& x : data_) {
            x *= a;
        }
        return *this;
    }
    /// this += a * o
    void axpy(double a, const BasicField& o)
    {
        require_same_shape(shape_, o.shape_, "field axpy");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += a * o.data_[i];
        }
    }

    friend BasicField operator+(BasicField a, const BasicField& b) { return a += b; }
    friend BasicField operator-(BasicField a, const BasicField& b) { return a -= b; }
    friend BasicField operator*(double s, BasicField a) { return a *= s; }

    bool operator==(const BasicField&) const = default;

  private:
    FieldShape shape_;
    std::vector<double> data_;
};

using Field = BasicField<StateTag>;
using AdjointField = BasicField<DualTag>;

/// Values on remapped nodes tau_k together with those nodes.
struct TransformedField
{
    BasicField<RemappedTag> values;
    std::vector<double> tau_nodes;
};

template<class To, class From>
BasicField<To> retag(const BasicField<From>& f)
{
    BasicField<To> out(f.shape());
    std::copy(f.values().begin(), f.values().end(), out.values().begin());
    return out;
}

bool all_finite(std::span<const double> values);

}  // namespace bcsd
