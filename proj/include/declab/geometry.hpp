#pragma once

#include <span>
#include <vector>

#include "declab/dyadic.hpp"

namespace declab {

/// Axis-parallel dyadic cube in [0,1]^dim, the domain of a cap on the
/// truncated paraboloid. Side lengths are powers of two and corners are
/// integer multiples of the side, so partitions are exact.
struct FrequencyCube {
    std::vector<Dyadic> corner;
    Dyadic side;

    int dim() const { return int(corner.size()); }

    std::vector<Dyadic> center() const {
        std::vector<Dyadic> c = corner;
        const Dyadic h = side * Dyadic::pow2(-1);
        for (auto& v : c) v = v + h;
        return c;
    }

    std::vector<double> center_d() const {
        std::vector<double> c(corner.size());
        const Dyadic h = side * Dyadic::pow2(-1);
        for (std::size_t i = 0; i < corner.size(); ++i) c[i] = (corner[i] + h).to_double();
        return c;
    }

    /// Half-open membership [corner, corner + side).
    bool contains(std::span<const double> xi) const;
    bool contains_dyadic(std::span<const Dyadic> xi) const;

    /// True when this cube lies inside other (closed inclusion).
    bool inside(const FrequencyCube& other) const;

    friend bool operator==(const FrequencyCube& a, const FrequencyCube& b) {
        return a.side == b.side && a.corner == b.corner;
    }
};

/// Validating constructor; throws InvalidScaleError / DomainError.
FrequencyCube make_frequency_cube(std::vector<Dyadic> corner, Dyadic side);

/// [0,1]^dim.
FrequencyCube unit_cube(int dim);

/// Cube B(center, side) in R^n.
struct SpatialCube {
    std::vector<double> center;
    double side = 1.0;

    int dim() const { return int(center.size()); }
    bool contains(std::span<const double> x) const;
};

SpatialCube centered_cube(int dim, double side);

/// The unique partition of Q into cubes of side alpha, in lexicographic
/// corner order (first coordinate most significant).
std::vector<FrequencyCube> dyadic_partition(const FrequencyCube& Q, Dyadic alpha);

/// Partition of a spatial cube into subcubes of side sub_side (which must
/// divide the side evenly); lexicographic corner order.
std::vector<SpatialCube> spatial_partition(const SpatialCube& B, double sub_side);

/// Downward unit normal (2 xi, -1)/sqrt(1 + 4|xi|^2) to the graph of |xi|^2.
std::vector<double> paraboloid_normal(std::span<const double> xi);

/// Sampled lower bound for the transversality of n cubes in [0,1]^(n-1):
/// the minimum of |det(n(P_1),...,n(P_n))| over all tuples of lattice
/// sample points. Zero is a valid output.
struct TransversalityCertificate {
    std::vector<FrequencyCube> cubes;
    double nu_lower = 0.0;
    int sample_density = 0;
};

TransversalityCertificate transversality(std::span<const FrequencyCube> cubes,
                                         int sample_density = 4);

/// The affine pair stretching a cap Q = a + [0, s]^(n-1) to the whole unit
/// cube: the frequency map (xi - a)/s and the spatial transport map
/// (x_bar, x_n) -> ((x_bar + 2 a x_n) s, x_n s^2), with sigma = s^2.
struct RescaleMaps {
    std::vector<Dyadic> a;   // corner of Q
    Dyadic sqrt_sigma;       // side of Q
    Dyadic sigma;            // side^2

    int freq_dim() const { return int(a.size()); }

    std::vector<Dyadic> freq_apply(std::span<const Dyadic> xi) const;
    std::vector<double> freq_apply(std::span<const double> xi) const;
    FrequencyCube freq_apply(const FrequencyCube& q) const;

    std::vector<double> space_apply(std::span<const double> x) const;
    std::vector<double> space_apply_inverse(std::span<const double> y) const;

    /// Jacobian determinant of the spatial map, sigma^{(n+1)/2}.
    double space_det() const;
};

RescaleMaps parabolic_rescale_maps(const FrequencyCube& Q);

/// |det| of n vectors in R^n (n <= 4 expected at desk scale).
double abs_det(const std::vector<std::vector<double>>& rows);

} // namespace declab
