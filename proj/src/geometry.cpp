#include "declab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace declab {

Dyadic parse_dyadic(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        const std::int64_t num = std::stoll(text.substr(0, slash));
        const std::int64_t den = std::stoll(text.substr(slash + 1));
        Dyadic d(den, 0);
        if (den <= 0 || !d.is_pow2())
            throw InvalidScaleError("denominator of '" + text + "' is not a power of two");
        return Dyadic(num, d.log2());
    }
    const auto dot = text.find('.');
    if (dot != std::string::npos) {
        // Short decimals: scale by 10^k and require the result to be dyadic.
        const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        const int k = int(text.size() - dot - 1);
        std::int64_t num = std::stoll(digits);
        std::int64_t den = 1;
        for (int i = 0; i < k; ++i) den *= 10;
        // num/den dyadic iff den/gcd divides a power of two.
        std::int64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
        Dyadic d(den, 0);
        if (!d.is_pow2())
            throw InvalidScaleError("'" + text + "' is not a dyadic rational");
        return Dyadic(num, d.log2());
    }
    return Dyadic::from_int(std::stoll(text));
}

bool FrequencyCube::contains(std::span<const double> xi) const {
    const double s = side.to_double();
    for (int d = 0; d < dim(); ++d) {
        const double c = corner[static_cast<std::size_t>(d)].to_double();
        if (xi[static_cast<std::size_t>(d)] < c || xi[static_cast<std::size_t>(d)] >= c + s) return false;
    }
    return true;
}

bool FrequencyCube::contains_dyadic(std::span<const Dyadic> xi) const {
    for (int d = 0; d < dim(); ++d) {
        const Dyadic c = corner[static_cast<std::size_t>(d)];
        if (xi[static_cast<std::size_t>(d)] < c || xi[static_cast<std::size_t>(d)] >= c + side) return false;
    }
    return true;
}

bool FrequencyCube::inside(const FrequencyCube& other) const {
    if (dim() != other.dim()) return false;
    for (int d = 0; d < dim(); ++d) {
        const std::size_t i = static_cast<std::size_t>(d);
        if (corner[i] < other.corner[i]) return false;
        if (other.corner[i] + other.side < corner[i] + side) return false;
    }
    return true;
}

FrequencyCube make_frequency_cube(std::vector<Dyadic> corner, Dyadic side) {
    if (!side.is_pow2() || side > Dyadic::from_int(1))
        throw InvalidScaleError("cube side " + side.str() + " is not in 2^{-N}");
    for (const auto& c : corner) {
        if (c < Dyadic::from_int(0) || c + side > Dyadic::from_int(1))
            throw DomainError("cube is not inside the unit cube");
        // Corners must be integer multiples of the side.
        const Dyadic q = c * Dyadic::pow2(-side.log2());
        if (q.exp2 != 0)
            throw InvalidScaleError("corner " + c.str() + " is not a multiple of side " + side.str());
    }
    return FrequencyCube{std::move(corner), side};
}

FrequencyCube unit_cube(int dim) {
    return FrequencyCube{std::vector<Dyadic>(static_cast<std::size_t>(dim), Dyadic::from_int(0)),
                         Dyadic::from_int(1)};
}

bool SpatialCube::contains(std::span<const double> x) const {
    for (int d = 0; d < dim(); ++d) {
        const std::size_t i = static_cast<std::size_t>(d);
        if (x[i] < center[i] - side / 2 || x[i] >= center[i] + side / 2) return false;
    }
    return true;
}

SpatialCube centered_cube(int dim, double side) {
    return SpatialCube{std::vector<double>(static_cast<std::size_t>(dim), 0.0), side};
}

std::vector<FrequencyCube> dyadic_partition(const FrequencyCube& Q, Dyadic alpha) {
    if (!alpha.is_pow2() || alpha > Q.side)
        throw InvalidScaleError("partition scale " + alpha.str() + " is invalid for side " +
                                Q.side.str());
    const std::int64_t m = exact_ratio(Q.side, alpha);
    const int d = Q.dim();
    std::vector<FrequencyCube> out;
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) total *= m;
    out.reserve(static_cast<std::size_t>(total));

    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        std::vector<Dyadic> corner(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            corner[static_cast<std::size_t>(i)] = Q.corner[static_cast<std::size_t>(i)] + idx[static_cast<std::size_t>(i)] * alpha;
        out.push_back(FrequencyCube{std::move(corner), alpha});
        // Odometer with the last axis fastest gives lexicographic corner order.
        int axis = d - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == m) {
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

std::vector<SpatialCube> spatial_partition(const SpatialCube& B, double sub_side) {
    const double m_real = B.side / sub_side;
    const std::int64_t m = std::llround(m_real);
    if (m < 1 || std::abs(m_real - double(m)) > 1e-9)
        throw InvalidScaleError("subcube side does not divide the cube side");
    const int d = B.dim();
    std::vector<SpatialCube> out;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        SpatialCube sub;
        sub.side = sub_side;
        sub.center.resize(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            sub.center[static_cast<std::size_t>(i)] =
                B.center[static_cast<std::size_t>(i)] - B.side / 2 + (double(idx[static_cast<std::size_t>(i)]) + 0.5) * sub_side;
        out.push_back(std::move(sub));
        int axis = d - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == m) {
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

std::vector<double> paraboloid_normal(std::span<const double> xi) {
    std::vector<double> n(xi.size() + 1);
    double norm2 = 1.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        n[i] = 2.0 * xi[i];
        norm2 += n[i] * n[i];
    }
    n[xi.size()] = -1.0;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : n) v *= inv;
    return n;
}

double abs_det(const std::vector<std::vector<double>>& rows) {
    const int n = int(rows.size());
    if (n == 1) return std::abs(rows[0][0]);
    if (n == 2) return std::abs(rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]);
    if (n == 3) {
        const auto& a = rows[0];
        const auto& b = rows[1];
        const auto& c = rows[2];
        return std::abs(a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                        a[2] * (b[0] * c[1] - b[1] * c[0]));
    }
    // Gaussian elimination with partial pivoting for the rare larger case.
    std::vector<std::vector<double>> m = rows;
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::abs(m[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)]))
                piv = r;
        if (m[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)] == 0.0) return 0.0;
        if (piv != col) std::swap(m[static_cast<std::size_t>(piv)], m[static_cast<std::size_t>(col)]);
        det *= m[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        for (int r = col + 1; r < n; ++r) {
            const double f = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / m[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c2 = col; c2 < n; ++c2)
                m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c2)] -= f * m[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
        }
    }
    return std::abs(det);
}

namespace {

// All lattice sample points of one cube: corner + side * j / (density - 1).
std::vector<std::vector<double>> cube_samples(const FrequencyCube& q, int density) {
    const int d = q.dim();
    const double s = q.side.to_double();
    std::vector<std::vector<double>> pts;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        std::vector<double> p(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            p[static_cast<std::size_t>(i)] = q.corner[static_cast<std::size_t>(i)].to_double() +
                                s * double(idx[static_cast<std::size_t>(i)]) / double(density - 1);
        pts.push_back(std::move(p));
        int axis = d - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == density) {
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return pts;
}

} // namespace

TransversalityCertificate transversality(std::span<const FrequencyCube> cubes,
                                         int sample_density) {
    if (cubes.empty()) throw DegenerateInputError("transversality of an empty family");
    if (sample_density < 2) throw DomainError("sample_density must be at least 2");
    const int n = int(cubes.size());
    for (const auto& q : cubes)
        if (q.dim() != n - 1)
            throw DomainError("expected " + std::to_string(n) + " cubes in dimension " +
                              std::to_string(n - 1));

    std::vector<std::vector<std::vector<double>>> normals(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (const auto& p : cube_samples(cubes[static_cast<std::size_t>(i)], sample_density))
            normals[static_cast<std::size_t>(i)].push_back(paraboloid_normal(p));
    }

    double best = -1.0;
    std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
    while (true) {
        for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = normals[static_cast<std::size_t>(i)][pick[static_cast<std::size_t>(i)]];
        const double det = abs_det(rows);
        if (best < 0.0 || det < best) best = det;
        int axis = n - 1;
        while (axis >= 0 && ++pick[static_cast<std::size_t>(axis)] == normals[static_cast<std::size_t>(axis)].size()) {
            pick[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }

    TransversalityCertificate cert;
    cert.cubes.assign(cubes.begin(), cubes.end());
    cert.nu_lower = best;
    cert.sample_density = sample_density;
    return cert;
}

std::vector<Dyadic> RescaleMaps::freq_apply(std::span<const Dyadic> xi) const {
    std::vector<Dyadic> out(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i)
        out[i] = div_pow2(xi[i] - a[i], sqrt_sigma);
    return out;
}

std::vector<double> RescaleMaps::freq_apply(std::span<const double> xi) const {
    const double s = sqrt_sigma.to_double();
    std::vector<double> out(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) out[i] = (xi[i] - a[i].to_double()) / s;
    return out;
}

FrequencyCube RescaleMaps::freq_apply(const FrequencyCube& q) const {
    FrequencyCube out;
    out.corner = freq_apply(std::span<const Dyadic>(q.corner));
    out.side = div_pow2(q.side, sqrt_sigma);
    return out;
}

std::vector<double> RescaleMaps::space_apply(std::span<const double> x) const {
    const std::size_t d = a.size();
    const double s = sqrt_sigma.to_double();
    const double xn = x[d];
    std::vector<double> out(d + 1);
    for (std::size_t i = 0; i < d; ++i) out[i] = (x[i] + 2.0 * a[i].to_double() * xn) * s;
    out[d] = xn * sigma.to_double();
    return out;
}

std::vector<double> RescaleMaps::space_apply_inverse(std::span<const double> y) const {
    const std::size_t d = a.size();
    const double s = sqrt_sigma.to_double();
    const double xn = y[d] / sigma.to_double();
    std::vector<double> out(d + 1);
    for (std::size_t i = 0; i < d; ++i) out[i] = y[i] / s - 2.0 * a[i].to_double() * xn;
    out[d] = xn;
    return out;
}

double RescaleMaps::space_det() const {
    const int d = freq_dim();
    return std::pow(sqrt_sigma.to_double(), d) * sigma.to_double();
}

RescaleMaps parabolic_rescale_maps(const FrequencyCube& Q) {
    for (const auto& c : Q.corner)
        if (c < Dyadic::from_int(0) || c + Q.side > Dyadic::from_int(1))
            throw DomainError("cap is not inside the unit frequency cube");
    RescaleMaps maps;
    maps.a = Q.corner;
    maps.sqrt_sigma = Q.side;
    maps.sigma = Q.side * Q.side;
    return maps;
}

} // namespace declab
