#pragma once

//==============================================================================
// grid.h
// Periodic grid on the flat 4-torus [0,2pi)^4 and the one field container used
// by every module. A field is `channels` real scalar fields plus an optional
// spatial form rank:
//   rank none : plain channel data            (scalar, map, matrix)
//   rank one  : 4 spatial components/channel  (vector, matrix 1-form, flux J)
//   rank two  : 6 components/channel          (antisymmetric 2-forms, pairs k<l)
//   rank three: 4 components/channel          (3-forms, triples i<k<l)
// Storage is component-major: comps() contiguous blocks of n^4 doubles, each
// block row-major over (x1,x2,x3,x4) with x4 fastest.
//==============================================================================

#include "biharm4/errors.h"

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace biharm4 {

struct Grid {
    int n = 0;                  // points per axis; even and >= 8
    double h = 0.0;             // spacing 2*pi/n
    double volume_element = 0.0; // h^4

    std::size_t points() const { return std::size_t(n) * n * n * n; }
    bool operator==(const Grid& o) const { return n == o.n; }
};

inline Grid make_grid(int n) {
    if (n < 8 || n % 2 != 0)
        throw ConfigError("grid size must be even and >= 8, got " + std::to_string(n));
    Grid g;
    g.n = n;
    g.h = 2.0 * std::numbers::pi / n;
    g.volume_element = g.h * g.h * g.h * g.h;
    return g;
}

enum class Rank : std::uint8_t { none = 0, one = 1, two = 2, three = 3 };

inline int rank_comps(Rank r) {
    switch (r) {
        case Rank::none: return 1;
        case Rank::one: return 4;
        case Rank::two: return 6;   // (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
        case Rank::three: return 4; // (0,1,2) (0,1,3) (0,2,3) (1,2,3)
    }
    return 1;
}

// Index of the ordered pair (k,l), k<l, in the 2-form component list.
inline int pair_index(int k, int l) {
    static constexpr int tbl[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
    return tbl[k][l];
}

// Sign convention: component (k,l) with k<l is stored; B(l,k) = -B(k,l).
inline double pair_sign(int k, int l) { return k < l ? 1.0 : -1.0; }

struct Field {
    Grid grid;
    int channels = 1;
    Rank rank = Rank::none;
    std::vector<double> data;

    Field() = default;
    Field(const Grid& g, int ch, Rank r)
        : grid(g), channels(ch), rank(r), data(std::size_t(ch) * rank_comps(r) * g.points(), 0.0) {}

    int comps() const { return channels * rank_comps(rank); }
    std::size_t points() const { return grid.points(); }

    double* comp(int c) { return data.data() + std::size_t(c) * points(); }
    const double* comp(int c) const { return data.data() + std::size_t(c) * points(); }

    // channel ch, spatial component s (s ignored for rank none)
    double* at(int ch, int s = 0) { return comp(ch * rank_comps(rank) + s); }
    const double* at(int ch, int s = 0) const { return comp(ch * rank_comps(rank) + s); }

    void require(int ch, Rank r, const char* who) const {
        if (channels != ch || rank != r) throw ShapeMismatch(std::string(who) + ": unexpected field shape");
    }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// Shape helpers; m is the ambient dimension of the target.
inline Field make_scalar(const Grid& g) { return Field(g, 1, Rank::none); }
inline Field make_vector(const Grid& g) { return Field(g, 1, Rank::one); }
inline Field make_map(const Grid& g, int m) { return Field(g, m, Rank::none); }
inline Field make_map1form(const Grid& g, int m) { return Field(g, m, Rank::one); }
inline Field make_matrix(const Grid& g, int m) { return Field(g, m * m, Rank::none); }
inline Field make_matrix1form(const Grid& g, int m) { return Field(g, m * m, Rank::one); }
inline Field make_matrix2form(const Grid& g, int m) { return Field(g, m * m, Rank::two); }
inline Field make_matrix3form(const Grid& g, int m) { return Field(g, m * m, Rank::three); }

// Flat spatial index from per-axis indices (x4 fastest).
inline std::size_t flat_index(const Grid& g, int i1, int i2, int i3, int i4) {
    return ((std::size_t(i1) * g.n + i2) * g.n + i3) * g.n + i4;
}

inline std::array<int, 4> unflatten(const Grid& g, std::size_t idx) {
    int i4 = int(idx % g.n); idx /= g.n;
    int i3 = int(idx % g.n); idx /= g.n;
    int i2 = int(idx % g.n); idx /= g.n;
    return {int(idx), i2, i3, i4};
}

} // namespace biharm4
