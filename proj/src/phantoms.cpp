#include "mlbpgd/phantoms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

namespace mlbpgd {

namespace {

double sq(double v) { return v * v; }

} // namespace

GridVector crater_field(int side) {
    GridVector img = GridVector::grid(side, 0.12);
    const double s = static_cast<double>(side);

    struct Crater {
        double cx, cy, radius, height;  // fractions of the side, except height
    };
    constexpr std::array<Crater, 5> craters = {{
        {0.30, 0.34, 0.16, 0.75},
        {0.68, 0.25, 0.09, 0.55},
        {0.72, 0.70, 0.13, 0.65},
        {0.25, 0.75, 0.07, 0.45},
        {0.52, 0.52, 0.05, 0.60},
    }};

    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const double y = (r + 0.5) / s;
            const double x = (c + 0.5) / s;
            // gentle illumination mound so the background is not flat
            double v = img.at(r, c) + 0.25 * std::exp(-(sq(x - 0.5) + sq(y - 0.55)) / 0.18);
            for (const Crater& cr : craters) {
                const double d = std::sqrt(sq(x - cr.cx) + sq(y - cr.cy));
                const double rim = cr.height * std::exp(-sq((d - cr.radius) / (0.30 * cr.radius)));
                const double bowl = 0.55 * cr.height * std::exp(-sq(d / (0.55 * cr.radius)));
                v += rim - bowl;
            }
            img.at(r, c) = std::clamp(v, 0.02, 1.0);
        }
    }
    return img;
}

GridVector nested_discs(int side) {
    GridVector img = GridVector::grid(side, 0.05);
    const double s = static_cast<double>(side);

    constexpr std::array<double, 5> radius = {0.46, 0.34, 0.23, 0.13, 0.055};
    constexpr std::array<double, 5> level = {0.85, 0.25, 0.70, 0.40, 0.95};

    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const double d =
                std::sqrt(sq((c + 0.5) / s - 0.5) + sq((r + 0.5) / s - 0.5));
            for (std::size_t k = 0; k < radius.size(); ++k)
                if (d <= radius[k]) img.at(r, c) = level[k];
        }
    }
    return img;
}

GridVector blocky_sprite(int side) {
    // 11 x 11 bitmap, drawn as blocks; '#' is bright, '.' is background.
    constexpr std::array<std::string_view, 11> rows = {
        "..#.....#..",
        "...#...#...",
        "..#######..",
        ".##.###.##.",
        "###########",
        "#.#######.#",
        "#.#.....#.#",
        "...##.##...",
        "..#..#..#..",
        ".#........#",
        "..##...##..",
    };

    GridVector img = GridVector::grid(side, 0.05);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const int br = std::min<int>(10, r * 11 / side);
            const int bc = std::min<int>(10, c * 11 / side);
            if (rows[br][bc] == '#') img.at(r, c) = 0.9;
        }
    }
    return img;
}

} // namespace mlbpgd
