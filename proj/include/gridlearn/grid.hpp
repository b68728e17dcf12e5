#pragma once
#include <string>

#include "gridlearn/errors.hpp"

namespace gridlearn {

// Periodic rectangular cell grid. Cell (x, y) has flat index y*width + x,
// so flat order enumerates row by row.
struct Grid {
    int width = 0;
    int height = 0;
    double spacing = 1.0;

    void validate() const {
        if (width < 2 || height < 2)
            throw ConfigError("grid must be at least 2x2, got " +
                              std::to_string(width) + "x" + std::to_string(height));
        if (!(spacing > 0.0))
            throw ConfigError("grid spacing must be positive");
    }

    int cells() const { return width * height; }
    int index(int x, int y) const { return y * width + x; }
    int cell_x(int i) const { return i % width; }
    int cell_y(int i) const { return i / width; }

    static int wrap(int v, int extent) {
        int m = v % extent;
        return m < 0 ? m + extent : m;
    }
    int wrap_x(int x) const { return wrap(x, width); }
    int wrap_y(int y) const { return wrap(y, height); }

    // Minimal signed periodic displacement from a to b along an axis of the
    // given extent. A half-extent tie resolves to the positive direction.
    static int wrap_delta(int a, int b, int extent) {
        int d = wrap(b - a, extent);
        if (2 * d > extent) d -= extent;
        return d;
    }
};

}  // namespace gridlearn
