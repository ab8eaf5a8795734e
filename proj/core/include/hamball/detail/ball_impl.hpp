#pragma once

#include <vector>

#include "hamball/error.hpp"

namespace hamball {

template <typename Visitor>
void for_each_in_ball(const BinaryCode& center, std::size_t radius, Visitor&& visit) {
    const std::size_t b = center.bits();
    if (radius > b) {
        throw UsageError("enumerate_ball: radius " + std::to_string(radius) +
                         " exceeds code length " + std::to_string(b));
    }
    BinaryCode probe = center;
    visit(static_cast<const BinaryCode&>(probe), std::size_t{0});

    // Combinations of `flips` positions in lexicographic order.
    std::vector<std::size_t> pos;
    for (std::size_t flips = 1; flips <= radius; ++flips) {
        pos.resize(flips);
        for (std::size_t i = 0; i < flips; ++i) pos[i] = i;
        while (true) {
            for (std::size_t p : pos) probe.flip(p);
            visit(static_cast<const BinaryCode&>(probe), flips);
            for (std::size_t p : pos) probe.flip(p);

            std::size_t i = flips;
            while (i > 0 && pos[i - 1] == b - flips + (i - 1)) --i;
            if (i == 0) break;
            ++pos[i - 1];
            for (std::size_t k = i; k < flips; ++k) pos[k] = pos[k - 1] + 1;
        }
    }
}

}  // namespace hamball
