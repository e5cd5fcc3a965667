/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "a2g/rng.hpp"

using a2g::RngStream;

TEST_CASE("same seed reproduces the stream bitwise") {
    RngStream a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    RngStream a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    REQUIRE(same == 0);
}

TEST_CASE("next_double stays in [0,1) and looks uniform") {
    RngStream r(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = r.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
    }
    REQUIRE(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("next_below respects the bound and covers it") {
    RngStream r(99);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i) {
        const auto v = r.next_below(17);
        REQUIRE(v < 17);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 17);
}

TEST_CASE("gaussian draws have roughly standard moments") {
    RngStream r(3);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.next_gaussian();
        s += g;
        s2 += g * g;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.02);
    REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("derived child streams are independent of each other") {
    RngStream a = RngStream::derive(42, 0);
    RngStream b = RngStream::derive(42, 1);
    RngStream a2 = RngStream::derive(42, 0);
    REQUIRE(a.next_u64() != b.next_u64());
    RngStream a3 = RngStream::derive(42, 0);
    REQUIRE(a2.next_u64() == a3.next_u64());
}

TEST_CASE("fnv1a64 matches known reference digests") {
    // Published FNV-1a test vectors.
    REQUIRE(a2g::fnv1a64("", 0) == 0xcbf29ce484222325ULL);
    REQUIRE(a2g::fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    REQUIRE(a2g::fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}
