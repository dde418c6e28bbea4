#include <doctest.h>

#include <map>
#include <queue>
#include <vector>

#include "bethe/tree.hpp"

using bethe::TreeGeometry;

namespace {

// independent oracle: build the tree explicitly by breadth-first expansion
struct ExplicitTree {
    std::vector<std::int64_t> parent;
    std::vector<std::vector<std::int64_t>> children;
    std::vector<std::int64_t> shell;

    ExplicitTree(std::int64_t K, std::int64_t D) {
        parent.push_back(-1);
        shell.push_back(0);
        children.emplace_back();
        std::queue<std::int64_t> frontier;
        frontier.push(0);
        while (!frontier.empty()) {
            const std::int64_t x = frontier.front();
            frontier.pop();
            if (shell[static_cast<std::size_t>(x)] == D) continue;
            for (std::int64_t i = 0; i < K; ++i) {
                const std::int64_t c = static_cast<std::int64_t>(parent.size());
                parent.push_back(x);
                shell.push_back(shell[static_cast<std::size_t>(x)] + 1);
                children.emplace_back();
                children[static_cast<std::size_t>(x)].push_back(c);
                frontier.push(c);
            }
        }
    }
};

}  // namespace

TEST_CASE("vertex counts") {
    CHECK(TreeGeometry(2, 0).vertex_count() == 1);
    CHECK(TreeGeometry(2, 3).vertex_count() == 15);
    // geometric series: 1 + 3 + 9 + 27 + 81
    CHECK(TreeGeometry(3, 4).vertex_count() == 121);
    std::int64_t acc = 0, term = 1;
    for (int n = 0; n <= 4; ++n) {
        acc += term;
        term *= 3;
    }
    CHECK(TreeGeometry(3, 4).vertex_count() == acc);
}

TEST_CASE("vertex count overflow is reported") {
    CHECK_THROWS_AS(TreeGeometry(2, 80), std::overflow_error);
    CHECK_THROWS_AS(TreeGeometry(10, 40), std::overflow_error);
}

TEST_CASE("invalid geometry parameters") {
    CHECK_THROWS_AS(TreeGeometry(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(TreeGeometry(2, -1), std::invalid_argument);
}

TEST_CASE("shell arithmetic matches spec anchors") {
    TreeGeometry g2(2, 3);
    CHECK(g2.shell_of(0) == 0);
    CHECK(g2.shell_of(1) == 1);
    CHECK(g2.shell_of(14) == 3);
    CHECK(g2.children_of(0) == std::vector<std::int64_t>{1, 2});
    CHECK(g2.parent_of(4) == 1);
    CHECK_THROWS_AS(TreeGeometry(3, 2).parent_of(0), std::invalid_argument);
    CHECK_THROWS_AS(g2.shell_of(15), std::out_of_range);
    CHECK_THROWS_AS(g2.shell_of(-1), std::out_of_range);
}

TEST_CASE("arithmetic adjacency equals explicit BFS tree") {
    for (const auto& [K, D] : std::vector<std::pair<std::int64_t, std::int64_t>>{
             {2, 0}, {2, 5}, {3, 4}, {5, 3}}) {
        const TreeGeometry g(K, D);
        const ExplicitTree oracle(K, D);
        REQUIRE(g.vertex_count() == static_cast<std::int64_t>(oracle.parent.size()));
        for (std::int64_t x = 0; x < g.vertex_count(); ++x) {
            CHECK(g.shell_of(x) == oracle.shell[static_cast<std::size_t>(x)]);
            if (x != 0) CHECK(g.parent_of(x) == oracle.parent[static_cast<std::size_t>(x)]);
            CHECK(g.children_of(x) == oracle.children[static_cast<std::size_t>(x)]);
        }
    }
}

TEST_CASE("structural invariants") {
    const TreeGeometry g(3, 5);
    for (std::int64_t x = 0; x < g.vertex_count(); ++x) {
        const std::int64_t n = g.shell_of(x);
        if (x != 0) CHECK(g.shell_of(g.parent_of(x)) == n - 1);
        const auto kids = g.children_of(x);
        if (!g.is_leaf(x)) {
            CHECK(kids.size() == 3);
            bool found = false;
            for (std::int64_t c : kids) {
                CHECK(g.shell_of(c) == n + 1);
                CHECK(g.parent_of(c) == x);
                found = found || true;
            }
            CHECK(found);
        } else {
            CHECK(kids.empty());
        }
        // walking up reaches the root in exactly shell_of(x) steps
        std::int64_t steps = 0, cur = x;
        while (cur != 0) {
            cur = g.parent_of(cur);
            ++steps;
        }
        CHECK(steps == n);
    }
}
