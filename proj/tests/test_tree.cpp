#include <catch_amalgamated.hpp>

#include <treeharmonic/tree.hpp>

using namespace treeharmonic;

TEST_CASE("psi and intervals") {
    CHECK(psi(vertex_path{2}, 3) == 2.0 / 3.0);
    CHECK(psi_exact(vertex_path{1, 0, 2}, 3) == rational(11, 27));
    CHECK(psi(vertex_path{1, 0, 2}, 3) == 11.0 / 27.0);
    CHECK(psi(vertex_path{}, 5) == 0.0);
    CHECK_THROWS_AS(psi(vertex_path{3}, 3), domain_error);

    CHECK(interval_of(vertex_path{0}, 3) == std::pair{0.0, 1.0 / 3.0});
    CHECK(interval_of(vertex_path{2, 2}, 3) == std::pair{8.0 / 9.0, 1.0});
    CHECK(interval_of(vertex_path{}, 3) == std::pair{0.0, 1.0});
}

TEST_CASE("successors tile the parent interval") {
    const auto kids = successors(vertex_path{1}, 3);
    REQUIRE(kids.size() == 3);
    CHECK(kids[0] == vertex_path{1, 0});
    CHECK(kids[2] == vertex_path{1, 2});
    CHECK(successors(vertex_path{3, 3}, 4).size() == 4);
    CHECK(successors(vertex_path{}, 3)[1] == vertex_path{1});

    for (unsigned m : {3U, 4U, 7U}) {
        const vertex_path x{1, 2, 0};
        const auto parent = psi_exact(x, m);
        const auto kids_m = successors(x, m);
        CHECK(psi_exact(kids_m.front(), m) == parent);
        rational width(1);
        for (unsigned k = 0; k < 4; ++k) {
            width /= m;
        }
        for (unsigned d = 0; d < m; ++d) {
            CHECK(psi_exact(kids_m[d], m) == parent + width * d);
        }
    }
}

TEST_CASE("index round trip") {
    for (std::uint64_t i = 0; i < 81; ++i) {
        const auto x = path_at(4, i, 3);
        CHECK(level_index(x, 3) == i);
        CHECK(psi_exact(x, 3) == rational(i, 81));
    }
    CHECK_THROWS_AS(path_at(2, 9, 3), domain_error);
}

TEST_CASE("depth cap") {
    CHECK(level_size(2, 40) == (std::uint64_t{1} << 40U));
    CHECK_THROWS_AS(level_size(2, 41), capacity_error);
    CHECK_NOTHROW(level_size(3, 25));
    CHECK_THROWS_AS(level_size(3, 26), capacity_error);
}

TEST_CASE("madic unions") {
    const auto I = madic_union::cells(3, 2, 2, 4);
    CHECK(I.left_exact() == rational(2, 9));
    CHECK(I.right_exact() == rational(5, 9));
    CHECK(I.length() == 3.0 / 9.0);
    const auto fine = I.refined(3);
    CHECK(fine.k0 == 6);
    CHECK(fine.k1 == 14);
    CHECK(fine.left_exact() == I.left_exact());
    CHECK(I.contains_cell(3, 6));
    CHECK_FALSE(I.contains_cell(3, 5));
    CHECK_THROWS_AS(madic_union::cells(3, 1, 1, 3), domain_error);

    const auto verts = I.vertices();
    REQUIRE(verts.size() == 3);
    CHECK(psi_exact(verts.front(), 3) == I.left_exact());
    CHECK(psi_exact(verts.back(), 3) + rational(1, 9) == I.right_exact());
}

TEST_CASE("madic cover") {
    auto b = madic_cover(rational(1, 3), rational(2, 3), 1, 3);
    REQUIRE(b.inner.has_value());
    CHECK(*b.inner == madic_union::cells(3, 1, 1, 1));
    CHECK(b.outer == madic_union::cells(3, 1, 1, 1));

    b = madic_cover(rational(2, 9), rational(5, 9), 2, 3);
    REQUIRE(b.inner.has_value());
    CHECK(b.inner->k0 == 2);
    CHECK(b.inner->k1 == 4);

    b = madic_cover(0.1, 0.2, 1, 3);
    CHECK_FALSE(b.inner.has_value());
    CHECK(b.outer == madic_union::cells(3, 1, 0, 0));

    // inner within [a, b] within outer, outer at most two cells larger
    for (unsigned n = 1; n <= 5; ++n) {
        for (int num = 0; num < 20; ++num) {
            const rational a(num, 23);
            const rational c(num + 3, 23);
            const auto br = madic_cover(a, c, n, 3);
            CHECK(br.outer.left_exact() <= a);
            CHECK(br.outer.right_exact() >= c);
            if (br.inner) {
                CHECK(br.inner->left_exact() >= a);
                CHECK(br.inner->right_exact() <= c);
                CHECK(br.outer.cell_count() - br.inner->cell_count() <= 2);
            }
        }
    }
    CHECK_THROWS_AS(madic_cover(rational(1, 2), rational(1, 3), 2, 3), domain_error);
}

TEST_CASE("cell and interval strings") {
    CHECK(parse_cells("2:0..3", 3) == madic_union::cells(3, 2, 0, 3));
    CHECK(parse_cells("3:5", 3) == madic_union::cells(3, 3, 5, 5));
    CHECK_THROWS_AS(parse_cells("2:0..9", 3), input_error);
    CHECK_THROWS_AS(parse_cells("x", 3), input_error);
    const auto [a, b] = parse_interval("1/3..2/3");
    CHECK(a == rational(1, 3));
    CHECK(b == rational(2, 3));
    CHECK_THROWS_AS(parse_interval("2/3..1/3"), input_error);
    CHECK_THROWS_AS(parse_interval("1/0..1/2"), input_error);
}
