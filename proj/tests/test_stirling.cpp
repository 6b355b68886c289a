#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include <twinmom/stirling.hpp>

using namespace twinmom;

TEST_CASE("order-5 conversion matrices match the closed-form tables") {
  StirlingMatrices m = stirling_matrices(5);
  // <n^k> in terms of <W^l>: rows k = 1..5 of the second-kind triangle.
  const std::vector<std::vector<long long>> second = {
      {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 3, 1, 0, 0}, {1, 7, 6, 1, 0}, {1, 15, 25, 10, 1}};
  // <W^k> in terms of <n^l>: signed first-kind triangle.
  const std::vector<std::vector<long long>> first = {{1, 0, 0, 0, 0},
                                                     {-1, 1, 0, 0, 0},
                                                     {2, -3, 1, 0, 0},
                                                     {-6, 11, -6, 1, 0},
                                                     {24, -50, 35, -10, 1}};
  CHECK(m.second == second);
  CHECK(m.first == first);
}

TEST_CASE("the two triangles are exact integer inverses at every supported order") {
  for (int K = 1; K <= kMaxMomentOrder; ++K) {
    StirlingMatrices m = stirling_matrices(K);  // construction self-verifies S2*S1 == I
    REQUIRE(m.K == K);
    for (int k = 1; k <= K; ++k)
      for (int l = 1; l <= K; ++l) {
        long long acc = 0;
        for (int j = 1; j <= K; ++j) acc += m.second[k - 1][j - 1] * m.first[j - 1][l - 1];
        CHECK(acc == (k == l ? 1 : 0));
        acc = 0;  // product in the other order as well
        for (int j = 1; j <= K; ++j) acc += m.first[k - 1][j - 1] * m.second[j - 1][l - 1];
        CHECK(acc == (k == l ? 1 : 0));
      }
  }
}

TEST_CASE("row and diagonal invariants of the triangles") {
  StirlingMatrices m = stirling_matrices(kMaxMomentOrder);
  long long bell = 0, factorial = 1;
  for (int k = 1; k <= kMaxMomentOrder; ++k) {
    CHECK(m.second[k - 1][k - 1] == 1);
    CHECK(m.first[k - 1][k - 1] == 1);
    CHECK(m.second[k - 1][0] == 1);
    bell = 0;
    long long signed_sum = 0;
    for (int l = 1; l <= k; ++l) {
      bell += m.second[k - 1][l - 1];
      signed_sum += m.first[k - 1][l - 1];
    }
    if (k >= 2) {
      CHECK(signed_sum == 0);  // falling factorial of 1 vanishes beyond order 1
      factorial *= (k - 1);
      CHECK(m.first[k - 1][0] == (k % 2 ? factorial : -factorial));  // +-(k-1)!
    }
  }
  CHECK(bell == 4140);  // number of set partitions of 8 elements
}

TEST_CASE("unsupported orders are rejected") {
  CHECK_THROWS_AS(stirling_matrices(0), ValidationError);
  CHECK_THROWS_AS(stirling_matrices(-3), ValidationError);
  CHECK_THROWS_AS(stirling_matrices(kMaxMomentOrder + 1), ValidationError);
}
