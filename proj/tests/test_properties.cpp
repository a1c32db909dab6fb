#include "doctest.h"
#include "properties.hpp"

using namespace gmmtf;

TEST_CASE("randomized invariants") {
  for (const auto& r : props::run_all(300, 20261019)) {
    INFO(r.name << ": " << r.first_failure);
    CHECK(r.failures == 0);
  }
}

TEST_CASE("permutation generator yields permutations") {
  Rng rng(3);
  for (int k = 1; k <= 7; ++k) {
    auto p = props::gen_permutation(k, rng);
    std::sort(p.begin(), p.end());
    for (int i = 0; i < k; ++i) CHECK(p[i] == i);
  }
}
