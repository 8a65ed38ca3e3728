#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "mcrelab/errors.hpp"
#include "mcrelab/mixing.hpp"

using namespace mcrelab;

namespace {

// Independent oracle: maximize |P(G n H) - P(G) P(H)| by enumerating all
// subset pairs. Only usable for tiny laws; deliberately not sharing code with
// alpha_finite_exact.
double alpha_bruteforce(const BlockLaw& law) {
    const int P = law.past_atoms, F = law.future_atoms;
    std::vector<double> pp(P, 0.0), pf(F, 0.0);
    for (int a = 0; a < P; ++a)
        for (int b = 0; b < F; ++b) {
            pp[a] += law.joint[static_cast<std::size_t>(a) * F + b];
            pf[b] += law.joint[static_cast<std::size_t>(a) * F + b];
        }
    double best = 0.0;
    for (std::uint64_t g = 0; g < (1ULL << P); ++g)
        for (std::uint64_t h = 0; h < (1ULL << F); ++h) {
            double pg = 0.0, ph = 0.0, pgh = 0.0;
            for (int a = 0; a < P; ++a)
                if (g >> a & 1) pg += pp[a];
            for (int b = 0; b < F; ++b)
                if (h >> b & 1) ph += pf[b];
            for (int a = 0; a < P; ++a)
                for (int b = 0; b < F; ++b)
                    if ((g >> a & 1) && (h >> b & 1))
                        pgh += law.joint[static_cast<std::size_t>(a) * F + b];
            best = std::max(best, std::abs(pgh - pg * ph));
        }
    return best;
}

BlockLaw correlated_fair_bit() {
    BlockLaw law;
    law.past_atoms = law.future_atoms = 2;
    law.joint = {0.5, 0.0, 0.0, 0.5};  // past == future, uniform
    return law;
}

BlockLaw product_fair_bit() {
    BlockLaw law;
    law.past_atoms = law.future_atoms = 2;
    law.joint = {0.25, 0.25, 0.25, 0.25};
    return law;
}

EnvironmentSpec moving_sum_fair_bit() {
    EnvironmentSpec spec;
    spec.variant = MovingSumSpec{1, FiniteLaw{{0.0, 1.0}, {0.5, 0.5}}};
    return spec;
}

EnvironmentSpec lazy_markov() {
    EnvironmentSpec spec;
    spec.variant = FiniteMarkovSpec{{0.0, 1.0}, {{0.9, 0.1}, {0.1, 0.9}}, {0.5, 0.5}};
    return spec;
}

}  // namespace

TEST_CASE("independent blocks have alpha zero") {
    CHECK(alpha_finite_exact(product_fair_bit()) <= 1e-15);
}

TEST_CASE("perfectly correlated fair bit attains the 1/4 ceiling") {
    CHECK(alpha_finite_exact(correlated_fair_bit()) == doctest::Approx(0.25));
}

TEST_CASE("moving-sum adjacent blocks match the 8-outcome brute force") {
    // (Y_0) vs (Y_1): both are sums of fair bits sharing one coordinate.
    const BlockLaw law = exact_block_law(moving_sum_fair_bit(), 0, 1, 1, 1);
    const double fast = alpha_finite_exact(law);
    const double slow = alpha_bruteforce(law);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-14));
    CHECK(fast == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("sign-ordering maximizer agrees with subset brute force on random laws") {
    // Small random joint laws; probabilities renormalized.
    std::uint64_t state = 12345;
    auto next = [&state]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 25; ++trial) {
        BlockLaw law;
        law.past_atoms = 3 + static_cast<int>(next() * 3);
        law.future_atoms = 2 + static_cast<int>(next() * 3);
        law.joint.resize(static_cast<std::size_t>(law.past_atoms) * law.future_atoms);
        double total = 0.0;
        for (auto& p : law.joint) {
            p = next();
            total += p;
        }
        for (auto& p : law.joint) p /= total;
        CHECK(alpha_finite_exact(law) == doctest::Approx(alpha_bruteforce(law)).epsilon(1e-12));
    }
}

TEST_CASE("alpha tables: iid zero, moving-sum vanishes past the order") {
    EnvironmentSpec iid;
    iid.variant = IidSpec{FiniteLaw{{0.0, 1.0, 2.0}, {0.3, 0.4, 0.3}}, nullptr};
    const auto iid_table = alpha_table(iid, 5, 2, {0, 1, 2});
    for (int n = 1; n <= 5; ++n) {
        CHECK(iid_table.sup_alpha[static_cast<std::size_t>(n - 1)] == 0.0);
        CHECK(iid_table.provenance[static_cast<std::size_t>(n - 1)] == AlphaProvenance::Exact);
    }

    const auto ms_table = alpha_table(moving_sum_fair_bit(), 4, 2, {0, 1, 2, 3});
    CHECK(ms_table.sup_alpha[0] > 0.0);
    for (int n = 2; n <= 4; ++n) {
        CHECK(ms_table.sup_alpha[static_cast<std::size_t>(n - 1)] == 0.0);
        CHECK(ms_table.provenance[static_cast<std::size_t>(n - 1)] == AlphaProvenance::Exact);
    }
    CHECK(ms_table.provenance[0] == AlphaProvenance::LowerBoundFiniteBlocks);
}

TEST_CASE("markov alpha is exact, strictly decreasing, and matches brute force") {
    const auto spec = lazy_markov();
    const auto table = alpha_table(spec, 3, 1, {0});
    for (int n = 1; n <= 3; ++n) {
        const BlockLaw law = exact_block_law(spec, 0, n, 1, 1);
        CHECK(table.sup_alpha[static_cast<std::size_t>(n - 1)] ==
              doctest::Approx(alpha_bruteforce(law)).epsilon(1e-13));
        CHECK(table.provenance[static_cast<std::size_t>(n - 1)] == AlphaProvenance::Exact);
    }
    CHECK(table.sup_alpha[0] > table.sup_alpha[1]);
    CHECK(table.sup_alpha[1] > table.sup_alpha[2]);
    // Lazy chain with uniform start: alpha(1) = |0.9*0.5 - 0.25| = 0.2.
    CHECK(table.sup_alpha[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("enlarging blocks never decreases alpha") {
    const auto spec = moving_sum_fair_bit();
    double prev = -1.0;
    for (int len = 1; len <= 2; ++len) {
        const BlockLaw law = exact_block_law(spec, 2, 1, len, len);
        const double a = alpha_finite_exact(law, 12, 4096);
        CHECK(a >= prev - 1e-14);
        prev = a;
    }
    const auto mk = lazy_markov();
    prev = -1.0;
    for (int len = 1; len <= 3; ++len) {
        const BlockLaw law = exact_block_law(mk, 3, 2, len, len);
        const double a = alpha_finite_exact(law, 12, 4096);
        CHECK(a >= prev - 1e-14);
        prev = a;
    }
}

TEST_CASE("alpha never exceeds one quarter") {
    const auto mk = lazy_markov();
    for (int j : {0, 1, 4})
        for (int n = 1; n <= 4; ++n) {
            const BlockLaw law = exact_block_law(mk, j, n, 2, 2);
            const double a = alpha_finite_exact(law);
            CHECK(a >= 0.0);
            CHECK(a <= 0.25 + 1e-12);
        }
}

TEST_CASE("cesaro sums of the dependence table") {
    DependenceTable t;
    t.max_gap = 4;
    t.j_values = {0};
    t.sup_alpha = {0.0, 0.0, 0.0, 0.0};
    CHECK(cesaro_mixing(t, 4) == doctest::Approx(0.0));
    t.sup_alpha = {0.25, 0.25, 0.25, 0.25};
    CHECK(cesaro_mixing(t, 4) == doctest::Approx(0.25));
    t.sup_alpha = {1.0, 0.5, 1.0 / 3.0, 0.25};
    CHECK(cesaro_mixing(t, 4) ==
          doctest::Approx((1.0 + 0.5 + 1.0 / 3.0 + 0.25) / 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(cesaro_mixing(t, 5), std::invalid_argument);
}

TEST_CASE("transfer bound evaluates alpha(r+1) + b(n-r)") {
    DependenceTable t;
    t.max_gap = 12;
    t.j_values = {0};
    t.sup_alpha.assign(12, 0.0);
    CouplingBoundSeq b;
    b.N = 0;
    b.b.resize(16);
    for (std::size_t k = 0; k < b.b.size(); ++k) b.b[k] = std::pow(2.0, -static_cast<double>(k));

    SUBCASE("iid environment with b = 0") {
        CouplingBoundSeq zero;
        zero.N = 0;
        zero.b.assign(16, 0.0);
        for (int n = 1; n <= 10; ++n) CHECK(transfer_bound(t, zero, n, -1) == 0.0);
    }
    SUBCASE("alpha vanishing for gaps >= 2, geometric b") {
        t.sup_alpha[0] = 0.1;  // gap 1 only
        CHECK(transfer_bound(t, b, 10, 5) == doctest::Approx(std::pow(2.0, -5.0)));
        CHECK(transfer_bound(t, b, 10, 0) == doctest::Approx(0.1 + std::pow(2.0, -10.0)));
        CHECK(transfer_bound(t, b, 10, -1) == doctest::Approx(std::pow(2.0, -5.0)));
    }
    SUBCASE("range validation") {
        CouplingBoundSeq late;
        late.N = 3;
        late.b.assign(16, 0.5);
        CHECK_THROWS_AS(transfer_bound(t, late, 3, 0), std::invalid_argument);
        CHECK_THROWS_AS(transfer_bound(t, late, 10, 8), std::invalid_argument);
        CHECK_NOTHROW(transfer_bound(t, late, 10, 7));
    }
}

TEST_CASE("sigma composition: joining independent pairs preserves alpha") {
    SUBCASE("all four independent") {
        const auto [lhs, rhs] = sigma_composition_check(product_fair_bit(), product_fair_bit());
        CHECK(lhs <= 1e-14);
        CHECK(rhs <= 1e-14);
    }
    SUBCASE("correlated pair joined with an independent fair bit") {
        const auto [lhs, rhs] =
            sigma_composition_check(correlated_fair_bit(), product_fair_bit());
        CHECK(lhs == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(rhs == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("moving-sum adjacent blocks joined with fresh noise") {
        const BlockLaw ms = exact_block_law(moving_sum_fair_bit(), 0, 1, 1, 1);
        const auto [lhs, rhs] = sigma_composition_check(ms, product_fair_bit());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
        CHECK(rhs == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
    }
    SUBCASE("non-independent second pair is rejected") {
        CHECK_THROWS_AS(sigma_composition_check(product_fair_bit(), correlated_fair_bit()),
                        std::invalid_argument);
    }
}

TEST_CASE("atom limits are enforced") {
    BlockLaw law;
    law.past_atoms = 40;
    law.future_atoms = 40;
    law.joint.assign(1600, 1.0 / 1600.0);
    CHECK_THROWS_AS(alpha_finite_exact(law, 12, 4096), std::invalid_argument);
}
