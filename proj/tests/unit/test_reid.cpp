#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "occtrack/error.hpp"
#include "occtrack/reid.hpp"
#include "oracles.hpp"

using namespace occtrack;

namespace {

VecX unit(int dim, int i) {
  VecX v = VecX::Zero(dim);
  v[i] = 1;
  return v;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("self retrieval is perfect") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> n(0, 1);
  std::vector<LabeledEmbedding> set;
  for (int i = 0; i < 12; ++i) {
    VecX v(16);
    for (int c = 0; c < 16; ++c) v[c] = n(rng);
    set.push_back({v.normalized(), i});
  }
  const ReidReport r = reid_evaluate(set, set);
  CHECK(r.rank1 == 1.0);
  CHECK(r.mean_ap == 1.0);
  CHECK(r.match.mean == 0.0);
  CHECK(r.cmc.back() == 1.0);
}

TEST_CASE("orthogonal identities sit sqrt(2) apart") {
  const std::vector<LabeledEmbedding> set{{unit(4, 0), 1}, {unit(4, 1), 2}};
  const ReidReport r = reid_evaluate(set, set);
  CHECK(r.rank1 == 1.0);
  CHECK(r.match.mean == 0.0);
  CHECK(r.mismatch.mean == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.mismatch.count == 2);
  CHECK(r.match_histogram[0] == 2);
  CHECK(r.mismatch_histogram[static_cast<std::size_t>(std::sqrt(2.0) / kReidHistogramWidth)] == 2);
}

TEST_CASE("retrieval report equals the brute-force ranking") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const int ids = 2 + trial % 5;
    std::vector<VecX> centers;
    for (int i = 0; i < ids; ++i) {
      VecX v(6);
      for (int c = 0; c < 6; ++c) v[c] = n(rng);
      centers.push_back(v.normalized());
    }
    std::vector<LabeledEmbedding> gallery, probes;
    for (int k = 0; k < 3 * ids; ++k) {
      const int id = k % ids;
      VecX g = centers[id], p = centers[id];
      for (int c = 0; c < 6; ++c) {
        g[c] += 0.4 * n(rng);
        p[c] += 0.4 * n(rng);
      }
      gallery.push_back({g, id});
      probes.push_back({p, id});
    }
    // exact ties are ranked by gallery order
    gallery.push_back(gallery.front());
    const ReidReport r = reid_evaluate(gallery, probes);
    const oracle::ReidOracle want = oracle::brute_force_reid(fixture::as_pairs(gallery), fixture::as_pairs(probes));
    REQUIRE(r.cmc.size() == want.cmc.size());
    for (std::size_t k = 0; k < r.cmc.size(); ++k) CHECK(r.cmc[k] == doctest::Approx(want.cmc[k]).epsilon(1e-15));
    CHECK(r.mean_ap == doctest::Approx(want.map).epsilon(1e-12));
    CHECK(r.match.mean == doctest::Approx(want.match_mean).epsilon(1e-12));
    CHECK(r.mismatch.mean == doctest::Approx(want.mismatch_mean).epsilon(1e-12));
  }
}

TEST_CASE("simulated identities are retrievable") {
  const fixture::ReidSets sets = fixture::simulated_reid_sets(7, 16, 0.1, 20);
  REQUIRE(sets.gallery.size() == 16);
  const ReidReport r = reid_evaluate(sets.gallery, sets.probes);
  CHECK(r.rank1 >= 0.95);
  CHECK(r.match.mean < r.mismatch.mean - 0.3);
  const oracle::ReidOracle want =
      oracle::brute_force_reid(fixture::as_pairs(sets.gallery), fixture::as_pairs(sets.probes));
  CHECK(r.rank1 == want.cmc[0]);
  CHECK(r.mean_ap == doctest::Approx(want.map).epsilon(1e-12));
}

TEST_CASE("retrieval input errors") {
  const std::vector<LabeledEmbedding> one_id{{unit(3, 0), 1}, {unit(3, 1), 1}};
  CHECK(kind_of([&] { reid_evaluate(one_id, one_id); }) == ErrorKind::DegenerateGallery);
  const std::vector<LabeledEmbedding> gallery{{unit(3, 0), 1}, {unit(3, 1), 2}};
  const std::vector<LabeledEmbedding> stranger{{unit(3, 2), 9}};
  CHECK(kind_of([&] { reid_evaluate(gallery, stranger); }) == ErrorKind::MissingIdentity);
  const std::vector<LabeledEmbedding> short_probe{{VecX::Ones(2), 1}};
  CHECK(kind_of([&] { reid_evaluate(gallery, short_probe); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("labeled embeddings survive a JSON round trip") {
  const std::vector<LabeledEmbedding> set{{unit(3, 0), 4}, {VecX::Constant(3, 0.125), -2}};
  const auto back = labeled_embeddings_from_json(labeled_embeddings_to_json(set), "set");
  REQUIRE(back.size() == 2);
  CHECK(back[1].identity == -2);
  CHECK(back[1].embedding == set[1].embedding);
}
