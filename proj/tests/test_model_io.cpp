#include <doctest.h>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopwise/model_io.hpp"

using namespace stopwise;
using nlohmann::json;

namespace {

MarginalTable root_table(int stage, std::vector<double> p1) {
  MarginalTable t;
  t.stage = stage;
  t.feature = stage;
  t.ancestor_stage = -1;
  t.bins = 2;
  t.ancestor_bins = 1;
  t.n_classes = static_cast<int>(p1.size());
  t.class_only.resize(2 * p1.size());
  for (std::size_t c = 0; c < p1.size(); ++c) {
    t.class_only[c] = 1.0 - p1[c];
    t.class_only[p1.size() + c] = p1[c];
  }
  t.p = t.class_only;
  return t;
}

MarginalTable child_table(int stage, int ancestor, std::vector<std::vector<double>> p1,
                          std::vector<double> class_p1) {
  MarginalTable t;
  t.stage = stage;
  t.feature = stage;
  t.ancestor_stage = ancestor;
  t.bins = 2;
  t.ancestor_bins = static_cast<int>(p1.size());
  t.n_classes = static_cast<int>(p1[0].size());
  t.p.resize(2 * p1.size() * p1[0].size());
  for (std::size_t u = 0; u < p1.size(); ++u)
    for (std::size_t c = 0; c < p1[0].size(); ++c) {
      t.p[(0 * p1.size() + u) * p1[0].size() + c] = 1.0 - p1[u][c];
      t.p[(1 * p1.size() + u) * p1[0].size() + c] = p1[u][c];
    }
  t.class_only.resize(2 * class_p1.size());
  for (std::size_t c = 0; c < class_p1.size(); ++c) {
    t.class_only[c] = 1.0 - class_p1[c];
    t.class_only[class_p1.size() + c] = class_p1[c];
  }
  return t;
}

/// Two-stage model over a three-column schema (only columns 2 and 0 are ever
/// requested), asymmetric costs, remapped labels, one degenerate quantizer.
PolicyModel sample_model() {
  PolicyModel m;
  m.tables = {root_table(0, {0.8, 0.3}),
              child_table(1, 0, {{0.9, 0.2}, {0.6, 0.1}}, {0.66, 0.17})};
  m.priors = {0.4, 0.6};
  m.costs.n_classes = 2;
  m.costs.q = {0.0, 1.0, 5.0, 0.0};
  m.costs.stage_cost = {0.02, 0.04};
  m.feature_ids = {"age", "mass", "hue"};
  m.label_values = {3.0, 7.0};

  m.quantizer.bins = 2;
  m.quantizer.features.resize(3);
  m.quantizer.features[0].cuts = {0.5};
  m.quantizer.features[1].degenerate = true;
  m.quantizer.features[2].cuts = {1.5};

  m.structure.kind = StructureKind::Random;
  m.structure.seed = 11;
  m.structure.features = {2, 0};
  m.structure.parents = {{}, {0}};
  m.structure.children = {{1}, {}};
  m.structure.designated_parent = {-1, 0};

  m.ordering.order = {0, 1};
  m.ordering.columns = {2, 0};
  m.ordering.ancestor_pos = {-1, 0};

  auto bank = exhaustive_beliefs(m.tables, m.priors, m.ordering);
  m.policy = solve(m.tables, m.priors, m.ordering, m.costs, bank);
  return m;
}

void check_equal(const PolicyModel& a, const PolicyModel& b) {
  CHECK(a.format_version == b.format_version);

  CHECK(a.quantizer.bins == b.quantizer.bins);
  REQUIRE(a.quantizer.features.size() == b.quantizer.features.size());
  for (std::size_t i = 0; i < a.quantizer.features.size(); ++i) {
    CHECK(a.quantizer.features[i].cuts == b.quantizer.features[i].cuts);
    CHECK(a.quantizer.features[i].degenerate == b.quantizer.features[i].degenerate);
  }

  CHECK(a.feature_ids == b.feature_ids);
  CHECK(a.label_values == b.label_values);

  CHECK(a.structure.kind == b.structure.kind);
  CHECK(a.structure.seed == b.structure.seed);
  CHECK(a.structure.features == b.structure.features);
  CHECK(a.structure.parents == b.structure.parents);
  CHECK(a.structure.children == b.structure.children);
  CHECK(a.structure.designated_parent == b.structure.designated_parent);

  CHECK(a.ordering.order == b.ordering.order);
  CHECK(a.ordering.columns == b.ordering.columns);
  CHECK(a.ordering.ancestor_pos == b.ordering.ancestor_pos);

  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t k = 0; k < a.tables.size(); ++k) {
    CHECK(a.tables[k].stage == b.tables[k].stage);
    CHECK(a.tables[k].feature == b.tables[k].feature);
    CHECK(a.tables[k].ancestor_stage == b.tables[k].ancestor_stage);
    CHECK(a.tables[k].bins == b.tables[k].bins);
    CHECK(a.tables[k].ancestor_bins == b.tables[k].ancestor_bins);
    CHECK(a.tables[k].n_classes == b.tables[k].n_classes);
    CHECK(a.tables[k].p == b.tables[k].p);               // bitwise
    CHECK(a.tables[k].class_only == b.tables[k].class_only);
  }

  CHECK(a.priors == b.priors);
  CHECK(a.costs.n_classes == b.costs.n_classes);
  CHECK(a.costs.q == b.costs.q);
  CHECK(a.costs.stage_cost == b.costs.stage_cost);

  REQUIRE(a.policy.stop_vectors.size() == b.policy.stop_vectors.size());
  for (std::size_t i = 0; i < a.policy.stop_vectors.size(); ++i) {
    CHECK(a.policy.stop_vectors[i].w == b.policy.stop_vectors[i].w);
    CHECK(a.policy.stop_vectors[i].action == b.policy.stop_vectors[i].action);
  }
  REQUIRE(a.policy.stages.size() == b.policy.stages.size());
  for (std::size_t k = 0; k < a.policy.stages.size(); ++k) {
    CHECK(a.policy.stages[k].tracked == b.policy.stages[k].tracked);
    REQUIRE(a.policy.stages[k].buckets.size() == b.policy.stages[k].buckets.size());
    auto ita = a.policy.stages[k].buckets.begin();
    auto itb = b.policy.stages[k].buckets.begin();
    for (; ita != a.policy.stages[k].buckets.end(); ++ita, ++itb) {
      CHECK(ita->first == itb->first);
      REQUIRE(ita->second.size() == itb->second.size());
      for (std::size_t i = 0; i < ita->second.size(); ++i) {
        CHECK(ita->second[i].w == itb->second[i].w); // bitwise
        CHECK(ita->second[i].action == itb->second[i].action);
      }
    }
  }
}

void check_same_decisions(const PolicyModel& a, const PolicyModel& b) {
  for (auto values : {std::vector<double>{0.0, 9.0, 0.0}, std::vector<double>{1.0, 9.0, 2.0},
                      std::vector<double>{0.2, 9.0, 1.7}, std::vector<double>{0.9, 9.0, 0.3}}) {
    auto acc = [&values](std::size_t f) -> std::optional<double> { return values.at(f); };
    auto da = classify_instance(a, acc);
    auto db = classify_instance(b, acc);
    CHECK(da.predicted == db.predicted);
    CHECK(da.features_used == db.features_used);
    CHECK(da.evaluation_cost == db.evaluation_cost);
    REQUIRE(da.trace.size() == db.trace.size());
    for (std::size_t i = 0; i < da.trace.size(); ++i) {
      CHECK(da.trace[i].feature == db.trace[i].feature);
      CHECK(da.trace[i].bin == db.trace[i].bin);
      CHECK(da.trace[i].posterior == db.trace[i].posterior); // bitwise
    }
  }
}

std::string expect_error(const std::string& text) {
  try {
    model_from_json(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST_SUITE("model_io") {

TEST_CASE("a model survives the JSON round trip bit for bit") {
  auto m = sample_model();
  auto text = model_to_json(m);
  auto back = model_from_json(text);
  check_equal(m, back);
  check_same_decisions(m, back);
  // serializing the reloaded model reproduces the same bytes
  CHECK(model_to_json(back) == text);
}

TEST_CASE("a model survives the file round trip") {
  auto m = sample_model();
  const std::string path = "model_io_roundtrip_tmp.json";
  save_model(m, path);
  auto back = load_model(path);
  std::remove(path.c_str());
  check_equal(m, back);
  check_same_decisions(m, back);
}

TEST_CASE("unsupported format versions are rejected") {
  auto j = json::parse(model_to_json(sample_model()));
  j["format_version"] = 999;
  auto msg = expect_error(j.dump());
  CHECK(msg.find("unsupported format version 999") != std::string::npos);
}

TEST_CASE("truncated or malformed input is rejected") {
  auto text = model_to_json(sample_model());
  CHECK(expect_error(text.substr(0, text.size() / 2)).find("parse error") != std::string::npos);
  CHECK(expect_error("{]").find("parse error") != std::string::npos);
  CHECK(expect_error("").find("parse error") != std::string::npos);
}

TEST_CASE("missing and mistyped fields are rejected") {
  auto base = json::parse(model_to_json(sample_model()));

  auto j = base;
  j.erase("tables");
  CHECK(expect_error(j.dump()).find("missing or mistyped field") != std::string::npos);

  j = base;
  j["priors"] = "hello";
  CHECK(expect_error(j.dump()).find("missing or mistyped field") != std::string::npos);

  j = base;
  j["structure"]["kind"] = "blob";
  CHECK(expect_error(j.dump()).find("unknown structure kind") != std::string::npos);
}

TEST_CASE("dimension inconsistencies are rejected") {
  auto base = json::parse(model_to_json(sample_model()));

  auto j = base;
  j["priors"] = {0.2, 0.3, 0.5};
  CHECK(expect_error(j.dump()).find("prior length mismatch") != std::string::npos);

  j = base;
  j["tables"][0]["p"] = {0.1};
  CHECK(expect_error(j.dump()).find("table dimensions") != std::string::npos);

  j = base;
  j["policy"]["stop_vectors"].erase(0);
  CHECK(expect_error(j.dump()).find("stop vector count mismatch") != std::string::npos);

  j = base;
  j["costs"]["stage_cost"] = {0.1};
  CHECK(expect_error(j.dump()).find("stage cost count") != std::string::npos);

  j = base;
  j["quantizer"]["features"].erase(0);
  CHECK(expect_error(j.dump()).find("feature schema") != std::string::npos);

  j = base;
  j["ordering"]["columns"] = {2, 9};
  CHECK(expect_error(j.dump()).find("unknown column") != std::string::npos);
}

TEST_CASE("unreadable paths fail loudly") {
  CHECK_THROWS_AS(load_model("definitely/not/a/real/path.json"), std::runtime_error);
}

} // TEST_SUITE
