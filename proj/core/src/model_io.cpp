#include "stopwise/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace stopwise {

namespace {

using nlohmann::json;

const char* kind_name(StructureKind k) {
  switch (k) {
    case StructureKind::Tree: return "tree";
    case StructureKind::Line: return "line";
    case StructureKind::Random: return "random";
    case StructureKind::Clique: return "clique";
  }
  throw std::logic_error("unknown structure kind");
}

StructureKind kind_from_name(const std::string& s) {
  if (s == "tree") return StructureKind::Tree;
  if (s == "line") return StructureKind::Line;
  if (s == "random") return StructureKind::Random;
  if (s == "clique") return StructureKind::Clique;
  throw std::runtime_error("model file: unknown structure kind '" + s + "'");
}

json alpha_to_json(const AlphaVector& a) {
  return json{{"w", a.w}, {"action", a.action}};
}

AlphaVector alpha_from_json(const json& j) {
  AlphaVector a;
  a.w = j.at("w").get<std::vector<double>>();
  a.action = j.at("action").get<int>();
  return a;
}

json table_to_json(const MarginalTable& t) {
  return json{{"stage", t.stage},
              {"feature", t.feature},
              {"ancestor_stage", t.ancestor_stage},
              {"bins", t.bins},
              {"ancestor_bins", t.ancestor_bins},
              {"n_classes", t.n_classes},
              {"p", t.p},
              {"class_only", t.class_only}};
}

MarginalTable table_from_json(const json& j) {
  MarginalTable t;
  t.stage = j.at("stage").get<int>();
  t.feature = j.at("feature").get<int>();
  t.ancestor_stage = j.at("ancestor_stage").get<int>();
  t.bins = j.at("bins").get<int>();
  t.ancestor_bins = j.at("ancestor_bins").get<int>();
  t.n_classes = j.at("n_classes").get<int>();
  t.p = j.at("p").get<std::vector<double>>();
  t.class_only = j.at("class_only").get<std::vector<double>>();
  if (t.p.size() != static_cast<std::size_t>(t.bins) * t.ancestor_bins * t.n_classes ||
      t.class_only.size() != static_cast<std::size_t>(t.bins) * t.n_classes)
    throw std::runtime_error("model file: marginal table dimensions are inconsistent");
  return t;
}

void check(bool ok, const char* what) {
  if (!ok) throw std::runtime_error(std::string("model file: ") + what);
}

} // namespace

std::string model_to_json(const PolicyModel& m) {
  json j;
  j["format_version"] = m.format_version;

  json qf = json::array();
  for (const auto& f : m.quantizer.features)
    qf.push_back(json{{"cuts", f.cuts}, {"degenerate", f.degenerate}});
  j["quantizer"] = json{{"bins", m.quantizer.bins}, {"features", std::move(qf)}};

  j["feature_ids"] = m.feature_ids;
  j["label_values"] = m.label_values;

  j["structure"] = json{{"kind", kind_name(m.structure.kind)},
                        {"seed", m.structure.seed},
                        {"features", m.structure.features},
                        {"parents", m.structure.parents},
                        {"children", m.structure.children},
                        {"designated_parent", m.structure.designated_parent}};

  j["ordering"] = json{{"order", m.ordering.order},
                       {"columns", m.ordering.columns},
                       {"ancestor_pos", m.ordering.ancestor_pos}};

  json tables = json::array();
  for (const MarginalTable& t : m.tables) tables.push_back(table_to_json(t));
  j["tables"] = std::move(tables);

  j["priors"] = m.priors;
  j["costs"] = json{
      {"n_classes", m.costs.n_classes}, {"q", m.costs.q}, {"stage_cost", m.costs.stage_cost}};

  json stages = json::array();
  for (const StageSet& s : m.policy.stages) {
    json buckets = json::array();
    for (const auto& [key, vecs] : s.buckets) {
      json jv = json::array();
      for (const AlphaVector& a : vecs) jv.push_back(alpha_to_json(a));
      buckets.push_back(json{{"key", key}, {"vectors", std::move(jv)}});
    }
    stages.push_back(json{{"tracked", s.tracked}, {"buckets", std::move(buckets)}});
  }
  json stops = json::array();
  for (const AlphaVector& a : m.policy.stop_vectors) stops.push_back(alpha_to_json(a));
  j["policy"] = json{{"stop_vectors", std::move(stops)}, {"stages", std::move(stages)}};

  return j.dump(1);
}

PolicyModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model file: parse error: ") + e.what());
  }
  try {
    int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw std::runtime_error("model file: unsupported format version " +
                               std::to_string(version) + " (expected " +
                               std::to_string(kModelFormatVersion) + ")");

    PolicyModel m;
    m.format_version = version;

    const json& q = j.at("quantizer");
    m.quantizer.bins = q.at("bins").get<int>();
    for (const json& f : q.at("features")) {
      Quantizer::FeatureCuts fc;
      fc.cuts = f.at("cuts").get<std::vector<double>>();
      fc.degenerate = f.at("degenerate").get<bool>();
      m.quantizer.features.push_back(std::move(fc));
    }

    m.feature_ids = j.at("feature_ids").get<std::vector<std::string>>();
    m.label_values = j.at("label_values").get<std::vector<double>>();

    const json& s = j.at("structure");
    m.structure.kind = kind_from_name(s.at("kind").get<std::string>());
    m.structure.seed = s.at("seed").get<std::uint64_t>();
    m.structure.features = s.at("features").get<std::vector<std::size_t>>();
    m.structure.parents = s.at("parents").get<std::vector<std::vector<int>>>();
    m.structure.children = s.at("children").get<std::vector<std::vector<int>>>();
    m.structure.designated_parent = s.at("designated_parent").get<std::vector<int>>();

    const json& o = j.at("ordering");
    m.ordering.order = o.at("order").get<std::vector<int>>();
    m.ordering.columns = o.at("columns").get<std::vector<std::size_t>>();
    m.ordering.ancestor_pos = o.at("ancestor_pos").get<std::vector<int>>();

    for (const json& t : j.at("tables")) m.tables.push_back(table_from_json(t));

    m.priors = j.at("priors").get<std::vector<double>>();
    const json& c = j.at("costs");
    m.costs.n_classes = c.at("n_classes").get<int>();
    m.costs.q = c.at("q").get<std::vector<double>>();
    m.costs.stage_cost = c.at("stage_cost").get<std::vector<double>>();

    const json& p = j.at("policy");
    for (const json& a : p.at("stop_vectors")) m.policy.stop_vectors.push_back(alpha_from_json(a));
    for (const json& st : p.at("stages")) {
      StageSet ss;
      ss.tracked = st.at("tracked").get<std::vector<int>>();
      for (const json& bk : st.at("buckets")) {
        std::vector<AlphaVector> vecs;
        for (const json& a : bk.at("vectors")) vecs.push_back(alpha_from_json(a));
        ss.buckets[bk.at("key").get<std::uint64_t>()] = std::move(vecs);
      }
      m.policy.stages.push_back(std::move(ss));
    }

    // Cross-field dimension checks: fail loudly rather than return a model
    // that would misbehave at inference time.
    int L = static_cast<int>(m.label_values.size());
    std::size_t horizon = m.ordering.order.size();
    check(m.costs.n_classes == L, "cost model class count mismatch");
    check(m.costs.q.size() == static_cast<std::size_t>(L) * L, "cost matrix size mismatch");
    check(m.priors.size() == static_cast<std::size_t>(L), "prior length mismatch");
    check(m.tables.size() == horizon, "table count does not match ordering");
    check(m.costs.stage_cost.size() == horizon, "stage cost count does not match ordering");
    check(m.ordering.columns.size() == horizon && m.ordering.ancestor_pos.size() == horizon,
          "ordering field lengths differ");
    check(m.policy.stages.size() == horizon + 1, "stage set count does not match horizon");
    check(m.policy.stop_vectors.size() == static_cast<std::size_t>(L),
          "stop vector count mismatch");
    check(m.quantizer.features.size() == m.feature_ids.size(),
          "quantizer does not cover the feature schema");
    for (const MarginalTable& t : m.tables)
      check(t.n_classes == L, "table class count mismatch");
    for (std::size_t col : m.ordering.columns)
      check(col < m.feature_ids.size(), "ordering references unknown column");
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: missing or mistyped field: ") + e.what());
  }
}

void save_model(const PolicyModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model to " + path);
  out << model_to_json(m) << '\n';
  if (!out) throw std::runtime_error("write failure on " + path);
}

PolicyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json(text);
}

} // namespace stopwise
