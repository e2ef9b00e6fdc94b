#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "medsel/errors.hpp"
#include "medsel/manifest.hpp"
#include "medsel/metrics.hpp"
#include "medsel/predictor.hpp"
#include "medsel/selectors.hpp"
#include "medsel/tasks.hpp"
#include "test_support.hpp"

using namespace medsel;

namespace {

SynthConfig small_synth() {
  SynthConfig c;
  c.dim = 8;
  c.n_conditions = 4;
  c.positives_per_condition = 300;
  c.no_finding_items = 1200;
  return c;
}

ItemStore make_store(const SynthConfig& c, std::uint64_t seed) {
  SeededRng rng(seed);
  return generate_synthetic_dataset(c, rng);
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
}

}  // namespace

TEST_CASE("generator output is deterministic and byte-identical on disk") {
  const auto dir = testing::temp_dir("gen_det");
  const ItemStore a = make_store(small_synth(), 5), b = make_store(small_synth(), 5);
  save_embedding_file(a, dir / "a.selx");
  save_embedding_file(b, dir / "b.selx");
  CHECK(testing::read_file(dir / "a.selx") == testing::read_file(dir / "b.selx"));
  const ItemStore c = make_store(small_synth(), 6);
  save_embedding_file(c, dir / "c.selx");
  CHECK(testing::read_file(dir / "a.selx") != testing::read_file(dir / "c.selx"));
}

TEST_CASE("generator validates its configuration") {
  SynthConfig c = small_synth();
  c.dim = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_synth();
  c.cluster_sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_synth();
  c.corruption_sigma = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_synth();
  c.corruption_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("generated items have the declared shape and clinical ranges") {
  const SynthConfig c = small_synth();
  const ItemStore s = make_store(c, 1);
  CHECK(s.size() == c.n_conditions * c.positives_per_condition + c.no_finding_items);
  std::size_t frontal = 0;
  for (const auto& it : s.items()) {
    CHECK(it.embedding.size() == c.dim);
    CHECK(it.clinical.age >= 0.0);
    CHECK(it.clinical.age <= 120.0);
    if (it.label == 1) CHECK(it.condition_id < c.n_conditions);
    if (it.label == 0) CHECK(it.condition_id == kNoFinding);
    frontal += it.clinical.laterality;
  }
  // Expected frontal share: 0.5 * 0.9 + 0.5 * 0.3 = 0.6
  const double share = static_cast<double>(frontal) / static_cast<double>(s.size());
  CHECK(std::abs(share - 0.6) < 4.0 * std::sqrt(0.24 / static_cast<double>(s.size())));
}

TEST_CASE("split invariants over a thousand tasks") {
  const ItemStore store = make_store(small_synth(), 2);
  SplitConfig sc;
  sc.train_tasks = 600;
  sc.val_tasks = 200;
  sc.test_tasks = 200;
  sc.pool_size = 20;
  sc.query_size = 11;
  sc.holdout_conditions = {3};
  SeededRng rng(3);
  const SplitManifest m = build_split(store, sc, rng);
  REQUIRE(m.train.size() == 600);
  REQUIRE(m.val.size() == 200);
  REQUIRE(m.test.size() == 200);

  std::map<std::uint64_t, int> item_split;
  std::set<std::uint64_t> task_ids;
  std::size_t holdout_tasks = 0;
  int split_index = 0;
  for (const auto* tasks : {&m.train, &m.val, &m.test}) {
    for (const TaskSpec& t : *tasks) {
      CHECK(task_ids.insert(t.task_id).second);
      CHECK(t.pool_ids.size() == 20);
      CHECK(t.query_ids.size() == 11);
      std::unordered_set<std::uint64_t> ids(t.pool_ids.begin(), t.pool_ids.end());
      for (auto q : t.query_ids) CHECK(ids.insert(q).second);  // pool and query disjoint
      std::size_t pool_pos = 0, query_pos = 0;
      for (auto id : t.pool_ids) {
        const auto& it = store.find(id);
        pool_pos += it.label;
        if (it.label) CHECK(it.condition_id == t.condition);
      }
      for (auto id : t.query_ids) {
        const auto& it = store.find(id);
        query_pos += it.label;
        if (it.label) CHECK(it.condition_id == t.condition);
      }
      CHECK(pool_pos == 10);
      CHECK(query_pos == 6);  // ceil(0.5 * 11)
      for (auto id : ids) {
        const auto [pos, inserted] = item_split.emplace(id, split_index);
        if (!inserted) CHECK(pos->second == split_index);  // no item crosses splits
      }
      if (split_index < 2) {
        CHECK_FALSE(t.holdout);
        CHECK(t.condition != 3);
      }
      if (t.holdout) {
        ++holdout_tasks;
        CHECK(t.condition == 3);
      }
    }
    ++split_index;
  }
  CHECK(holdout_tasks == 100);
}

TEST_CASE("holdout counts and balance examples") {
  const ItemStore store = make_store(small_synth(), 4);
  SplitConfig sc;
  sc.train_tasks = 100;
  sc.val_tasks = 20;
  sc.test_tasks = 40;
  sc.pool_size = 30;
  sc.query_size = 10;
  sc.holdout_conditions = {3};
  SeededRng rng(1);
  const SplitManifest m = build_split(store, sc, rng);
  std::size_t c3 = 0;
  for (const auto& t : m.test) c3 += t.condition == 3;
  CHECK(c3 == 20);
  for (const auto* tasks : {&m.train, &m.val})
    for (const auto& t : *tasks) CHECK(t.condition != 3);

  CHECK(positives_for(100, 0.5) == 50);
  CHECK(positives_for(11, 0.5) == 6);
  CHECK(positives_for(10, 0.3) == 3);

  SeededRng again(1);
  CHECK(build_split(store, sc, again) == m);
}

TEST_CASE("insufficient items name the deficient condition") {
  SynthConfig c = small_synth();
  c.positives_per_condition = 40;
  const ItemStore store = make_store(c, 1);
  SplitConfig sc;
  sc.train_tasks = 2;
  sc.val_tasks = 1;
  sc.test_tasks = 2;
  sc.pool_size = 100;
  sc.query_size = 100;
  sc.holdout_conditions = {};
  SeededRng rng(1);
  try {
    build_split(store, sc, rng);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("condition 0") != std::string::npos);
  }
}

TEST_CASE("embedding file round trip") {
  const auto dir = testing::temp_dir("roundtrip");
  const ItemStore a = make_store(small_synth(), 8);
  save_embedding_file(a, dir / "x.selx");
  const ItemStore b = load_embedding_file(dir / "x.selx");
  REQUIRE(b.size() == a.size());
  CHECK(b.dim() == a.dim());
  CHECK(b.n_conditions() == a.n_conditions());
  for (const auto& it : a.items()) {
    const auto& jt = b.find(it.item_id);
    CHECK(jt.label == it.label);
    CHECK(jt.condition_id == it.condition_id);
    CHECK(jt.clinical == it.clinical);
    CHECK(jt.embedding == it.embedding);  // generator rounds through f32, so this is bit-exact
  }
}

TEST_CASE("embedding file validation errors") {
  const auto dir = testing::temp_dir("badfiles");
  auto header = [](std::uint32_t d, std::uint32_t n) {
    std::string s = "SELX1";
    put_u32(s, d);
    put_u32(s, n);
    put_u32(s, 1);
    return s;
  };
  auto record = [](std::uint64_t id, std::size_t floats, float fill, std::size_t nan_at = SIZE_MAX) {
    std::string s;
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>(id >> (8 * i)));
    s.push_back(0);  // label
    const float age = 40.0f;
    s.append(reinterpret_cast<const char*>(&age), 4);
    s.push_back(1);
    s.push_back(1);
    put_u32(s, 0xFFFFFFFFu);
    for (std::size_t j = 0; j < floats; ++j) {
      const float v = j == nan_at ? NAN : fill;
      s.append(reinterpret_cast<const char*>(&v), 4);
    }
    return s;
  };
  auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream(dir / name, std::ios::binary) << bytes;
    return dir / name;
  };
  auto message = [](const std::filesystem::path& p) {
    try {
      load_embedding_file(p);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };

  const auto nan_file = write("nan.selx", header(4, 3) + record(1, 4, 1.f) + record(2, 4, 1.f, 2) + record(3, 4, 1.f));
  CHECK(message(nan_file).find("item 1") != std::string::npos);

  const auto short_file = write("short.selx", header(512, 1) + record(1, 511, 0.5f));
  CHECK(message(short_file).find("truncated at item 0") != std::string::npos);

  std::string bad = header(4, 1) + record(1, 4, 1.f);
  bad[4] = '2';
  CHECK(message(write("magic.selx", bad)).find("bad magic") != std::string::npos);

  CHECK(message(write("trailing.selx", header(4, 1) + record(1, 5, 1.f))).find("trailing") != std::string::npos);
  CHECK(message(write("ok.selx", header(4, 1) + record(1, 4, 1.f))) == "no error");
}

TEST_CASE("manifest round trip") {
  const auto dir = testing::temp_dir("manifest");
  const ItemStore store = make_store(small_synth(), 4);
  SplitConfig sc;
  sc.train_tasks = 5;
  sc.val_tasks = 2;
  sc.test_tasks = 4;
  sc.pool_size = 12;
  sc.query_size = 6;
  sc.holdout_conditions = {2, 3};
  SeededRng rng(9);
  const SplitManifest m = build_split(store, sc, rng);
  write_manifest(dir / "t.jsonl", m.test, nlohmann::json{{"note", "x"}});
  const ManifestFile back = read_manifest(dir / "t.jsonl");
  CHECK(back.header.at("note") == "x");
  CHECK(back.tasks == m.test);
}

TEST_CASE("tasks hide pool labels behind the oracle") {
  const ItemStore store = make_store(small_synth(), 4);
  SplitConfig sc;
  sc.train_tasks = 1;
  sc.val_tasks = 0;
  sc.test_tasks = 0;
  sc.pool_size = 10;
  sc.query_size = 4;
  sc.holdout_conditions = {};
  SeededRng rng(9);
  const SplitManifest m = build_split(store, sc, rng);
  const Task task(store, m.train[0]);
  LabelingOracle oracle(task);
  const std::vector<std::size_t> pick{0, 3, 7};
  const auto labels = oracle.reveal(pick);
  CHECK(oracle.reveals() == 3);
  for (std::size_t i = 0; i < pick.size(); ++i) CHECK(labels[i] == store.find(task.pool_item_id(pick[i])).label);

  TaskSpec dup = m.train[0];
  dup.pool_ids[1] = dup.pool_ids[0];
  CHECK_THROWS_AS(Task(store, dup), DataError);
  TaskSpec overlap = m.train[0];
  overlap.query_ids[0] = overlap.pool_ids[0];
  CHECK_THROWS_AS(Task(store, overlap), DataError);
  TaskSpec unknown = m.train[0];
  unknown.pool_ids[0] = 999999999;
  CHECK_THROWS_AS(Task(store, unknown), DataError);
}

TEST_CASE("no leaked signal without corruption or class separation") {
  SynthConfig c = small_synth();
  c.corruption_fraction = 0.0;
  c.condition_offset_norm = 0.0;  // every class mean equals the shared vector
  const ItemStore store = make_store(c, 12);
  SplitConfig sc;
  sc.train_tasks = 300;
  sc.val_tasks = 0;
  sc.test_tasks = 0;
  sc.pool_size = 40;
  sc.query_size = 40;
  sc.holdout_conditions = {};
  sc.train_fraction = 1.0;
  sc.val_fraction = 0.0;
  SeededRng rng(5);
  const SplitManifest m = build_split(store, sc, rng);
  double sum = 0.0;
  for (const auto& spec : m.train) {
    const Task task(store, spec);
    SeededRng r(derive_seed(77, {spec.task_id}));
    const auto out = random_select(task.pool(), 10, r);
    LabelingOracle oracle(task);
    const auto labels = oracle.reveal(out.indices);
    const auto protos = fit(make_support(task.pool().embeddings, out.indices, labels));
    sum += auroc(score_query(protos, task.query_embeddings(), task.query_labels()));
  }
  CHECK(std::abs(sum / m.train.size() - 0.5) < 0.03);
}
