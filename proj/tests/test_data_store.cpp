#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "helpers.hpp"
#include "selfie/contrastive.hpp"
#include "selfie/dataset.hpp"
#include "selfie/numeric.hpp"
#include "selfie/synthetic.hpp"
#include "selfie/toy_lm.hpp"

using namespace selfie;

namespace {

Dataset numbered(std::size_t n, std::size_t d = 4, std::uint64_t seed = 3) {
    std::mt19937_64 gen(seed);
    std::vector<std::vector<double>> rows;
    std::vector<VectorRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(testing::unit(testing::random_vector(d, gen)));
        VectorRecord r;
        r.id = "v" + std::to_string(i);
        r.row = i;
        r.labels = {"label " + std::to_string(i % 7)};
        records.push_back(r);
    }
    return Dataset(std::make_shared<const VectorBank>(VectorBank::from_rows(rows)), records);
}

std::set<std::string> ids(const Dataset& ds) {
    std::set<std::string> out;
    for (const auto& r : ds.records()) out.insert(r.id);
    return out;
}

}  // namespace

TEST_SUITE("data-store") {

TEST_CASE("vector bank encodes and decodes exactly") {
    VectorBank b = VectorBank::from_rows({{1.0, -2.5, 0.125}, {3.0, 4.0, 5.0}});
    const auto bytes = encode_bank(b);
    CHECK(bytes.size() == 12 + 6 * 4);
    const auto back = decode_bank(bytes);
    CHECK(back.n == 2);
    CHECK(back.d == 3);
    CHECK(back.values == b.values);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_ERROR_CODE(decode_bank(bad), ErrorCode::corrupt_header);
    bad = bytes;
    bad.resize(bytes.size() - 3);
    CHECK_ERROR_CODE(decode_bank(bad), ErrorCode::truncated_tensor);
    CHECK_ERROR_CODE(b.row(2), ErrorCode::out_of_range);
}

TEST_CASE("manifest and bank round trip on disk") {
    auto ds = numbered(5);
    auto dir = testing::scratch_dir("manifest");
    const auto path = dir / "set.jsonl";
    save_dataset(ds, path);
    CHECK(std::filesystem::exists(bank_path_for(path)));
    const auto back = load_dataset(path);
    CHECK(back.records() == ds.records());
    CHECK(back.digest() == ds.digest());
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.vector(i) == ds.vector(i));
    CHECK_ERROR_CODE(load_dataset(dir / "missing.jsonl"), ErrorCode::io_failure);
}

TEST_CASE("loading rejects non-unit vectors and duplicate ids") {
    auto dir = testing::scratch_dir("manifest_bad");
    VectorRecord r{"a", 0, 0, {"x"}, Origin::synthetic, nlohmann::json::object()};
    Dataset long_vec(std::make_shared<const VectorBank>(VectorBank::from_rows({{2.0, 0.0}})), {r});
    save_dataset(long_vec, dir / "long.jsonl");
    CHECK_ERROR_CODE(load_dataset(dir / "long.jsonl"), ErrorCode::degenerate_vector);

    auto bank = std::make_shared<const VectorBank>(VectorBank::from_rows({{1.0, 0.0}}));
    CHECK_ERROR_CODE(Dataset(bank, {r, r}), ErrorCode::invalid_argument);
    VectorRecord unlabeled = r;
    unlabeled.labels.clear();
    CHECK_ERROR_CODE(Dataset(bank, {unlabeled}), ErrorCode::missing_label);
    VectorRecord far = r;
    far.row = 3;
    CHECK_ERROR_CODE(Dataset(bank, {far}), ErrorCode::out_of_range);
}

TEST_CASE("SAE ingestion normalizes rows") {
    const auto ds = ingest_sae({{3.0, 4.0}, {0.0, 5.0}}, {{0, "a"}, {1, "b"}}, 12);
    REQUIRE(ds.size() == 2);
    CHECK(ds.record(0).id == "latent-0");
    CHECK(ds.record(0).origin == Origin::sae_decoder);
    CHECK(ds.record(0).layer == 12);
    CHECK(ds.record(1).labels == std::vector<std::string>{"b"});
    CHECK(ds.vector(0)[0] == doctest::Approx(0.6));
    CHECK(ds.vector(0)[1] == doctest::Approx(0.8));
    CHECK(ds.vector(1)[0] == doctest::Approx(0.0));
    CHECK(ds.vector(1)[1] == doctest::Approx(1.0));
}

TEST_CASE("SAE ingestion rejects zero rows and unlabeled rows by id") {
    try {
        ingest_sae({{1.0, 0.0}, {0.0, 0.0}}, {{0, "a"}, {1, "b"}}, 0);
        FAIL("expected degenerate_vector");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_vector);
        CHECK(std::string(e.what()).find("latent-1") != std::string::npos);
    }
    try {
        ingest_sae({{1.0, 0.0}, {0.0, 1.0}}, {{0, "a"}}, 0);
        FAIL("expected missing_label");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_label);
        CHECK(std::string(e.what()).find("latent-1") != std::string::npos);
    }
}

TEST_CASE("label formatting appends quote and end-of-turn without dedup") {
    CHECK(format_label_for_training("event handling") == "event handling\"<|eot_id|>");
    CHECK(format_label_for_training("x\"") == "x\"\"<|eot_id|>");
    CHECK_ERROR_CODE(format_label_for_training(""), ErrorCode::invalid_argument);
}

TEST_CASE("uppercasing is idempotent and keeps ids") {
    const auto ds = ingest_sae({{1.0, 0.0}, {0.0, 1.0}}, {{0, "Mixed case"}, {1, "b-2"}}, 0);
    const auto up = uppercase_labels(ds);
    CHECK(up.record(0).labels == std::vector<std::string>{"MIXED CASE"});
    CHECK(up.record(1).labels == std::vector<std::string>{"B-2"});
    CHECK(uppercase_labels(up).records() == up.records());
    CHECK(ids(up) == ids(ds));
}

TEST_CASE("paraphrase import and label limiting") {
    const auto ds = ingest_sae({{1.0, 0.0}, {0.0, 1.0}}, {{0, "a"}, {1, "b"}}, 0);
    std::map<std::string, std::vector<std::string>> extra{{"latent-0", {"p1", "p2", "p3", "p4", "p5"}}};
    const auto more = import_paraphrases(ds, extra);
    CHECK(more.record(0).labels.size() == 6);
    CHECK(more.record(0).labels.front() == "a");
    CHECK(more.record(1).labels.size() == 1);
    CHECK_ERROR_CODE(import_paraphrases(ds, {{"latent-9", {"q"}}}), ErrorCode::unknown_id);

    const auto one = limit_labels(more, 1);
    CHECK(one.record(0).labels == std::vector<std::string>{"a"});
    CHECK(ids(one) == ids(more));
    CHECK_ERROR_CODE(limit_labels(more, 0), ErrorCode::invalid_argument);

    const auto pairs = flatten_pairs(more);
    CHECK(pairs.size() == 7);
}

TEST_CASE("subsampling is sized, seeded and nested") {
    const auto ds = numbered(100);
    CHECK(subsample(ds, 0.5, 9).size() == 50);
    CHECK(subsample(ds, 1.0, 9).size() == 100);
    CHECK(ids(subsample(ds, 0.3, 9)) == ids(subsample(ds, 0.3, 9)));
    const auto small = ids(subsample(ds, 0.1, 9));
    const auto mid = ids(subsample(ds, 0.25, 9));
    const auto big = ids(subsample(ds, 0.5, 9));
    CHECK(std::includes(mid.begin(), mid.end(), small.begin(), small.end()));
    CHECK(std::includes(big.begin(), big.end(), mid.begin(), mid.end()));
    CHECK(subsample(ds, 0.5, 9).shared_bank() == ds.shared_bank());

    CHECK_ERROR_CODE(subsample(numbered(1), 0.1, 0), ErrorCode::empty_input);
    CHECK_ERROR_CODE(subsample(ds, 0.0, 0), ErrorCode::invalid_argument);
    CHECK_ERROR_CODE(subsample(ds, 1.5, 0), ErrorCode::invalid_argument);
}

TEST_CASE("splits partition by id") {
    const auto ds = numbered(50);
    const auto s = split_dataset(ds, {0.8, 0.1, 0.1, 42});
    CHECK(s.train.size() == 40);
    CHECK(s.val.size() == 5);
    CHECK(s.test.size() == 5);
    std::set<std::string> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
        for (const auto& id : ids(*part)) CHECK(all.insert(id).second);
    }
    CHECK(all == ids(ds));
    CHECK_ERROR_CODE(split_dataset(ds, {0.5, 0.1, 0.1, 0}), ErrorCode::invalid_argument);
}

TEST_CASE("split disjointness holds across seeds and sizes") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (std::size_t n : {3, 10, 37}) {
            const auto s = split_dataset(numbered(n, 3, seed), {0.6, 0.2, 0.2, seed});
            const auto a = ids(s.train), b = ids(s.val), c = ids(s.test);
            CHECK(a.size() + b.size() + c.size() == n);
            for (const auto& id : a) CHECK((b.count(id) == 0 && c.count(id) == 0));
            for (const auto& id : b) CHECK(c.count(id) == 0);
        }
    }
}

TEST_CASE("PCA on rank-2 data reaches 1 at component 2") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto a = testing::unit(testing::random_vector(8, gen));
    const auto b = testing::unit(testing::random_vector(8, gen));
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 200; ++i) {
        const double x = n(gen), y = n(gen);
        std::vector<double> v(8);
        for (std::size_t c = 0; c < 8; ++c) v[c] = x * a[c] + y * b[c];
        rows.push_back(v);
    }
    const auto cum = pca_cumulative_variance(rows);
    REQUIRE(cum.size() == 8);
    CHECK(cum[0] < 1.0 - 1e-6);
    CHECK(cum[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cum.back() == 1.0);
    for (std::size_t i = 1; i < cum.size(); ++i) CHECK(cum[i] >= cum[i - 1]);
}

TEST_CASE("PCA on isotropic data spreads variance evenly") {
    std::mt19937_64 gen(11);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 4096; ++i) rows.push_back(testing::random_vector(16, gen));
    const auto cum = pca_cumulative_variance(rows);
    double prev = 0.0;
    for (double c : cum) {
        CHECK(c - prev == doctest::Approx(1.0 / 16).epsilon(0.2));
        prev = c;
    }
}

TEST_CASE("PCA edge cases") {
    const std::vector<double> v{0.6, 0.8, 0.0};
    const auto cum = pca_cumulative_variance({v, {-0.6, -0.8, 0.0}});
    CHECK(cum[0] == doctest::Approx(1.0));
    CHECK_ERROR_CODE(pca_cumulative_variance({v, v, v}), ErrorCode::degenerate_vector);
    CHECK_ERROR_CODE(pca_cumulative_variance({v}), ErrorCode::empty_input);
}

TEST_CASE("contrastive extraction of two topics gives opposite unit vectors") {
    ToyLM lm({ToyKind::echo, 4, 4, 8, 6, 1.0, {"t0", "t1", "t2", "t3"}});
    std::vector<Topic> topics{{"One", "t1", {"first"}}, {"Two", "t2", {"second"}}};
    const auto res = extract_contrastive(lm, topics, {2});
    REQUIRE(res.dataset.size() == 2);
    const auto e1 = lm.embedding_row(1), e2 = lm.embedding_row(2);
    std::vector<double> expect(8);
    for (std::size_t c = 0; c < 8; ++c) expect[c] = (e1[c] - e2[c]) / 2.0;
    expect = testing::unit(expect);
    const auto v0 = res.dataset.vector(0), v1 = res.dataset.vector(1);
    for (std::size_t c = 0; c < 8; ++c) {
        CHECK(v0[c] == doctest::Approx(expect[c]).epsilon(1e-6));
        CHECK(v1[c] == doctest::Approx(-expect[c]).epsilon(1e-6));
    }
    CHECK(res.dataset.record(0).id == "topic-0@L2");
    CHECK(res.dataset.record(0).origin == Origin::contrastive_topic);
    CHECK(res.dataset.record(1).labels == std::vector<std::string>{"second"});
    const auto& mean = res.layer_means.at(2);
    for (std::size_t c = 0; c < 8; ++c) CHECK(mean[c] == doctest::Approx((e1[c] + e2[c]) / 2.0));
}

TEST_CASE("contrastive extraction pools topics x layers and rejects degenerate input") {
    ToyLM lm({ToyKind::echo, 4, 4, 8, 8, 1.0, {"t0", "t1", "t2", "t3"}});
    std::vector<Topic> topics{{"A", "t0 t1", {"a"}}, {"B", "t2", {"b"}}, {"C", "t3 t0", {"c"}}};
    const auto layers = middle_half_layers(lm.layer_count());
    CHECK(layers == std::vector<int>{2, 3, 4, 5});
    const auto res = extract_contrastive(lm, topics, layers);
    CHECK(res.dataset.size() == topics.size() * layers.size());
    for (std::size_t i = 0; i < res.dataset.size(); ++i) CHECK(l2_norm(res.dataset.vector(i)) == doctest::Approx(1.0));

    std::vector<Topic> same{{"A", "t1", {"a"}}, {"B", "t1", {"b"}}};
    CHECK_ERROR_CODE(extract_contrastive(lm, same, {1}), ErrorCode::degenerate_vector);
    CHECK_ERROR_CODE(extract_contrastive(lm, {topics[0]}, {1}), ErrorCode::empty_input);
}

TEST_CASE("topic files round trip") {
    auto dir = testing::scratch_dir("topics");
    std::vector<Topic> topics{{"Paris", "Tell me about Paris", {"France capital", "city"}}};
    save_topics(topics, dir / "t.jsonl");
    const auto back = load_topics(dir / "t.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].title == "Paris");
    CHECK(back[0].labels == topics[0].labels);
}

TEST_CASE("pooling keeps layers and rows") {
    auto a = numbered(3);
    auto b = numbered(2, 4, 8);
    std::vector<VectorRecord> rb = b.records();
    for (auto& r : rb) r.id += "-b";
    b = b.with_records(rb);
    const auto pooled = pool_datasets({a, b});
    CHECK(pooled.size() == 5);
    CHECK(pooled.vector(3) == b.vector(0));
    CHECK_ERROR_CODE(pool_datasets({}), ErrorCode::empty_input);
    CHECK_ERROR_CODE(pool_datasets({a, numbered(2, 5)}), ErrorCode::dimension_mismatch);
}

TEST_CASE("random rotations are orthogonal with determinant +1") {
    const std::size_t d = 6;
    const auto r = random_rotation(d, 17);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += r[i * d + k] * r[j * d + k];
            CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0));
        }
    }
    CHECK(random_rotation(d, 17) == r);
}

TEST_CASE("planted rotation task is unit norm and deterministic") {
    std::vector<std::string> names{"w0", "w1", "w2", "w3"};
    const auto t = make_planted_rotation(8, names, 64, 0.05, 2);
    CHECK(t.data.size() == 64);
    CHECK(t.targets.size() == 64);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        CHECK(l2_norm(t.data.vector(i)) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(t.data.record(i).labels.front() == names[static_cast<std::size_t>(t.targets[i])]);
    }
    CHECK(make_planted_rotation(8, names, 64, 0.05, 2).data.digest() == t.data.digest());
    CHECK_ERROR_CODE(make_planted_rotation(2, names, 4, 0.0, 0), ErrorCode::invalid_argument);
}

TEST_CASE("teacher task lives in the requested subspace") {
    TeacherTaskSpec spec{16, 3, 200, 0.0, 4};
    const auto ds = make_teacher_task(spec, {"a", "b", "c"});
    CHECK(ds.size() == 200);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) rows.push_back(ds.vector(i));
    const auto cum = pca_cumulative_variance(rows);
    CHECK(cum[2] == doctest::Approx(1.0).epsilon(1e-4));
}

}  // TEST_SUITE
