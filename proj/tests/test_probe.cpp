#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "selfie/probe.hpp"
#include "selfie/text.hpp"

using namespace selfie;

namespace {

ToyLM probe_lm() { return ToyLM({ToyKind::echo, 5, 6, 12, 4, 1.0, testing::word_list(6)}); }

HeatmapGrid grid_with(std::size_t layers, std::size_t positions, std::vector<std::size_t> hits) {
    HeatmapGrid g;
    for (std::size_t l = 0; l < layers; ++l) g.layers.push_back(l);
    for (std::size_t p = 0; p < positions; ++p) g.positions.push_back(p);
    g.hits = std::move(hits);
    return g;
}

}  // namespace

TEST_SUITE("probe-kit") {

TEST_CASE("alias matching is case- and whitespace-insensitive") {
    const std::vector<std::string> aliases{"Plato"};
    CHECK(contains_any_alias("...Plato was born...", aliases));
    CHECK(contains_any_alias("  the  philosopher PLATO  ", aliases));
    CHECK(contains_alias("New   York city", "new york"));
    CHECK_FALSE(contains_alias("Pla<|eot_id|>to", "Plato"));
    CHECK_FALSE(contains_any_alias("Socrates", aliases));
}

TEST_CASE("bridge case files round trip") {
    const auto dir = testing::scratch_dir("bridge");
    std::vector<BridgeCase> cases{{"The author of The Republic was born in", {"Plato", "Platon"}, "city", "Athens"}};
    save_bridge_cases(cases, dir / "c.jsonl");
    const auto back = load_bridge_cases(dir / "c.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].bridge_aliases == cases[0].bridge_aliases);
    CHECK(back[0].expected_answer == "Athens");
    CHECK_ERROR_CODE(load_bridge_cases(dir / "none.jsonl"), ErrorCode::io_failure);
}

TEST_CASE("toy bridge heatmap finds the dominant token") {
    const auto lm = probe_lm();
    const auto rendered = render_template(lm, {});
    const auto adapter = testing::embedding_to_readout(lm, 20.0);
    const BridgeCase c{"w1 w2 w2 w2", {"w2"}, "thing", ""};
    BridgeProbeConfig cfg;
    cfg.cycle_window = false;
    cfg.max_tokens = 3;
    cfg.seed = 4;
    const auto g = bridge_heatmap(adapter, lm, rendered, c, {0, 2}, {0, 1, 2, 3}, ScaleGrid{}, cfg);
    CHECK(g.samples_per_cell == 10);
    CHECK(g.temperature == 0.7);
    for (std::size_t li = 0; li < 2; ++li) {
        CHECK(g.rate(li, 0) == 0.0);
        CHECK(g.rate(li, 2) == 1.0);
        CHECK(g.rate(li, 3) == 1.0);
    }
    CHECK(g.any_hit());
    CHECK(g.max_over_layers()[3] == 1.0);

    const auto again = bridge_heatmap(adapter, lm, rendered, c, {0, 2}, {0, 1, 2, 3}, ScaleGrid{}, cfg);
    CHECK(again.hits == g.hits);
    const auto back = HeatmapGrid::from_json(g.to_json());
    CHECK(back.hits == g.hits);
    CHECK(back.layers == g.layers);

    cfg.samples = 0;
    CHECK_ERROR_CODE(bridge_heatmap(adapter, lm, rendered, c, {0}, {0}, ScaleGrid{}, cfg), ErrorCode::invalid_argument);
    cfg.samples = 1;
    CHECK_ERROR_CODE(bridge_heatmap(adapter, lm, rendered, c, {0}, {4}, ScaleGrid{}, cfg), ErrorCode::out_of_range);
    CHECK_ERROR_CODE(bridge_heatmap(adapter, lm, rendered, c, {9}, {0}, ScaleGrid{}, cfg), ErrorCode::out_of_range);
}

TEST_CASE("position-zero alignment") {
    CHECK(align_position_zero({{"trained", {0, 0, 0.0005, 0.002, 0.05}}}) == 3u);
    CHECK(align_position_zero({{"trained", {0, 0, 0, 0, 0.5}}, {"untrained", {0, 0, 0.3, 0, 0}}}) == 2u);
    CHECK_FALSE(align_position_zero({{"trained", {0, 0, 0}}}).has_value());
    CHECK_FALSE(align_position_zero({{"trained", {0.001}}}).has_value());
}

TEST_CASE("alignment matches brute force on random series") {
    std::mt19937_64 gen(77);
    std::uniform_int_distribution<int> pick(0, 3);
    const double levels[] = {0.0, 0.0005, 0.001, 0.002};
    for (int t = 0; t < 300; ++t) {
        std::map<std::string, std::vector<double>> series;
        const int methods = 1 + t % 3;
        for (int m = 0; m < methods; ++m) {
            std::vector<double> v(1 + static_cast<std::size_t>(t % 7));
            for (auto& x : v) x = levels[pick(gen)];
            series["m" + std::to_string(m)] = v;
        }
        CHECK(align_position_zero(series) == oracle::first_crossing(series, kDetectionThreshold));
    }
}

TEST_CASE("detection aggregation and contingency") {
    const auto hit = grid_with(1, 2, {0, 3});
    const auto miss = grid_with(1, 2, {0, 0});
    const auto m = aggregate_method({hit, miss});
    CHECK(m.prompts_detected == 1);
    CHECK(m.detection_rate == 0.5);
    CHECK(m.mean_grid == std::vector<double>{0.0, 0.15});

    const auto agg = aggregate_detection({hit, hit, miss, miss}, {hit, miss, hit, miss});
    CHECK(agg.contingency.both == 1);
    CHECK(agg.contingency.trained_only == 1);
    CHECK(agg.contingency.untrained_only == 1);
    CHECK(agg.contingency.neither == 1);
    CHECK(agg.to_json()["contingency"]["untrained_only"] == 1);

    CHECK_ERROR_CODE(aggregate_method({hit, grid_with(2, 2, {0, 0, 0, 0})}), ErrorCode::dimension_mismatch);
    CHECK_ERROR_CODE(aggregate_detection({hit}, {hit, hit}), ErrorCode::dimension_mismatch);

    std::mt19937_64 gen(8);
    std::bernoulli_distribution b(0.4);
    for (int t = 0; t < 50; ++t) {
        std::vector<HeatmapGrid> tr, un;
        std::vector<bool> tb, ub;
        for (int i = 0; i < 1 + t % 9; ++i) {
            tb.push_back(b(gen));
            ub.push_back(b(gen));
            tr.push_back(tb.back() ? hit : miss);
            un.push_back(ub.back() ? hit : miss);
        }
        const auto a = aggregate_detection(tr, un);
        const auto ref = oracle::contingency(tb, ub);
        CHECK(a.contingency.both == ref[0]);
        CHECK(a.contingency.trained_only == ref[1]);
        CHECK(a.contingency.untrained_only == ref[2]);
        CHECK(a.contingency.neither == ref[3]);
        CHECK(ref[0] + ref[1] + ref[2] + ref[3] == tr.size());
    }
}

TEST_CASE("zero-vector probe injects the bias exactly") {
    const auto lm = probe_lm();
    const auto rendered = render_template(lm, {});
    std::mt19937_64 gen(3);
    std::vector<float> bias(12);
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (auto& x : bias) x = n(gen);

    const auto sa = Adapter::scalar_affine(3.0f, bias);
    const auto r = zero_vector_probe(sa, lm, rendered, SamplingConfig::nucleus(0.7, 1.0), 3, 2, 4);
    for (std::size_t i = 0; i < bias.size(); ++i) CHECK(r.injected[i] == static_cast<double>(bias[i]));
    CHECK(r.sampled.size() == 3);
    CHECK(r.greedy.tokens.size() == 4);

    const auto so = Adapter::create(AdapterKind::scale_only, lm.dims());
    for (double x : zero_vector_probe(so, lm, rendered, {}, 0, 0, 2).injected) CHECK(x == 0.0);

    auto fr = Adapter::create(AdapterKind::full_rank, lm.dims());
    auto p = fr.mutable_parameters();
    for (std::size_t i = 0; i < 12; ++i) p[fr.layout().bias_offset + i] = bias[i];
    const auto fz = zero_vector_probe(fr, lm, rendered, {}, 0, 0, 2);
    for (std::size_t i = 0; i < bias.size(); ++i) CHECK(fz.injected[i] == static_cast<double>(bias[i]));
    CHECK(fz.injected == fr.apply(std::vector<double>(12, 0.0)));
}

TEST_CASE("novel-prompt readout") {
    const auto lm = probe_lm();
    const auto rendered = render_template(lm, {});
    const auto adapter = testing::embedding_to_readout(lm, 20.0);
    NovelPromptConfig cfg;
    cfg.seed = 6;
    cfg.max_tokens = 4;
    const auto out = describe_novel_prompt(adapter, lm, rendered, "w3", {}, cfg);
    REQUIRE(out.size() == 5);
    for (const auto& rec : out) {
        for (auto t : rec.tokens) CHECK(t == 3);
    }
    const auto again = describe_novel_prompt(adapter, lm, rendered, "w3", {}, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].text == out[i].text);

    cfg.subtract_mean = true;
    CHECK_ERROR_CODE(describe_novel_prompt(adapter, lm, rendered, "w3", {}, cfg), ErrorCode::invalid_argument);
    std::map<int, std::vector<double>> means{{0, std::vector<double>(12, 0.0)}};
    CHECK(describe_novel_prompt(adapter, lm, rendered, "w3", means, cfg).size() == 5);

    const auto dir = testing::scratch_dir("means");
    save_layer_means(means, dir / "m.json");
    CHECK(load_layer_means(dir / "m.json") == means);
}

TEST_CASE("two-hop filtering keeps records answered immediately") {
    // With no injection the echo backend's logits are flat, so greedy
    // decoding always emits the lowest word id.
    const auto lm = probe_lm();
    CHECK(immediate_answer(lm, "city", "The capital of France is", 2) == "w0 w0");
    CHECK(immediate_answer_prompt("city", "X is").find("name of a city") != std::string::npos);
    const std::vector<TwoHopRecord> records{
        {"first", "person", {"w0"}, "second", "city", {"w0"}},
        {"first", "person", {"w5"}, "second", "city", {"w0"}},
        {"first", "person", {"w0"}, "second", "city", {"w4"}},
    };
    const auto kept = filter_two_hop(lm, records, 2);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].bridge_aliases == std::vector<std::string>{"w0"});
    CHECK_ERROR_CODE(filter_two_hop(lm, {{"a", "b", {}, "c", "d", {"x"}}}), ErrorCode::missing_label);
}

}  // TEST_SUITE
