#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "selfie/checkpoint.hpp"
#include "selfie/optimizer.hpp"
#include "selfie/train.hpp"

using namespace selfie;

namespace {

ToyLM words_lm(std::size_t v = 8, std::size_t d = 8) {
    auto words = testing::word_list(v - 2);
    words.push_back("\"");
    words.push_back("<|eot_id|>");
    return ToyLM({ToyKind::echo, 7, v, d, 2, 4.0, words});
}

TrainConfig small_config() {
    TrainConfig c;
    c.learning_rate = 0.05;
    c.batch_size = 8;
    c.epochs = 3;
    c.warmup_steps = 2;
    c.validations_per_epoch = 2;
    c.seed = 5;
    return c;
}

struct NanLM : testing::DelegatingLM {
    using DelegatingLM::DelegatingLM;
    LossAndGradient teacher_forced_loss(std::span<const TokenId> p, const InjectionSet& inj,
                                        std::span<const TokenId> l) const override {
        auto r = inner_.teacher_forced_loss(p, inj, l);
        r.loss = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
};

struct DriftingLM : testing::DelegatingLM {
    using DelegatingLM::DelegatingLM;
    mutable std::uint64_t calls = 0;
    std::uint64_t weights_checksum() const override { return inner_.weights_checksum() + calls++; }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("train-engine") {

TEST_CASE("AdamW matches a hand-rolled reference, with alpha exempt from decay") {
    const std::vector<double> g1{0.5, -1.0, 2.0}, g2{-0.25, 0.5, 0.0};
    std::vector<float> p{1.0f, 2.0f, -3.0f};
    AdamW opt(3, {false, true, true}, {0.9, 0.999, 1e-8, 0.1});
    opt.step(p, g1, 0.01);
    opt.step(p, g2, 0.02);
    CHECK(opt.steps_taken() == 2);

    std::vector<double> ref{1.0, 2.0, -3.0}, m(3, 0.0), v(3, 0.0);
    const std::vector<bool> decays{false, true, true};
    const std::vector<std::vector<double>> gs{g1, g2};
    const double lrs[] = {0.01, 0.02};
    for (int t = 1; t <= 2; ++t) {
        for (std::size_t i = 0; i < 3; ++i) {
            const double g = gs[static_cast<std::size_t>(t - 1)][i];
            const double lr = lrs[t - 1];
            if (decays[i]) ref[i] -= lr * 0.1 * ref[i];
            m[i] = 0.9 * m[i] + 0.1 * g;
            v[i] = 0.999 * v[i] + 0.001 * g * g;
            const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
            ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-6));
    CHECK_ERROR_CODE(AdamW(2, {true}), ErrorCode::dimension_mismatch);
}

TEST_CASE("cosine schedule warms up linearly and ends at the floor") {
    const std::size_t total = 100, warm = 10;
    CHECK(cosine_lr(0, total, warm, 1.0) == doctest::Approx(1.0 / 11));
    CHECK(cosine_lr(9, total, warm, 1.0) == doctest::Approx(10.0 / 11));
    CHECK(cosine_lr(10, total, warm, 1.0) == doctest::Approx(1.0));
    CHECK(cosine_lr(total - 1, total, warm, 1.0) == 0.0);
    CHECK(cosine_lr(total - 1, total, warm, 1.0, 0.1) == 0.1);
    double prev = 2.0;
    for (std::size_t s = warm; s < total; ++s) {
        const double lr = cosine_lr(s, total, warm, 1.0);
        CHECK(lr <= prev);
        prev = lr;
    }
}

TEST_CASE("global-norm clipping") {
    std::vector<double> g{3.0, 4.0};
    CHECK(clip_global_norm(g, 0.5) == doctest::Approx(5.0));
    CHECK(g[0] == doctest::Approx(0.3));
    CHECK(g[1] == doctest::Approx(0.4));
    std::vector<double> small{0.1, 0.0};
    clip_global_norm(small, 0.5);
    CHECK(small[0] == 0.1);
}

TEST_CASE("train config round trip and validation") {
    auto c = small_config();
    c.shuffle_mode = ShuffleMode::fixed_order;
    const auto back = TrainConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.digest() == c.digest());
    c.learning_rate = 0.02;
    CHECK(c.digest() != back.digest());

    auto j = back.to_json();
    j["schedule"] = "linear";
    CHECK_ERROR_CODE(TrainConfig::from_json(j), ErrorCode::config_error);
    j = back.to_json();
    j["batch_size"] = 0;
    CHECK_ERROR_CODE(TrainConfig::from_json(j), ErrorCode::config_error);
    CHECK_ERROR_CODE(parse_shuffle_mode("sometimes"), ErrorCode::config_error);
}

TEST_CASE("label tokens optionally carry the terminator") {
    const auto lm = words_lm();
    const auto with = label_tokens(lm, "w1", true);
    CHECK(with.size() == 3);
    CHECK(with[1] == lm.special_tokens().quote);
    CHECK(with[2] == lm.special_tokens().end_of_turn);
    CHECK(label_tokens(lm, "w1", false).size() == 1);
}

TEST_CASE("training lowers validation loss and leaves the backend untouched") {
    const auto lm = words_lm();
    const auto tr = testing::readout_dataset(lm, 64, 0.3, 1, "a");
    const auto va = testing::readout_dataset(lm, 16, 0.3, 2, "b");
    const auto cfg = small_config();
    const TargetTemplate tmpl;
    auto adapter = Adapter::create(AdapterKind::scalar_affine, lm.dims(), 0, {1.0, 1});
    const double before = validate(adapter, lm, tmpl, va, cfg.append_terminator);
    const auto res = train(adapter, lm, tmpl, tr, va, cfg);
    CHECK(res.best_val_loss < before);
    CHECK(res.backend_checksum == lm.weights_checksum());
    CHECK(res.final_adapter.metadata().training_config_digest == cfg.digest());
    CHECK(res.curve.steps.size() == 8 * 3);
    CHECK(res.curve.steps.back().learning_rate == 0.0);
    CHECK(res.curve.validations.back().step == res.curve.steps.back().step);
    CHECK(validate(res.best_adapter, lm, tmpl, va) == doctest::Approx(res.best_val_loss));
    for (const auto& s : res.curve.steps) CHECK(s.clipped_norm <= cfg.grad_clip_norm + 1e-9);
}

TEST_CASE("curve.jsonl reproduces exactly for a fixed seed") {
    const auto lm = words_lm();
    const auto tr = testing::readout_dataset(lm, 40, 0.3, 3, "a");
    const auto va = testing::readout_dataset(lm, 8, 0.3, 4, "b");
    auto adapter = Adapter::create(AdapterKind::scalar_affine_low_rank, lm.dims(), 2);
    const auto a = train(adapter, lm, {}, tr, va, small_config());
    const auto b = train(adapter, lm, {}, tr, va, small_config());
    CHECK(a.curve.to_jsonl() == b.curve.to_jsonl());
    CHECK(encode_adapter(a.final_adapter) == encode_adapter(b.final_adapter));
    CHECK(a.curve.to_jsonl().find("wall_ms") == std::string::npos);
    CHECK(a.curve.timing_jsonl().find("wall_ms") != std::string::npos);
}

TEST_CASE("shuffle modes") {
    const auto lm = words_lm();
    const auto tr = testing::readout_dataset(lm, 24, 0.3, 3, "a");
    const auto va = testing::readout_dataset(lm, 4, 0.3, 4, "b");
    auto cfg = small_config();
    auto adapter = Adapter::create(AdapterKind::scale_only, lm.dims());
    const auto re = train(adapter, lm, {}, tr, va, cfg);
    REQUIRE(re.epoch_orders.size() == 3);
    CHECK(re.epoch_orders[0] != re.epoch_orders[1]);
    cfg.shuffle_mode = ShuffleMode::fixed_order;
    const auto fixed = train(adapter, lm, {}, tr, va, cfg);
    CHECK(fixed.epoch_orders[0] == fixed.epoch_orders[1]);
    CHECK(fixed.epoch_orders[1] == fixed.epoch_orders[2]);
    CHECK(fixed.epoch_orders[0] == re.epoch_orders[0]);
}

TEST_CASE("training refuses overlapping splits, NaN losses and backend drift") {
    const auto lm = words_lm();
    const auto tr = testing::readout_dataset(lm, 16, 0.3, 3, "a");
    const auto adapter = Adapter::create(AdapterKind::scalar_affine, lm.dims());
    CHECK_ERROR_CODE(train(adapter, lm, {}, tr, tr, small_config()), ErrorCode::invalid_argument);
    const auto va = testing::readout_dataset(lm, 4, 0.3, 4, "b");

    NanLM nan_lm(lm);
    try {
        train(adapter, nan_lm, {}, tr, va, small_config());
        FAIL("expected non_finite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::non_finite);
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }

    DriftingLM drift(lm);
    CHECK_ERROR_CODE(train(adapter, drift, {}, tr, va, small_config()), ErrorCode::invalid_argument);
    CHECK_ERROR_CODE(train(Adapter::create(AdapterKind::scale_only, ModelDims(4)), lm, {}, tr, va, small_config()),
                     ErrorCode::dimension_mismatch);
}

TEST_CASE("architecture sweep orders rows and reports deltas against identity") {
    const auto lm = words_lm();
    const auto tr = testing::readout_dataset(lm, 32, 0.3, 3, "a");
    const auto va = testing::readout_dataset(lm, 8, 0.3, 4, "b");
    auto cfg = small_config();
    cfg.epochs = 1;
    const std::vector<SweepEntry> entries{{AdapterKind::full_rank, 0},
                                          {AdapterKind::low_rank_only, 2},
                                          {AdapterKind::scalar_affine_low_rank, 4},
                                          {AdapterKind::scalar_affine_low_rank, 2},
                                          {AdapterKind::identity, 0},
                                          {AdapterKind::scale_only, 0}};
    const auto rows = architecture_sweep(entries, lm, {}, tr, va, cfg);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].kind == AdapterKind::identity);
    CHECK(rows[0].delta == 0.0);
    CHECK(rows[0].params == 0);
    CHECK(rows[1].kind == AdapterKind::scale_only);
    CHECK(rows[2].rank == 2);
    CHECK(rows[3].rank == 4);
    CHECK(rows[4].kind == AdapterKind::low_rank_only);
    CHECK(rows[5].kind == AdapterKind::full_rank);
    CHECK(rows[5].params == 8 * 8 + 8);
    for (const auto& r : rows) CHECK(r.delta == doctest::Approx(r.val_loss - rows[0].val_loss));

    const auto csv = sweep_to_csv(rows);
    CHECK(csv.rfind("arch,params,val_loss,delta,final_val_loss,final_train_loss\n", 0) == 0);
    CHECK(csv.find("scalar_affine_low_rank (r=4),") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("run directory contents") {
    const auto lm = words_lm();
    const auto tr = testing::readout_dataset(lm, 16, 0.3, 3, "a");
    const auto va = testing::readout_dataset(lm, 4, 0.3, 4, "b");
    const auto res = train(Adapter::create(AdapterKind::scalar_affine, lm.dims()), lm, {}, tr, va, small_config());
    const auto dir = testing::scratch_dir("rundir");
    write_run_directory(dir, small_config().to_json(), res);
    for (const char* f : {"config.json", "curve.jsonl", "timing.jsonl", "checkpoints/final.siad", "checkpoints/best.siad"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    }
    CHECK(slurp(dir / "curve.jsonl") == res.curve.to_jsonl());
    const auto best = load_adapter(dir / "checkpoints" / "best.siad");
    CHECK(encode_adapter(best) == encode_adapter(res.best_adapter));
    CHECK(TrainConfig::from_json(nlohmann::json::parse(slurp(dir / "config.json"))).digest() == small_config().digest());
}

}  // TEST_SUITE
