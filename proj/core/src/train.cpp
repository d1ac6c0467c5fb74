#include "selfie/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "selfie/checkpoint.hpp"
#include "selfie/digest.hpp"
#include "selfie/error.hpp"
#include "selfie/optimizer.hpp"
#include "selfie/rng.hpp"

namespace selfie {

std::string_view to_string(ShuffleMode mode) noexcept {
    return mode == ShuffleMode::fixed_order ? "fixed_order" : "reshuffle_each_epoch";
}

ShuffleMode parse_shuffle_mode(std::string_view name) {
    if (name == "fixed_order") return ShuffleMode::fixed_order;
    if (name == "reshuffle_each_epoch") return ShuffleMode::reshuffle_each_epoch;
    fail(ErrorCode::config_error, "unknown shuffle_mode '" + std::string(name) + "'");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"weight_decay", weight_decay},
            {"schedule", "cosine"},
            {"warmup_steps", warmup_steps},
            {"grad_clip_norm", grad_clip_norm},
            {"alpha_init", alpha_init},
            {"seed", seed},
            {"shuffle_mode", std::string(to_string(shuffle_mode))},
            {"beta1", beta1},
            {"beta2", beta2},
            {"adam_eps", adam_eps},
            {"min_learning_rate", min_learning_rate},
            {"validations_per_epoch", validations_per_epoch},
            {"append_terminator", append_terminator}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
        c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
        c.alpha_init = j.value("alpha_init", c.alpha_init);
        c.seed = j.value("seed", c.seed);
        c.shuffle_mode = parse_shuffle_mode(j.value("shuffle_mode", std::string(to_string(c.shuffle_mode))));
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.min_learning_rate = j.value("min_learning_rate", c.min_learning_rate);
        c.validations_per_epoch = j.value("validations_per_epoch", c.validations_per_epoch);
        c.append_terminator = j.value("append_terminator", c.append_terminator);
        if (j.contains("schedule") && j.at("schedule") != "cosine") {
            fail(ErrorCode::config_error, "only the cosine schedule is supported");
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, std::string("invalid train section: ") + e.what());
    }
    if (!(c.learning_rate > 0) || c.batch_size == 0 || c.epochs == 0 || c.weight_decay < 0 ||
        !(c.grad_clip_norm > 0) || c.validations_per_epoch == 0) {
        fail(ErrorCode::config_error, "train config values must be positive");
    }
    return c;
}

std::string TrainConfig::digest() const { return to_hex(fnv1a64(to_json().dump())); }

std::string LossCurve::to_jsonl() const {
    std::ostringstream out;
    std::size_t vi = 0;
    auto emit_val = [&](const ValidationRow& v) {
        out << nlohmann::json{{"type", "val"}, {"step", v.step}, {"epoch", v.epoch}, {"split", v.split},
                              {"loss", v.loss}}
                   .dump()
            << '\n';
    };
    for (const auto& s : steps) {
        out << nlohmann::json{{"type", "train"},        {"step", s.step},
                              {"epoch", s.epoch},       {"loss", s.loss},
                              {"lr", s.learning_rate},  {"grad_norm", s.grad_norm},
                              {"clipped_norm", s.clipped_norm}}
                   .dump()
            << '\n';
        while (vi < validations.size() && validations[vi].step == s.step) emit_val(validations[vi++]);
    }
    while (vi < validations.size()) emit_val(validations[vi++]);
    return out.str();
}

std::string LossCurve::timing_jsonl() const {
    std::ostringstream out;
    for (const auto& s : steps) out << nlohmann::json{{"type", "train"}, {"step", s.step}, {"wall_ms", s.wall_ms}}.dump() << '\n';
    for (const auto& v : validations) {
        out << nlohmann::json{{"type", "val"}, {"step", v.step}, {"wall_ms", v.wall_ms}}.dump() << '\n';
    }
    return out.str();
}

std::vector<TokenId> label_tokens(const FrozenLM& lm, std::string_view label, bool append_terminator) {
    auto tokens = lm.tokenize(append_terminator ? format_label_for_training(label) : std::string(label));
    if (tokens.empty()) fail(ErrorCode::empty_input, "label '" + std::string(label) + "' tokenizes to nothing");
    return tokens;
}

namespace {

struct PreparedSet {
    std::vector<std::vector<double>> vectors;   // per record
    std::vector<TrainingPair> pairs;
    std::vector<std::vector<TokenId>> tokens;   // per pair
};

PreparedSet prepare(const FrozenLM& lm, const Dataset& ds, bool append_terminator) {
    if (ds.dim() != lm.dims().d) {
        fail(ErrorCode::dimension_mismatch, "dataset width " + std::to_string(ds.dim()) +
                                                " differs from model width " + std::to_string(lm.dims().d));
    }
    PreparedSet p;
    p.vectors.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) p.vectors.push_back(ds.vector(i));
    p.pairs = flatten_pairs(ds);
    p.tokens.reserve(p.pairs.size());
    for (const auto& pr : p.pairs) {
        p.tokens.push_back(label_tokens(lm, ds.record(pr.record).labels[pr.label], append_terminator));
    }
    return p;
}

double mean_loss(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                 const PreparedSet& set) {
    if (set.pairs.empty()) fail(ErrorCode::empty_input, "validation set is empty");
    double total = 0.0;
    for (std::size_t k = 0; k < set.pairs.size(); ++k) {
        const auto injected = adapter.apply(set.vectors[set.pairs[k].record]);
        total += loss_with_injection(lm, rendered, {injected, 1.0}, set.tokens[k]).loss;
    }
    return total / static_cast<double>(set.pairs.size());
}

std::vector<bool> decay_mask(const Adapter& a) {
    std::vector<bool> mask(a.parameter_count(), true);
    const auto& l = a.layout();
    for (std::size_t i = 0; i < l.alpha_size; ++i) mask[l.alpha_offset + i] = false;
    return mask;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double validate(const Adapter& adapter, const FrozenLM& lm, const TargetTemplate& tmpl, const Dataset& dataset,
                bool append_terminator) {
    if (dataset.empty()) fail(ErrorCode::empty_input, "cannot validate on an empty dataset");
    return mean_loss(adapter, lm, render_template(lm, tmpl), prepare(lm, dataset, append_terminator));
}

TrainResult train(Adapter adapter, const FrozenLM& lm, const TargetTemplate& tmpl, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& config) {
    if (adapter.dim() != lm.dims().d) {
        fail(ErrorCode::dimension_mismatch, "adapter width " + std::to_string(adapter.dim()) +
                                                " differs from model width " + std::to_string(lm.dims().d));
    }
    if (train_set.empty() || val_set.empty()) fail(ErrorCode::empty_input, "train and validation sets must be non-empty");
    {
        std::set<std::string> ids;
        for (const auto& r : train_set.records()) ids.insert(r.id);
        for (const auto& r : val_set.records()) {
            if (ids.contains(r.id)) fail(ErrorCode::invalid_argument, "record '" + r.id + "' is in both train and val");
        }
    }
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t checksum_before = lm.weights_checksum();
    const auto rendered = render_template(lm, tmpl);
    const auto train_data = prepare(lm, train_set, config.append_terminator);
    const auto val_data = prepare(lm, val_set, config.append_terminator);

    adapter.set_training_config_digest(config.digest());
    AdamW opt(adapter.parameter_count(), decay_mask(adapter),
              {config.beta1, config.beta2, config.adam_eps, config.weight_decay});

    const std::size_t n_pairs = train_data.pairs.size();
    const std::size_t steps_per_epoch = (n_pairs + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = steps_per_epoch * config.epochs;
    const std::size_t val_every = std::max<std::size_t>(1, steps_per_epoch / config.validations_per_epoch);

    TrainResult result{adapter, adapter, 0.0, 0, {}, checksum_before, {}};
    result.best_val_loss = std::numeric_limits<double>::infinity();

    auto run_validation = [&](std::size_t step, std::size_t epoch) {
        const double loss = mean_loss(adapter, lm, rendered, val_data);
        if (!std::isfinite(loss)) {
            fail(ErrorCode::non_finite, "validation loss became non-finite at step " + std::to_string(step));
        }
        result.curve.validations.push_back({step, epoch, "val", loss, elapsed_ms(start)});
        if (loss < result.best_val_loss) {
            result.best_val_loss = loss;
            result.best_step = step;
            result.best_adapter = adapter;
        }
    };

    std::vector<std::size_t> order(n_pairs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, 0x5f));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    std::vector<double> grads(adapter.parameter_count());
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (epoch > 0 && config.shuffle_mode == ShuffleMode::reshuffle_each_epoch) {
            shuffle_rng.shuffle(std::span<std::size_t>(order));
        }
        result.epoch_orders.push_back(order);
        for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
            const std::size_t lo = b * config.batch_size;
            const std::size_t hi = std::min(n_pairs, lo + config.batch_size);
            std::fill(grads.begin(), grads.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& pr = train_data.pairs[order[k]];
                const auto& h = train_data.vectors[pr.record];
                const auto injected = adapter.apply(h);
                const auto lg = loss_with_injection(lm, rendered, {injected, 1.0}, train_data.tokens[order[k]]);
                batch_loss += lg.loss;
                const auto g = adapter.gradients(h, lg.gradient);
                for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g.values[i];
            }
            const double inv = 1.0 / static_cast<double>(hi - lo);
            batch_loss *= inv;
            for (auto& g : grads) g *= inv;
            if (!std::isfinite(batch_loss)) {
                fail(ErrorCode::non_finite, "training loss became non-finite at step " + std::to_string(step));
            }
            const double pre = clip_global_norm(grads, config.grad_clip_norm);
            double post = 0.0;
            for (double g : grads) post += g * g;
            const double lr = cosine_lr(step, total_steps, config.warmup_steps, config.learning_rate,
                                        config.min_learning_rate);
            if (adapter.parameter_count() > 0) opt.step(adapter.mutable_parameters(), grads, lr);
            if (!adapter.all_finite()) {
                fail(ErrorCode::non_finite, "adapter parameters became non-finite at step " + std::to_string(step));
            }
            result.curve.steps.push_back({step, epoch, batch_loss, lr, pre, std::sqrt(post), elapsed_ms(start)});
            const bool last = step + 1 == total_steps;
            if ((step + 1) % val_every == 0 || last) run_validation(step, epoch);
        }
    }

    if (lm.weights_checksum() != checksum_before) {
        fail(ErrorCode::invalid_argument, "backend weights changed during training");
    }
    result.final_adapter = adapter;
    return result;
}

std::string SweepRow::label() const {
    std::string name(to_string(kind));
    if (has_low_rank(kind)) name += " (r=" + std::to_string(rank) + ")";
    return name;
}

std::vector<SweepRow> architecture_sweep(const std::vector<SweepEntry>& entries, const FrozenLM& lm,
                                         const TargetTemplate& tmpl, const Dataset& train_set,
                                         const Dataset& val_set, const TrainConfig& config) {
    std::vector<SweepEntry> sorted = entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const SweepEntry& a, const SweepEntry& b) {
        if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        return a.rank < b.rank;
    });
    const auto d = ModelDims(lm.dims().d);
    const double identity_loss =
        validate(Adapter::create(AdapterKind::identity, d), lm, tmpl, val_set, config.append_terminator);

    std::vector<SweepRow> rows;
    for (const auto& e : sorted) {
        SweepRow row{e.kind, e.rank, parameter_count(e.kind, d.d, e.rank)};
        auto adapter = Adapter::create(e.kind, d, e.rank, {config.alpha_init, config.seed});
        if (row.params == 0) {
            row.val_loss = row.final_val_loss = validate(adapter, lm, tmpl, val_set, config.append_terminator);
            row.final_train_loss = validate(adapter, lm, tmpl, train_set, config.append_terminator);
        } else {
            auto res = train(std::move(adapter), lm, tmpl, train_set, val_set, config);
            row.val_loss = res.best_val_loss;
            row.final_val_loss = res.curve.validations.back().loss;
            row.final_train_loss = validate(res.final_adapter, lm, tmpl, train_set, config.append_terminator);
        }
        row.delta = e.kind == AdapterKind::identity ? 0.0 : row.val_loss - identity_loss;
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "arch,params,val_loss,delta,final_val_loss,final_train_loss\n";
    for (const auto& r : rows) {
        out << r.label() << ',' << r.params << ',' << r.val_loss << ',' << r.delta << ',' << r.final_val_loss << ','
            << r.final_train_loss << '\n';
    }
    return out.str();
}

void write_run_directory(const std::filesystem::path& dir, const nlohmann::json& config_json,
                         const TrainResult& result) {
    std::filesystem::create_directories(dir / "checkpoints");
    auto write_text = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::trunc | std::ios::binary);
        if (!out) fail(ErrorCode::io_failure, "cannot write '" + p.string() + "'");
        out << text;
    };
    write_text(dir / "config.json", config_json.dump(2) + "\n");
    write_text(dir / "curve.jsonl", result.curve.to_jsonl());
    write_text(dir / "timing.jsonl", result.curve.timing_jsonl());
    save_adapter(result.final_adapter, dir / "checkpoints" / "final.siad");
    save_adapter(result.best_adapter, dir / "checkpoints" / "best.siad");
}

}  // namespace selfie
