#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "selfie/error.hpp"
#include "selfie/train.hpp"

namespace selfie::cli {

namespace {

// Train and validation losses in the long series,x,y form the plotter reads.
std::string loss_curve_csv(const LossCurve& curve) {
    std::ostringstream out;
    out.precision(10);
    out << "series,step,loss\n";
    for (const auto& s : curve.steps) out << "train," << s.step << ',' << s.loss << '\n';
    for (const auto& v : curve.validations) out << v.split << ',' << v.step << ',' << v.loss << '\n';
    return out.str();
}

}  // namespace

int cmd_train(const SharedFlags& flags) {
    const auto config = resolve(flags);
    const std::filesystem::path out = config.out;
    const auto train_set = require_dataset(config.data.train, "data.train");
    const auto val_set = require_dataset(config.data.val, "data.val");
    const auto lm = make_backend(config);
    if (train_set.dim() != lm->dims().d || val_set.dim() != lm->dims().d) {
        fail(ErrorCode::dimension_mismatch, "datasets have d=" + std::to_string(train_set.dim()) + "/" +
                                                std::to_string(val_set.dim()) + " but the backend has d=" +
                                                std::to_string(lm->dims().d));
    }

    auto adapter = Adapter::create(config.adapter.kind, lm->dims(), config.adapter.rank,
                                   AdapterInit{config.train.alpha_init, config.seed});
    const auto result = train(std::move(adapter), *lm, config.prompt, train_set, val_set, config.train);

    auto resolved = config.to_json();
    resolved["inputs"] = {{"train", {{"path", config.data.train}, {"digest", train_set.digest()}}},
                          {"val", {{"path", config.data.val}, {"digest", val_set.digest()}}}};
    resolved["backend_checksum"] = result.backend_checksum;
    write_run_directory(out, resolved, result);
    write_text(out / "summary.json", nlohmann::json{{"best_val_loss", result.best_val_loss},
                                                    {"best_step", result.best_step},
                                                    {"steps", result.curve.steps.size()},
                                                    {"parameters", result.final_adapter.parameter_count()}}
                                             .dump(2) +
                                         "\n");

    if (flags.plot) {
        write_text(out / "loss_curve.csv", loss_curve_csv(result.curve));
        plot_csv(out, out / "loss_curve.csv", "line", "Loss curve");
    }
    std::cout << "trained " << to_string(config.adapter.kind) << " for " << result.curve.steps.size()
              << " steps; best val loss " << result.best_val_loss << " at step " << result.best_step << "\n"
              << "run directory: " << out.string() << "\n";
    return 0;
}

}  // namespace selfie::cli
