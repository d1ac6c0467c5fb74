#include <iostream>

#include "commands.hpp"

namespace selfie::cli {

int cmd_plot(const SharedFlags& flags, const PlotArgs& args) {
    if (args.input.empty()) throw UsageError("plot needs --in <file.csv>");
    const auto config = resolve(flags);
    const std::filesystem::path input = args.input;
    const auto title = args.title.empty() ? input.stem().string() : args.title;
    plot_csv(config.out, input, args.kind, title, args.column);
    std::cout << "wrote " << (std::filesystem::path(config.out) / "plots" / (input.stem().string() + ".svg")).string()
              << "\n";
    return 0;
}

}  // namespace selfie::cli
