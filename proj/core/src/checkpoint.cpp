#include "selfie/checkpoint.hpp"

#include <nlohmann/json.hpp>
#include <string>

#include "binary_io.hpp"
#include "selfie/error.hpp"

namespace selfie {

namespace {

constexpr char kMagic[4] = {'S', 'I', 'A', 'D'};

}  // namespace

std::vector<std::uint8_t> encode_adapter(const Adapter& adapter) {
    if (!adapter.all_finite()) {
        fail(ErrorCode::non_finite, "refusing to save an adapter with non-finite parameters");
    }
    const auto& meta = adapter.metadata();
    nlohmann::json header = {
        {"kind", std::string(to_string(adapter.kind()))},
        {"d", adapter.dim()},
        {"r", adapter.rank()},
        {"alpha_init", meta.alpha_init},
        {"training_config_digest", meta.training_config_digest},
        {"seed", meta.seed},
    };
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    detail::put_u16(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + 4 * adapter.parameter_count());
    for (float p : adapter.parameters()) detail::put_f32(out, p);
    return out;
}

Adapter decode_adapter(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 10 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
        fail(ErrorCode::corrupt_header, "not an adapter checkpoint (bad magic)");
    }
    const auto version = detail::get_u16(bytes.data() + 4);
    if (version != kCheckpointVersion) {
        fail(ErrorCode::corrupt_header, "unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = detail::get_u32(bytes.data() + 6);
    if (bytes.size() - 10 < header_len) {
        fail(ErrorCode::corrupt_header, "checkpoint header runs past end of file");
    }
    nlohmann::json header;
    std::string kind_name;
    std::size_t d = 0, r = 0;
    AdapterMetadata meta;
    try {
        header = nlohmann::json::parse(bytes.begin() + 10, bytes.begin() + 10 + header_len);
        kind_name = header.at("kind").get<std::string>();
        d = header.at("d").get<std::size_t>();
        r = header.at("r").get<std::size_t>();
        meta.alpha_init = header.at("alpha_init").get<double>();
        meta.training_config_digest = header.at("training_config_digest").get<std::string>();
        meta.seed = header.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::corrupt_header, std::string("checkpoint header invalid: ") + e.what());
    }
    if (d == 0) fail(ErrorCode::corrupt_header, "checkpoint declares d = 0");

    const AdapterKind kind = parse_adapter_kind(kind_name);
    const ParameterLayout layout = make_layout(kind, d, r);

    const std::size_t tensor_offset = 10 + header_len;
    const std::size_t expected = 4 * layout.total();
    const std::size_t available = bytes.size() - tensor_offset;
    if (available < expected) {
        fail(ErrorCode::truncated_tensor, "checkpoint tensor section has " +
                                              std::to_string(available) + " bytes, expected " +
                                              std::to_string(expected));
    }
    if (available > expected) {
        fail(ErrorCode::dimension_mismatch, "checkpoint tensor section has " +
                                                std::to_string(available - expected) +
                                                " trailing bytes for declared d=" +
                                                std::to_string(d));
    }
    std::vector<float> params(layout.total());
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] = detail::get_f32(bytes.data() + tensor_offset + 4 * i);
    }
    Adapter a = Adapter::from_parameters(kind, ModelDims(d), r, std::move(params), std::move(meta));
    return a;
}

void save_adapter(const Adapter& adapter, const std::filesystem::path& path) {
    detail::write_file(path, encode_adapter(adapter));
}

Adapter load_adapter(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return decode_adapter(bytes);
}

}  // namespace selfie
