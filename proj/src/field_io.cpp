#include "malab/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace malab {

namespace {

static_assert(std::endian::native == std::endian::little, "container assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'M', 'A', 'L', 'A', 'B', '1', '\0', '\0'};

} // namespace

void write_field(const ScalarField& f, const std::string& path, const std::string& name) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrCode::io, "cannot open " + path + " for writing");
    const std::uint32_t n = static_cast<std::uint32_t>(f.dom->dim());
    const std::uint32_t m = static_cast<std::uint32_t>(f.dom->resolution());
    const std::uint64_t count = f.size();
    const std::uint64_t reserved = 0;
    out.write(kMagic.data(), 8);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&m), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(&reserved), 8);
    out.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(count * 8));
    if (!out) fail(ErrCode::io, "write failed for " + path);
    out.close();

    nlohmann::ordered_json meta;
    meta["magic"] = "MALAB1";
    meta["name"] = name;
    meta["n"] = n;
    meta["resolution"] = m;
    meta["count"] = count;
    meta["stats"] = {{"min", f.min()}, {"max", f.max()}, {"mean", kahan_mean(f.v)}};
    std::ofstream side(path + ".json", std::ios::trunc);
    if (!side) fail(ErrCode::io, "cannot open sidecar for " + path);
    side << meta.dump(2) << "\n";
}

ScalarField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrCode::io, "cannot open " + path);
    std::array<char, 8> magic{};
    std::uint32_t n = 0, m = 0;
    std::uint64_t count = 0, reserved = 0;
    in.read(magic.data(), 8);
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&m), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    in.read(reinterpret_cast<char*>(&reserved), 8);
    if (!in || magic != kMagic) fail(ErrCode::io, path + ": not a MALAB1 field container");
    auto dom = make_domain(static_cast<int>(n), static_cast<int>(m));
    if (count != dom->point_count()) fail(ErrCode::io, path + ": header count does not match the domain");
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * 8));
    if (!in) fail(ErrCode::io, path + ": truncated payload");
    return field_from_data(dom, std::move(values));
}

} // namespace malab
