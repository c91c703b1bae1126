#include "biharm4/field_io.h"

#include <json.hpp>

#include <fstream>

namespace biharm4 {

namespace {

const char* rank_name(Rank r) {
    switch (r) {
        case Rank::none: return "none";
        case Rank::one: return "one";
        case Rank::two: return "two";
        case Rank::three: return "three";
    }
    return "none";
}

Rank rank_from_name(const std::string& s) {
    if (s == "none") return Rank::none;
    if (s == "one") return Rank::one;
    if (s == "two") return Rank::two;
    if (s == "three") return Rank::three;
    throw ConfigError("field sidecar: unknown rank '" + s + "'");
}

} // namespace

void save_field(const Field& f, const std::string& base) {
    {
        std::ofstream bin(base + ".bin", std::ios::binary);
        if (!bin) throw ConfigError("save_field: cannot open " + base + ".bin");
        bin.write(reinterpret_cast<const char*>(f.data.data()),
                  std::streamsize(f.data.size() * sizeof(double)));
    }
    nlohmann::ordered_json meta;
    meta["n"] = f.grid.n;
    meta["channels"] = f.channels;
    meta["rank"] = rank_name(f.rank);
    meta["comps"] = f.comps();
    meta["dtype"] = "float64";
    meta["layout"] = "component-major; per component row-major over (x1,x2,x3,x4), x4 fastest";
    std::ofstream js(base + ".json");
    if (!js) throw ConfigError("save_field: cannot open " + base + ".json");
    js << meta.dump(2) << "\n";
}

Field load_field(const std::string& base) {
    nlohmann::json meta;
    {
        std::ifstream js(base + ".json");
        if (!js) throw ConfigError("load_field: cannot open " + base + ".json");
        js >> meta;
    }
    Field f(make_grid(meta.at("n").get<int>()), meta.at("channels").get<int>(),
            rank_from_name(meta.at("rank").get<std::string>()));
    std::ifstream bin(base + ".bin", std::ios::binary);
    if (!bin) throw ConfigError("load_field: cannot open " + base + ".bin");
    bin.read(reinterpret_cast<char*>(f.data.data()),
             std::streamsize(f.data.size() * sizeof(double)));
    if (std::size_t(bin.gcount()) != f.data.size() * sizeof(double))
        throw ConfigError("load_field: " + base + ".bin truncated");
    return f;
}

} // namespace biharm4
