#include "axsym/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "axsym/error.hpp"

namespace axsym {

namespace {

constexpr char kMagic[4] = {'A', 'X', 'S', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

template <typename T>
void put(std::string& buf, T v) {
    v = to_little(v);
    buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& pos) {
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return to_little(v);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& bytes, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw_data("write failed for " + path.string());
}

// NaN is stored as null.
Json number(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

double read_number(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw_data(where + ": missing field '" + key + "'");
    const Json& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw_data(where + ": field '" + key + "' is not a number");
    return v.get<double>();
}

std::vector<double> read_numbers(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw_data(where + ": missing field '" + key + "'");
    const Json& a = j.at(key);
    if (!a.is_array()) throw_data(where + ": field '" + key + "' is not an array");
    std::vector<double> out;
    out.reserve(a.size());
    for (const auto& v : a) {
        if (v.is_null()) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
        } else if (v.is_number()) {
            out.push_back(v.get<double>());
        } else {
            throw_data(where + ": field '" + key + "' has a non-numeric entry");
        }
    }
    return out;
}

Json numbers(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

template <typename F>
auto with_context(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw DataError(where + ": " + e.what());
    }
}

} // namespace

fs::path sidecar_path(const fs::path& tensor_path) {
    fs::path p = tensor_path;
    p.replace_extension(".meta.json");
    return p;
}

Json read_json(const fs::path& path) {
    const std::string text = slurp(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json(const Json& j, const fs::path& path) { spill(j.dump(2) + "\n", path); }

void write_tensor(const EnsembleTensor& e, const fs::path& path, bool with_sidecar) {
    e.validate();
    const GridGeometry& g = e.geometry;
    std::string buf;
    buf.reserve(kHeaderBytes + 8 * (g.n_lat() + g.n_lon()) + g.n_pixels() + 8 * e.values.size());
    buf.append(kMagic, 4);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.n_lat()));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.n_lon()));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.n_time));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.n_real));
    for (double v : g.latitudes()) put<double>(buf, v);
    for (double v : g.longitudes()) put<double>(buf, v);
    for (auto q : g.land_mask()) put<std::uint8_t>(buf, q);
    for (double v : e.values) put<double>(buf, v);
    spill(buf, path);
    if (with_sidecar) {
        Json meta = {{"scenario_id", e.scenario_id}, {"co2", e.co2}, {"units", e.units}};
        write_json(meta, sidecar_path(path));
    }
}

EnsembleTensor read_tensor(const fs::path& path, bool with_sidecar) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    const std::string buf = slurp(path);
    const std::string where = path.string();
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw_data(where + ": malformed header (bad magic)");
    }
    if (buf.size() < kHeaderBytes) {
        throw_data(where + ": malformed header (truncated)");
    }
    std::size_t pos = 4;
    const std::size_t M = get<std::uint32_t>(buf, pos);
    const std::size_t N = get<std::uint32_t>(buf, pos);
    const std::size_t T = get<std::uint32_t>(buf, pos);
    const std::size_t R = get<std::uint32_t>(buf, pos);
    if (M == 0 || N == 0 || T == 0 || R == 0) {
        throw_data(where + ": malformed header (zero dimension)");
    }
    const std::size_t grid_bytes = 8 * (M + N) + M * N;
    if (buf.size() < kHeaderBytes + grid_bytes) {
        throw_data(where + ": malformed header (truncated grid description)");
    }
    std::vector<double> lat(M), lon(N);
    std::vector<std::uint8_t> mask(M * N);
    for (auto& v : lat) v = get<double>(buf, pos);
    for (auto& v : lon) v = get<double>(buf, pos);
    for (auto& v : mask) v = get<std::uint8_t>(buf, pos);
    const std::size_t count = R * T * N * M;
    if (buf.size() - pos != 8 * count) {
        throw_data(where + ": payload length mismatch: expected " + std::to_string(8 * count) +
                   " bytes, found " + std::to_string(buf.size() - pos));
    }
    for (std::size_t n = 0; n < N; ++n) {
        if (std::abs(lon[n] - regular_longitude(n, N)) > 1e-9) {
            throw_data(where + ": longitudes are not the regular grid 360*n/N");
        }
    }
    EnsembleTensor e;
    try {
        e = EnsembleTensor(GridGeometry(std::move(lat), N, std::move(mask)), T, R);
    } catch (const DataError& err) {
        throw DataError(where + ": " + err.what());
    }
    for (auto& v : e.values) v = get<double>(buf, pos);

    const fs::path meta = sidecar_path(path);
    if (with_sidecar && fs::exists(meta)) {
        with_context(meta.string(), [&] {
            const Json j = read_json(meta);
            if (j.contains("scenario_id")) e.scenario_id = j.at("scenario_id").get<std::string>();
            if (j.contains("units")) e.units = j.at("units").get<std::string>();
            if (j.contains("co2")) e.co2 = j.at("co2").get<std::vector<double>>();
            return 0;
        });
    }
    try {
        e.validate();
    } catch (const DataError& err) {
        throw DataError(where + ": " + err.what());
    }
    return e;
}

Json geometry_to_json(const GridGeometry& g) {
    return {{"latitudes", g.latitudes()}, {"n_lon", g.n_lon()}, {"land_mask", g.land_mask()}};
}

GridGeometry geometry_from_json(const Json& j) {
    return with_context("geometry", [&] {
        auto lat = read_numbers(j, "latitudes", "geometry");
        if (!j.contains("n_lon")) throw_data("geometry: missing field 'n_lon'");
        const auto n = j.at("n_lon").get<std::size_t>();
        std::vector<std::uint8_t> mask(lat.size() * n, 0);
        if (j.contains("land_mask")) mask = j.at("land_mask").get<std::vector<std::uint8_t>>();
        return GridGeometry(std::move(lat), n, std::move(mask));
    });
}

Json params_to_json(const CovarianceParams& p) {
    Json bands = Json::array();
    for (const auto& b : p.bands) bands.push_back({{"phi", b.phi}, {"alpha", b.alpha}, {"nu", b.nu}});
    return {{"bands", bands},
            {"coherence", {{"xi", p.coherence.xi}, {"tau", p.coherence.tau}}},
            {"ar", {{"phi0", p.ar.phi_ocean}, {"phi1", p.ar.phi_land}}}};
}

CovarianceParams params_from_json(const Json& j) {
    return with_context("params", [&] {
        CovarianceParams p;
        if (!j.contains("bands") || !j.at("bands").is_array()) throw_data("params: missing field 'bands'");
        for (const auto& b : j.at("bands")) {
            p.bands.push_back({read_number(b, "phi", "params.bands"),
                               read_number(b, "alpha", "params.bands"),
                               read_number(b, "nu", "params.bands")});
        }
        if (!j.contains("coherence")) throw_data("params: missing field 'coherence'");
        if (!j.contains("ar")) throw_data("params: missing field 'ar'");
        p.coherence = {read_number(j.at("coherence"), "xi", "params.coherence"),
                       read_number(j.at("coherence"), "tau", "params.coherence")};
        p.ar = {read_number(j.at("ar"), "phi0", "params.ar"),
                read_number(j.at("ar"), "phi1", "params.ar")};
        p.validate();
        return p;
    });
}

void write_params(const CovarianceParams& p, const fs::path& path, const FitReport* report) {
    p.validate();
    Json j = params_to_json(p);
    if (report) {
        Json table = Json::array();
        for (const auto& e : report->table) {
            table.push_back({{"name", e.name},
                             {"estimate", e.estimate},
                             {"sd", number(e.sd)},
                             {"ci_low", number(e.ci_low)},
                             {"ci_high", number(e.ci_high)}});
        }
        Json timings = Json::object();
        for (const auto& [k, v] : report->timings) timings[k] = v;
        j["fit"] = {{"loglik", report->loglik},
                    {"loglik_per_contrast", report->loglik_per_contrast},
                    {"start_loglik", number(report->start_loglik)},
                    {"evaluations", report->evaluations},
                    {"converged", report->converged},
                    {"sd_warning", report->sd_warning},
                    {"table", table},
                    {"timings_seconds", timings}};
    }
    write_json(j, path);
}

CovarianceParams read_params(const fs::path& path) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    try {
        return params_from_json(read_json(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Json band_fits_to_json(const std::vector<BandFit>& fits) {
    Json bands = Json::array();
    for (const auto& f : fits) {
        bands.push_back({{"band", f.band},
                         {"latitude", f.latitude},
                         {"phi", f.spectrum.phi},
                         {"alpha", f.spectrum.alpha},
                         {"nu", f.spectrum.nu},
                         {"sd", {{"phi", number(f.sd[0])},
                                 {"alpha", number(f.sd[1])},
                                 {"nu", number(f.sd[2])}}},
                         {"ar_provisional", f.ar_provisional},
                         {"start", {{"phi", f.start.phi},
                                    {"alpha", f.start.alpha},
                                    {"nu", f.start.nu},
                                    {"ar", f.start_ar}}},
                         {"loglik", number(f.failed ? std::nan("") : f.loglik)},
                         {"evaluations", f.evaluations},
                         {"converged", f.converged},
                         {"boundary", f.boundary},
                         {"failed", f.failed},
                         {"error", f.error}});
    }
    return {{"bands", bands}};
}

void write_band_fits(const std::vector<BandFit>& fits, const fs::path& path) {
    write_json(band_fits_to_json(fits), path);
}

std::vector<BandSpectrum> read_band_spectra(const fs::path& path) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    const Json j = read_json(path);
    return with_context(path.string(), [&] {
        if (!j.contains("bands") || !j.at("bands").is_array()) {
            throw_data(path.string() + ": missing field 'bands'");
        }
        std::vector<BandSpectrum> out;
        for (const auto& b : j.at("bands")) {
            if (b.value("failed", false)) {
                throw_numerical(path.string() + ": band " + std::to_string(out.size()) +
                                " fit failed: " + b.value("error", std::string()));
            }
            BandSpectrum s{read_number(b, "phi", "bands"), read_number(b, "alpha", "bands"),
                           read_number(b, "nu", "bands")};
            s.validate();
            out.push_back(s);
        }
        return out;
    });
}

Json mean_to_json(const MeanModelParams& p) {
    Json j = {{"lambda", p.lambda},
              {"lambda_sd", number(p.lambda_sd)},
              {"loglik", number(p.loglik)},
              {"sd_approximate", p.sd_approximate},
              {"geometry", geometry_to_json(p.geometry)},
              {"region_ids", p.regions.ids()},
              {"beta0", numbers(p.beta0)},
              {"beta1", numbers(p.beta1)},
              {"beta2", numbers(p.beta2)},
              {"beta0_sd", numbers(p.beta0_sd)},
              {"beta1_sd", numbers(p.beta1_sd)},
              {"beta2_sd", numbers(p.beta2_sd)}};
    if (!p.standardization.empty()) {
        j["standardization"] = {{"mean", numbers(p.standardization.mean)},
                                {"sd", numbers(p.standardization.sd)}};
    }
    return j;
}

MeanModelParams mean_from_json(const Json& j) {
    return with_context("mean", [&] {
        MeanModelParams p;
        if (!j.contains("geometry")) throw_data("mean: missing field 'geometry'");
        p.geometry = geometry_from_json(j.at("geometry"));
        if (!j.contains("region_ids")) throw_data("mean: missing field 'region_ids'");
        p.regions = RegionMap(p.geometry.n_lat(), p.geometry.n_lon(),
                              j.at("region_ids").get<std::vector<int>>());
        p.lambda = read_number(j, "lambda", "mean");
        p.lambda_sd = j.contains("lambda_sd") ? read_number(j, "lambda_sd", "mean") : 0.0;
        p.loglik = j.contains("loglik") ? read_number(j, "loglik", "mean") : 0.0;
        p.sd_approximate = j.value("sd_approximate", false);
        p.beta0 = read_numbers(j, "beta0", "mean");
        p.beta1 = read_numbers(j, "beta1", "mean");
        p.beta2 = read_numbers(j, "beta2", "mean");
        if (j.contains("beta0_sd")) p.beta0_sd = read_numbers(j, "beta0_sd", "mean");
        if (j.contains("beta1_sd")) p.beta1_sd = read_numbers(j, "beta1_sd", "mean");
        if (j.contains("beta2_sd")) p.beta2_sd = read_numbers(j, "beta2_sd", "mean");
        if (j.contains("standardization")) {
            const Json& s = j.at("standardization");
            p.standardization.mean = read_numbers(s, "mean", "mean.standardization");
            p.standardization.sd = read_numbers(s, "sd", "mean.standardization");
        }
        p.validate();
        return p;
    });
}

void write_mean(const MeanModelParams& p, const fs::path& path) {
    p.validate();
    write_json(mean_to_json(p), path);
}

MeanModelParams read_mean(const fs::path& path) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    try {
        return mean_from_json(read_json(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_regions(const RegionMap& regions, const fs::path& path) {
    std::string out = "lat_index,lon_index,region_id\n";
    const std::size_t M = regions.n_lat();
    for (std::size_t n = 0; n < regions.n_lon(); ++n)
        for (std::size_t m = 0; m < M; ++m) {
            out += std::to_string(m + 1) + "," + std::to_string(n + 1) + "," +
                   std::to_string(regions.ids()[n * M + m]) + "\n";
        }
    spill(out, path);
}

RegionMap read_regions(const fs::path& path, const GridGeometry& g) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    std::istringstream in(slurp(path));
    const std::string where = path.string();
    const std::size_t M = g.n_lat();
    const std::size_t N = g.n_lon();
    std::vector<int> ids(M * N, 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.find("lat_index") != std::string::npos) continue;
        long lat = 0, lon = 0, id = 0;
        char c1 = 0, c2 = 0;
        std::istringstream row(line);
        if (!(row >> lat >> c1 >> lon >> c2 >> id) || c1 != ',' || c2 != ',') {
            throw_data(where + ": line " + std::to_string(line_no) + " is not lat_index,lon_index,region_id");
        }
        if (lat < 1 || lat > static_cast<long>(M) || lon < 1 || lon > static_cast<long>(N)) {
            throw_data(where + ": line " + std::to_string(line_no) + " indexes outside the grid");
        }
        int& slot = ids[g.pixel(static_cast<std::size_t>(lon - 1), static_cast<std::size_t>(lat - 1))];
        if (slot != 0) throw_data(where + ": pixel on line " + std::to_string(line_no) + " assigned twice");
        if (id < 1) throw_data(where + ": region ids are 1-based (line " + std::to_string(line_no) + ")");
        slot = static_cast<int>(id);
    }
    try {
        return RegionMap(M, N, std::move(ids));
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    }
}

void write_forcing(const ForcingSeries& f, const fs::path& path) {
    write_json({{"co2", f.co2()}, {"T", f.n_years()}}, path);
}

ForcingSeries read_forcing(const fs::path& path, std::size_t default_years) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    const Json j = read_json(path);
    return with_context(path.string(), [&] {
        auto co2 = read_numbers(j, "co2", path.string());
        std::size_t years = j.contains("T") ? j.at("T").get<std::size_t>() : default_years;
        if (years == 0) years = co2.size();
        try {
            return ForcingSeries(std::move(co2), years);
        } catch (const DataError& e) {
            throw DataError(path.string() + ": " + e.what());
        }
    });
}

SimulationSpec read_simulation_spec(const fs::path& path) {
    if (!fs::exists(path)) throw_data("no such file: " + path.string());
    const Json j = read_json(path);
    const std::string where = path.string();
    return with_context(where, [&] {
        SimulationSpec spec;
        if (!j.contains("geometry")) throw_data(where + ": missing field 'geometry'");
        if (!j.contains("params")) throw_data(where + ": missing field 'params'");
        spec.geometry = geometry_from_json(j.at("geometry"));
        spec.params = params_from_json(j.at("params"));
        spec.n_time = j.value("T", std::size_t{1});
        spec.n_real = j.value("R", std::size_t{1});
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.scenario_id = j.value("scenario_id", std::string("simulated"));
        if (j.contains("mean")) {
            fs::path mean_path = j.at("mean").get<std::string>();
            if (mean_path.is_relative()) mean_path = path.parent_path() / mean_path;
            spec.mean = read_mean(mean_path);
            auto co2 = read_numbers(j, "co2", where);
            spec.forcing = ForcingSeries(std::move(co2), spec.n_time);
        }
        spec.validate();
        return spec;
    });
}

} // namespace axsym
