#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "mim/cavity_optics.hpp"
#include "mim/constants.hpp"

namespace mim::cli {

using namespace mim::optics;

std::vector<double> uniform_grid(double start, double stop, std::size_t n) {
    if (n == 1) return {start};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

namespace {

std::string scan_csv(const PositionScanResult& s) {
    Csv csv({"dx_m", "k_res", "finesse", "T_res", "R_res", "valid"});
    for (std::size_t i = 0; i < s.size(); ++i)
        csv.row({s.displacement[i], s.k_res[i], s.finesse[i], s.transmission[i], s.reflection[i],
                 s.valid[i] ? 1.0 : 0.0});
    return csv.text();
}

json scan_errors(const PositionScanResult& s) {
    std::set<std::string> unique;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.valid[i]) {
            ++invalid;
            unique.insert(s.error[i]);
        }
    return {{"invalid_points", invalid}, {"errors", unique}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, const std::string& where) {
    std::istringstream in(cell);
    in.imbue(std::locale::classic());
    double v = 0.0;
    if (cell == "nan" || cell == "NaN") return std::nan("");
    if (!(in >> v) || !in.eof()) throw ConfigError(where + ": '" + cell + "' is not a number");
    return v;
}

PositionScanResult read_scan_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read data file " + file.string());
    std::string line;
    std::size_t line_no = 0;
    const std::vector<std::string> expect = {"dx_m", "k_res", "finesse", "T_res", "R_res", "valid"};
    PositionScanResult s;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = file.string() + ":" + std::to_string(line_no);
        if (!header) {
            if (cells != expect) throw ConfigError(where + ": expected header dx_m,k_res,finesse,T_res,R_res,valid");
            header = true;
            continue;
        }
        if (cells.size() != expect.size())
            throw ConfigError(where + ": expected 6 columns, found " + std::to_string(cells.size()));
        s.displacement.push_back(parse_cell(cells[0], where));
        s.k_res.push_back(parse_cell(cells[1], where));
        s.finesse.push_back(parse_cell(cells[2], where));
        s.transmission.push_back(parse_cell(cells[3], where));
        s.reflection.push_back(parse_cell(cells[4], where));
        const double valid = parse_cell(cells[5], where);
        if (valid != 0.0 && valid != 1.0) throw ConfigError(where + ": valid must be 0 or 1");
        s.valid.push_back(valid == 1.0);
        s.error.emplace_back();
    }
    if (!header) throw ConfigError(file.string() + ": empty data file");
    if (s.size() == 0) throw ConfigError(file.string() + ": no data rows");
    return s;
}

}  // namespace

void run_optics_scan(RunContext& ctx) {
    Params& p = ctx.params;
    const OpticalConstants optics{p.number("wavelength_m", 1064e-9)};
    const double length = p.number("length_m", 0.067);
    const double thickness = p.number("thickness_m", 50e-9);
    const double index_real = p.number("index_real", 2.2);
    const auto index_imag = p.numbers("index_imag", {0.0});
    const auto empty_finesse = p.optional_numbers("empty_finesse");
    const auto mirror_r = p.optional_number("mirror_r");
    const auto mirror_t = p.optional_number("mirror_t");
    const auto dx = uniform_grid(p.number("dx_start_m", 0.0), p.number("dx_stop_m", optics.wavelength),
                                 p.count("points", 201));
    p.finish();

    std::vector<EndMirror> mirrors;
    if (empty_finesse) {
        if (mirror_r || mirror_t) throw ConfigError("give either empty_finesse or mirror_r/mirror_t, not both");
        for (double f : *empty_finesse) mirrors.push_back(EndMirror::matched_to_finesse(f));
    } else {
        if (!mirror_r) throw ConfigError("missing required key 'mirror_r' (or 'empty_finesse') for optics-scan");
        EndMirror m = mirror_t ? EndMirror{*mirror_r, *mirror_t} : EndMirror::lossless(*mirror_r);
        mirrors.push_back(m);
    }

    json scans = json::array();
    std::size_t index = 0;
    for (const auto& mirror : mirrors) {
        for (double ni : index_imag) {
            CavitySystem sys;
            sys.left = sys.right = mirror;
            sys.membrane = MembraneSlab{thickness, {index_real, ni}};
            sys.length = length;
            sys.validate();
            const auto scan = scan_position(sys, dx, optics);
            const std::string name = "scan_" + std::to_string(index++) + ".csv";
            ctx.writer.add(name, scan_csv(scan));
            json entry = {{"file", name},
                          {"index_real", index_real},
                          {"index_imag", ni},
                          {"membrane_abs_r", std::abs(membrane_amplitudes(sys.membrane, optics).r)},
                          {"mirror_r", mirror.r},
                          {"mirror_t", mirror.t},
                          {"mirror_finesse", sys.mirror_finesse()}};
            entry.update(scan_errors(scan));
            scans.push_back(entry);
        }
    }
    ctx.writer.add_json("scans.json", {{"wavelength_m", optics.wavelength},
                                       {"length_m", length},
                                       {"thickness_m", thickness},
                                       {"fsr_hz", kSpeedOfLight / (2.0 * length)},
                                       {"period_m", optics.wavelength / 2.0},
                                       {"scans", scans}});
}

void run_band_diagram(RunContext& ctx) {
    Params& p = ctx.params;
    const auto reflectivities = p.numbers("power_reflectivity", {0.0, 0.08, 0.45, 0.773, 0.982});
    const double thickness = p.number("thickness_m", 50e-9);
    const OpticalConstants optics{p.number("wavelength_m", 1064e-9)};
    const std::size_t points = p.count("points", 401);
    const std::size_t modes = p.count("modes", 3);
    p.finish();
    optics.validate();

    // Mode i lies on band i % 2 with longitudinal order i: its frequency in
    // FSR units is i - detuning(delta + (i % 2) pi) / 2 pi, up to a common offset.
    const double k = optics.wavenumber();
    Csv csv({"power_reflectivity", "delta_rad", "mode", "detuning_fsr"});
    json curves = json::array();
    for (double r2 : reflectivities) {
        const MembraneSlab slab = slab_with_reflectivity(r2, thickness, k);
        const auto amp = membrane_amplitudes(slab, k);
        for (std::size_t i = 0; i < modes; ++i)
            for (double delta : uniform_grid(0.0, 2.0 * kPi, points)) {
                const double shifted = delta + (i % 2 ? kPi : 0.0);
                const double y = static_cast<double>(i) -
                                 resonance_detuning(std::abs(amp.r), amp.phase_r, shifted) / (2.0 * kPi);
                csv.row({r2, delta, static_cast<double>(i), y});
            }
        curves.push_back({{"power_reflectivity", r2}, {"index_real", slab.index.real()}, {"phase_r", amp.phase_r}});
    }
    ctx.writer.add("band_diagram.csv", csv.text());
    ctx.writer.add_json("band_diagram.json",
                        {{"thickness_m", thickness}, {"wavelength_m", optics.wavelength}, {"curves", curves}});
}

void run_fit(RunContext& ctx) {
    Params& p = ctx.params;
    FixedFitInputs fixed;
    fixed.empty_finesse = p.number("empty_finesse");
    fixed.r = p.optional_number("mirror_r");
    fixed.t = p.optional_number("mirror_t");
    fixed.thickness = p.number("thickness_m", fixed.thickness);
    fixed.index_real = p.number("index_real", fixed.index_real);
    fixed.length = p.number("length_m", fixed.length);
    fixed.wavelength = p.number("wavelength_m", fixed.wavelength);
    const auto data_file = p.optional_text("data_file");
    const auto synthetic = p.optional_number("synthetic_index_imag");
    double noise = 0.0;
    std::vector<double> dx;
    if (synthetic) {
        noise = p.number("synthetic_noise", 0.02);
        dx = uniform_grid(p.number("dx_start_m", 0.0), p.number("dx_stop_m", fixed.wavelength), p.count("points", 201));
    }
    p.finish();
    if (data_file.has_value() == synthetic.has_value())
        throw ConfigError("fit needs exactly one of 'data_file' or 'synthetic_index_imag'");

    PositionScanResult data;
    if (data_file) {
        std::filesystem::path path(*data_file);
        if (path.is_relative()) path = ctx.config_dir / path;
        data = read_scan_csv(path);
        ctx.writer.add_input(path);
    } else {
        const CavitySystem truth = fit_model_system(fixed, *synthetic);
        const double k_guess = empty_cavity_resonance(fixed.length, 2.0 * kPi / fixed.wavelength);
        data = synthesize_scan(truth, dx, k_guess, noise, ctx.seed);
        ctx.writer.add("data.csv", scan_csv(data));
    }

    const auto fit = fit_absorption(data, fixed);
    const CavitySystem model = fit_model_system(fixed, fit.im_n);
    std::vector<double> shifted(data.displacement);
    for (double& x : shifted) x += fit.offset;
    const double k_guess = empty_cavity_resonance(fixed.length, 2.0 * kPi / fixed.wavelength);
    auto curve = scan_position(model, shifted, k_guess);
    curve.displacement = data.displacement;
    ctx.writer.add("model.csv", scan_csv(curve));

    json fixed_json = {{"empty_finesse", fixed.empty_finesse},
                       {"mirror_r", fit.mirror_r},
                       {"mirror_t", fit.mirror_t},
                       {"thickness_m", fixed.thickness},
                       {"index_real", fixed.index_real},
                       {"length_m", fixed.length},
                       {"wavelength_m", fixed.wavelength}};
    json doc = {{"im_n", fit.im_n},
                {"im_n_sigma", fit.im_n_sigma},
                {"residual", fit.residual},
                {"excluded_points", fit.excluded_points},
                {"offset_m", fit.offset},
                {"iterations", fit.iterations},
                {"fixed", fixed_json}};
    if (synthetic) doc["synthetic"] = {{"index_imag", *synthetic}, {"noise", noise}};
    ctx.writer.add_json("fit.json", doc);
}

}  // namespace mim::cli
