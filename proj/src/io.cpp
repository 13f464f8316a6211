#include "loadid/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "loadid/errors.hpp"

namespace loadid {

namespace {

/// Shortest representation that round-trips a double exactly.
std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

double parse_double(const std::string& token, std::size_t row,
                    const char* column) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        std::ostringstream os;
        os << "CSV column '" << column << "' at data row " << row
           << " is not a number: '" << token << "'";
        throw ValidationError(os.str());
    }
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

double get_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ValidationError(std::string("JSON object is missing numeric field '") +
                              key + "'");
    }
    return j.at(key).get<double>();
}

} // namespace

void write_series_csv(const std::filesystem::path& path,
                      const MeasurementSeries& series) {
    series.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "t,v,theta,p,q\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_double(series.t[i]) << ',' << format_double(series.v[i])
            << ',' << format_double(series.theta[i]) << ','
            << format_double(series.p[i]) << ',' << format_double(series.q[i])
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

MeasurementSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());

    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("CSV is empty: " + path.string());
    }
    strip_cr(line);
    if (line != "t,v,theta,p,q") {
        throw ValidationError("CSV header must be 't,v,theta,p,q', got '" + line +
                              "'");
    }

    static const char* columns[] = {"t", "v", "theta", "p", "q"};
    MeasurementSeries series;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        ++row;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            std::ostringstream os;
            os << "CSV data row " << row << " has " << fields.size()
               << " fields, expected 5";
            throw ValidationError(os.str());
        }
        series.t.push_back(parse_double(fields[0], row, columns[0]));
        series.v.push_back(parse_double(fields[1], row, columns[1]));
        series.theta.push_back(parse_double(fields[2], row, columns[2]));
        series.p.push_back(parse_double(fields[3], row, columns[3]));
        series.q.push_back(parse_double(fields[4], row, columns[4]));
    }
    series.validate();
    return series;
}

nlohmann::json to_json(const IMParamsTransformed& d) {
    return nlohmann::json{{"a", d.a}, {"b", d.b}, {"h2", d.h2}, {"tm", d.tm}};
}

nlohmann::json to_json(const IMParamsPhysical& phys) {
    return nlohmann::json{{"x", phys.x},
                          {"xp", phys.xp},
                          {"td0", phys.td0},
                          {"h2", phys.h2},
                          {"tm", phys.tm}};
}

nlohmann::json to_json(const ZIPParams& zip) {
    return nlohmann::json{{"pz", zip.pz}, {"pi", zip.pi}, {"pp", zip.pp},
                          {"qz", zip.qz}, {"qi", zip.qi}, {"qp", zip.qp}};
}

nlohmann::json to_json(const CompositeLoad& load) {
    nlohmann::json motor = load.physical_mode()
                               ? to_json(std::get<IMParamsPhysical>(load.motor))
                               : to_json(std::get<IMParamsTransformed>(load.motor));
    return nlohmann::json{{"motor", std::move(motor)}, {"zip", to_json(load.zip)}};
}

nlohmann::json to_json(const IdentificationResult& result) {
    nlohmann::json starts = nlohmann::json::array();
    for (const auto& s : result.starts) {
        starts.push_back(nlohmann::json{{"d_init", to_json(s.d_init)},
                                        {"d_final", to_json(s.d_final)},
                                        {"of_final", s.of_final},
                                        {"iterations", s.iterations},
                                        {"converged", s.converged},
                                        {"evaluations", s.evaluations},
                                        {"of_trace", s.of_trace}});
    }
    const CompositeLoad model{result.d_opt, result.os_opt};
    return nlohmann::json{
        {"d_opt", to_json(result.d_opt)},
        {"os_opt", to_json(result.os_opt)},
        {"of_opt", result.of_opt},
        {"starts", std::move(starts)},
        {"window",
         {{"warmup_skip", result.policy.warmup_skip},
          {"fit_start", result.policy.fit_start},
          {"fit_end", result.policy.fit_end},
          {"snr_estimate_db", result.window_snr_estimate_db}}},
        {"elapsed_seconds", result.elapsed_seconds},
        {"model", to_json(model)},
    };
}

nlohmann::json to_json(const QConvexReport& report) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : report.failures) {
        failures.push_back(nlohmann::json{{"left", to_json(f.left)},
                                          {"right", to_json(f.right)},
                                          {"of_left", f.of_left},
                                          {"of_right", f.of_right},
                                          {"of_mid", f.of_mid}});
    }
    return nlohmann::json{{"n_pairs", report.n_pairs},
                          {"n_success", report.n_success},
                          {"n_resampled", report.n_resampled},
                          {"sp_percent", report.sp_percent()},
                          {"failures", std::move(failures)}};
}

nlohmann::json to_json(const ReliabilityReport& report) {
    return nlohmann::json{{"sp_percent", report.sp_percent},
                          {"sp_signed_percent", report.sp_signed_percent},
                          {"n_starts", report.n_starts},
                          {"best", to_json(report.best)}};
}

nlohmann::json to_json(const ValidationReport& report) {
    return nlohmann::json{{"fd_p", report.fd_p},
                          {"fd_q", report.fd_q},
                          {"fd", report.fd},
                          {"event",
                           {{"t_fault", report.event.t_fault},
                            {"t_clear", report.event.t_clear},
                            {"v_sag", report.event.v_sag},
                            {"recovery_tau", report.event.recovery_tau}}}};
}

nlohmann::json to_json(const BatchStats& stats) {
    static const char* names[] = {"a", "b", "h2", "tm"};
    nlohmann::json mu, sigma;
    for (std::size_t j = 0; j < 4; ++j) {
        mu[names[j]] = stats.mu[j];
        sigma[names[j]] = stats.sigma[j];
    }
    return nlohmann::json{{"mu", std::move(mu)},
                          {"sigma", std::move(sigma)},
                          {"mean_snr_db", stats.mean_snr_db},
                          {"n", stats.n}};
}

IMParamsTransformed transformed_from_json(const nlohmann::json& j) {
    IMParamsTransformed d{get_number(j, "a"), get_number(j, "b"),
                          get_number(j, "h2"), get_number(j, "tm")};
    d.validate();
    return d;
}

IMParamsPhysical physical_from_json(const nlohmann::json& j) {
    IMParamsPhysical phys{get_number(j, "x"), get_number(j, "xp"),
                          get_number(j, "td0"), get_number(j, "h2"),
                          get_number(j, "tm")};
    phys.validate();
    return phys;
}

ZIPParams zip_from_json(const nlohmann::json& j) {
    ZIPParams zip{get_number(j, "pz"), get_number(j, "pi"), get_number(j, "pp"),
                  get_number(j, "qz"), get_number(j, "qi"), get_number(j, "qp")};
    zip.validate();
    return zip;
}

CompositeLoad load_from_json(const nlohmann::json& j) {
    if (!j.contains("motor") || !j.contains("zip")) {
        throw ValidationError("model JSON needs 'motor' and 'zip' objects");
    }
    const auto& motor = j.at("motor");
    CompositeLoad load;
    if (motor.contains("a")) {
        load.motor = transformed_from_json(motor);
    } else if (motor.contains("x")) {
        load.motor = physical_from_json(motor);
    } else {
        throw ValidationError("motor JSON must carry either {a,b,h2,tm} or {x,xp,td0,h2,tm}");
    }
    load.zip = zip_from_json(j.at("zip"));
    return load;
}

CompositeLoad read_model_json(const std::filesystem::path& path) {
    const nlohmann::json j = read_json_file(path);
    if (j.contains("motor")) return load_from_json(j);
    if (j.contains("model")) return load_from_json(j.at("model"));
    if (j.contains("d_opt") && j.contains("os_opt")) {
        return CompositeLoad{transformed_from_json(j.at("d_opt")),
                             zip_from_json(j.at("os_opt"))};
    }
    throw ValidationError("no load model found in " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " +
                              e.what());
    }
    return j;
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void write_landscape_csv(const std::filesystem::path& path,
                         const LandscapeGrid& grid) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());

    auto params = [](const IMParamsTransformed& d) {
        std::ostringstream os;
        os << format_double(d.a) << ' ' << format_double(d.b) << ' '
           << format_double(d.h2) << ' ' << format_double(d.tm);
        return os.str();
    };
    auto axis = [](const GridAxis& ax) {
        std::ostringstream os;
        os << format_double(ax.k_min) << ':' << format_double(ax.k_max) << ':'
           << ax.count;
        return os.str();
    };
    out << "# center=" << params(grid.d_center) << ";d1=" << params(grid.d1)
        << ";d2=" << params(grid.d2) << ";k1=" << axis(grid.k1)
        << ";k2=" << axis(grid.k2) << ";sentinel="
        << format_double(LandscapeGrid::kInfeasibleSentinel) << '\n';
    for (std::size_t i = 0; i < grid.k1.count; ++i) {
        for (std::size_t j = 0; j < grid.k2.count; ++j) {
            if (j) out << ',';
            out << format_double(grid.at(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace loadid
