#include "sentinel/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sentinel/error.hpp"

namespace sentinel {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
            else if constexpr (std::is_same_v<T, double>) return format_double(v);
            else return v;
        },
        c);
}

nlohmann::json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return nullptr;
                return v;
            } else return v;
        },
        c);
}

Cell opt_cell(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }
Cell opt_cell(const std::optional<int>& v) { return v ? Cell{static_cast<std::int64_t>(*v)} : Cell{}; }
Cell int_cell(std::int64_t v) { return Cell{v}; }

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_csv(const Table& table, std::ostream& out) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
        out << '\n';
    }
}

nlohmann::json table_to_json(const Table& table) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json rec = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i) rec[table.columns[i]] = cell_json(row[i]);
        records.push_back(std::move(rec));
    }
    return records;
}

void write_table(const Table& table, const fs::path& path, TableFormat format) {
    auto out = open_output(path);
    if (format == TableFormat::csv) write_csv(table, out);
    else out << table_to_json(table).dump() << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const nlohmann::json& doc, const fs::path& path) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void write_text(const std::string& text, const fs::path& path) {
    auto out = open_output(path);
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::optional<std::size_t> CsvData::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    return std::nullopt;
}

std::size_t CsvData::column(std::string_view name) const {
    if (auto i = find_column(name)) return *i;
    throw IoError("missing column '" + std::string(name) + "'");
}

CsvData parse_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        fields.push_back(std::move(cur));
        return fields;
    };

    CsvData data;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (header) {
            data.columns = std::move(fields);
            header = false;
            continue;
        }
        if (fields.size() != data.columns.size())
            throw IoError("CSV row " + std::to_string(data.rows.size() + 2) + " has " + std::to_string(fields.size()) +
                          " fields, header has " + std::to_string(data.columns.size()));
        data.rows.push_back(std::move(fields));
    }
    if (header) throw IoError("CSV input is empty");
    return data;
}

CsvData read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_csv(in);
}

std::int64_t parse_int(std::string_view field, std::string_view column) {
    std::int64_t v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        // integer-valued reals such as "12.0" are accepted
        const double d = parse_double(field, column);
        if (d != std::floor(d)) throw IoError("column " + std::string(column) + ": '" + std::string(field) + "' is not an integer");
        return static_cast<std::int64_t>(d);
    }
    return v;
}

double parse_double(std::string_view field, std::string_view column) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || field.empty())
        throw IoError("column " + std::string(column) + ": '" + std::string(field) + "' is not a number");
    return v;
}

std::optional<double> parse_optional_double(std::string_view field, std::string_view column) {
    if (field.empty() || field == "NA") return std::nullopt;
    return parse_double(field, column);
}

Table households_table(const PopulationFrame& frame) {
    Table t;
    t.columns = {"id", "catchment_id", "has_children", "parent_type", "num_children", "num_elem_children", "size",
                 "x", "y"};
    for (const auto& h : frame.households) {
        Cell parent;
        if (h.parent_type) parent = std::string(*h.parent_type == ParentType::couple ? "couple" : "lone");
        t.rows.push_back({int_cell(h.id), int_cell(h.catchment_id), int_cell(h.has_children ? 1 : 0), parent,
                          int_cell(h.num_children), int_cell(h.num_elem_children), int_cell(h.size),
                          h.location ? Cell{h.location->x} : Cell{}, h.location ? Cell{h.location->y} : Cell{}});
    }
    return t;
}

Table individuals_table(const PopulationFrame& frame) {
    Table t;
    t.columns = {"id", "household_id", "catchment_id", "is_elem_child", "school_id", "x", "y"};
    for (const auto& p : frame.individuals) {
        t.rows.push_back({int_cell(p.id), int_cell(p.household_id), int_cell(p.catchment_id),
                          int_cell(p.is_elem_child ? 1 : 0), opt_cell(p.school_id), Cell{p.location.x},
                          Cell{p.location.y}});
    }
    return t;
}

PopulationFrame read_individuals(const fs::path& path) {
    const CsvData csv = read_csv(path);
    const auto c_id = csv.column("id"), c_hh = csv.column("household_id"), c_catch = csv.column("catchment_id"),
               c_elem = csv.column("is_elem_child"), c_school = csv.column("school_id"), c_x = csv.column("x"),
               c_y = csv.column("y");
    PopulationFrame frame;
    frame.individuals.reserve(csv.rows.size());
    for (const auto& r : csv.rows) {
        Individual p;
        p.id = static_cast<int>(parse_int(r[c_id], "id"));
        p.household_id = static_cast<int>(parse_int(r[c_hh], "household_id"));
        p.catchment_id = static_cast<int>(parse_int(r[c_catch], "catchment_id"));
        p.is_elem_child = parse_int(r[c_elem], "is_elem_child") != 0;
        if (!r[c_school].empty()) p.school_id = static_cast<int>(parse_int(r[c_school], "school_id"));
        p.location = {parse_double(r[c_x], "x"), parse_double(r[c_y], "y")};
        frame.individuals.push_back(p);
    }
    return frame;
}

Table epidemic_table(const std::vector<EpidemicSeries>& series) {
    Table t;
    t.columns = {"rep", "day", "S", "I", "R", "new_inf", "reported"};
    for (const auto& s : series) {
        for (int d = 0; d < s.horizon(); ++d) {
            const auto i = static_cast<std::size_t>(d);
            t.rows.push_back({int_cell(s.replicate_id), int_cell(d + 1), int_cell(s.S[i]), int_cell(s.I[i]),
                              int_cell(s.R[i]), int_cell(s.new_inf[i]), int_cell(s.reported[i])});
        }
    }
    return t;
}

std::vector<EpidemicSeries> read_epidemic(const fs::path& path, int inf_period) {
    const CsvData csv = read_csv(path);
    const auto c_rep = csv.column("rep"), c_day = csv.column("day"), c_s = csv.column("S"), c_i = csv.column("I"),
               c_r = csv.column("R"), c_new = csv.column("new_inf"), c_rep_cases = csv.column("reported");
    std::map<int, std::map<int, std::array<std::int64_t, 5>>> by_rep;
    for (const auto& r : csv.rows) {
        const int rep = static_cast<int>(parse_int(r[c_rep], "rep"));
        const int day = static_cast<int>(parse_int(r[c_day], "day"));
        by_rep[rep][day] = {parse_int(r[c_s], "S"), parse_int(r[c_i], "I"), parse_int(r[c_r], "R"),
                            parse_int(r[c_new], "new_inf"), parse_int(r[c_rep_cases], "reported")};
    }
    std::vector<EpidemicSeries> out;
    for (const auto& [rep, days] : by_rep) {
        EpidemicSeries s;
        s.replicate_id = rep;
        s.inf_period = inf_period;
        int expected = 1;
        for (const auto& [day, v] : days) {
            if (day != expected++) throw IoError("epidemic file: replicate " + std::to_string(rep) + " skips day " + std::to_string(day - 1));
            s.S.push_back(v[0]);
            s.I.push_back(v[1]);
            s.R.push_back(v[2]);
            s.new_inf.push_back(v[3]);
            s.reported.push_back(v[4]);
            if (s.start_day == 0 && v[3] > 0) s.start_day = day;
        }
        s.reference_date = compute_reference_date(s.reported);
        out.push_back(std::move(s));
    }
    return out;
}

nlohmann::json epidemic_summary_json(const EpidemicSummary& summary) {
    return {{"n_sims", summary.n_sims},
            {"avg_total_infected", summary.avg_total_infected},
            {"avg_total_reported", summary.avg_total_reported},
            {"avg_peak_infected", summary.avg_peak_infected}};
}

Table surveillance_table(const SurveillanceDataset& data) {
    Table t;
    t.columns = SurveillanceDataset::column_names(data.maxlag);
    for (const auto& r : data.rows) {
        std::vector<Cell> row{int_cell(r.date),          int_cell(r.school_year), Cell{r.pct_absent},
                              int_cell(r.absent),        int_cell(r.absent_sick), int_cell(r.new_inf),
                              int_cell(r.reported_cases), int_cell(r.case_flag),  Cell{r.sinterm},
                              Cell{r.costerm},           int_cell(r.window),      int_cell(r.ref_date)};
        for (const auto& lag : r.lags) row.push_back(opt_cell(lag));
        t.rows.push_back(std::move(row));
    }
    return t;
}

SurveillanceDataset surveillance_from_csv(const CsvData& csv) {
    SurveillanceDataset ds;
    int maxlag = -1;
    while (csv.find_column("lag" + std::to_string(maxlag + 1))) ++maxlag;
    if (maxlag < 0) throw IoError("surveillance data needs lag columns lag0..lagN");
    ds.maxlag = maxlag;

    const auto c_date = csv.column("Date"), c_year = csv.column("ScYr"), c_pct = csv.column("pct_absent"),
               c_abs = csv.column("absent"), c_sick = csv.column("absent_sick"), c_new = csv.column("new_inf"),
               c_rep = csv.column("reported_cases"), c_case = csv.column("Case"), c_sin = csv.column("sinterm"),
               c_cos = csv.column("costerm"), c_win = csv.column("window"), c_ref = csv.column("ref_date");
    std::vector<std::size_t> c_lags;
    for (int k = 0; k <= maxlag; ++k) c_lags.push_back(csv.column("lag" + std::to_string(k)));

    ds.rows.reserve(csv.rows.size());
    for (const auto& f : csv.rows) {
        SurveillanceRow r;
        r.date = static_cast<int>(parse_int(f[c_date], "Date"));
        r.school_year = static_cast<int>(parse_int(f[c_year], "ScYr"));
        r.pct_absent = parse_double(f[c_pct], "pct_absent");
        r.absent = parse_int(f[c_abs], "absent");
        r.absent_sick = parse_int(f[c_sick], "absent_sick");
        r.new_inf = parse_int(f[c_new], "new_inf");
        r.reported_cases = parse_int(f[c_rep], "reported_cases");
        r.case_flag = static_cast<int>(parse_int(f[c_case], "Case"));
        r.sinterm = parse_double(f[c_sin], "sinterm");
        r.costerm = parse_double(f[c_cos], "costerm");
        r.window = static_cast<int>(parse_int(f[c_win], "window"));
        r.ref_date = static_cast<int>(parse_int(f[c_ref], "ref_date"));
        for (std::size_t k = 0; k < c_lags.size(); ++k)
            r.lags.push_back(parse_optional_double(f[c_lags[k]], csv.columns[c_lags[k]]));
        ds.rows.push_back(std::move(r));
    }
    ds.normalize();
    return ds;
}

SurveillanceDataset read_surveillance(const fs::path& path) { return surveillance_from_csv(read_csv(path)); }

nlohmann::json fit_json(const ModelFit& fit) {
    nlohmann::json beta = nlohmann::json::array(), se = nlohmann::json::array();
    for (double b : fit.beta) beta.push_back(finite_or_null(b));
    for (double s : fit.std_errors) se.push_back(finite_or_null(s));
    return {{"lag", fit.lag},
            {"beta", beta},
            {"std_errors", se},
            {"tau_sq", fit.tau_sq},
            {"training_years", fit.years},
            {"gamma", fit.gamma},
            {"log_likelihood", finite_or_null(fit.log_likelihood)},
            {"converged", fit.converged},
            {"iterations", fit.iterations},
            {"random_effect", fit.random_effect},
            {"ridge", fit.ridge}};
}

Table metric_matrix_table(const MetricGrid& grid, Metric m) {
    Table t;
    t.columns.push_back("lag");
    for (double th : grid.thresholds) t.columns.push_back(format_double(th));
    const auto& matrix = grid.matrices.at(m);
    for (std::size_t li = 0; li < grid.lags.size(); ++li) {
        std::vector<Cell> row{int_cell(grid.lags[li])};
        for (std::size_t ti = 0; ti < grid.thresholds.size(); ++ti) row.emplace_back(matrix[li][ti]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

nlohmann::json alert_summary_json(const MetricGrid& grid) {
    nlohmann::json metrics = nlohmann::json::object();
    for (Metric m : kAllMetrics) {
        const auto& stats = grid.stats.at(m);
        const auto& best = grid.best.at(m);
        metrics[metric_name(m)] = {{"mean", finite_or_null(stats.mean)},
                                   {"variance", finite_or_null(stats.variance)},
                                   {"optimal_lag", best ? nlohmann::json(best->lag) : nlohmann::json(nullptr)},
                                   {"optimal_threshold", best ? nlohmann::json(best->threshold) : nlohmann::json(nullptr)},
                                   {"minimum", best ? finite_or_null(best->value) : nlohmann::json(nullptr)}};
    }
    nlohmann::json years = nlohmann::json::array();
    for (const auto& ya : grid.years) {
        nlohmann::json first = nlohmann::json::object(), all = nlohmann::json::object();
        for (Metric m : kAllMetrics) {
            const auto f = ya.first_alert(m);
            first[metric_name(m)] = f ? nlohmann::json(*f) : nlohmann::json(nullptr);
            auto it = ya.alert_days.find(m);
            all[metric_name(m)] = it == ya.alert_days.end() ? nlohmann::json::array() : nlohmann::json(it->second);
        }
        years.push_back({{"year", ya.year},
                         {"ref_date", ya.ref ? nlohmann::json(*ya.ref) : nlohmann::json(nullptr)},
                         {"trainable", ya.trainable},
                         {"first_alert", first},
                         {"alert_days", all}});
    }
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& [li, ti] : grid.failed_cells)
        failed.push_back({{"lag", grid.lags[li]}, {"threshold", grid.thresholds[ti]}});
    return {{"metrics", metrics},
            {"years", years},
            {"lags", grid.lags},
            {"thresholds", grid.thresholds},
            {"evaluable_years", grid.evaluable_years},
            {"weights", grid.weights},
            {"failed_cells", failed}};
}

Table alert_years_table(const MetricGrid& grid) {
    Table t;
    t.columns = {"year", "ref_date"};
    for (Metric m : kAllMetrics) t.columns.push_back(metric_name(m));
    for (const auto& ya : grid.years) {
        std::vector<Cell> row{int_cell(ya.year), opt_cell(ya.ref)};
        for (Metric m : kAllMetrics) row.push_back(opt_cell(ya.first_alert(m)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<StoredYearAlerts> read_alert_summary(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    std::vector<StoredYearAlerts> out;
    for (const auto& y : doc.at("years")) {
        StoredYearAlerts s;
        s.year = y.at("year").get<int>();
        if (!y.at("ref_date").is_null()) s.ref = y.at("ref_date").get<int>();
        for (Metric m : kAllMetrics) s.alert_days[m] = y.at("alert_days").at(metric_name(m)).get<std::vector<int>>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace sentinel
