#include "sentinel/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

using nlohmann::json;

// Re-throws a nested InvalidParameter with `prefix.` in front of its field.
template <typename F>
void scoped(const std::string& prefix, F&& body) {
    try {
        body();
    } catch (const InvalidParameter& e) {
        const std::string what = e.what();
        const std::string reason = what.substr(std::min(what.size(), e.field().size() + 2));
        throw InvalidParameter(prefix + "." + e.field(), reason);
    }
}

// A JSON object being consumed key by key; leftover keys are an error.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw InvalidParameter(path_.empty() ? "<root>" : path_, "must be a table/object");
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void read(const std::string& key, double& out) {
        if (const json* v = get(key)) out = as_double(*v, field(key));
    }
    void read(const std::string& key, int& out) {
        if (const json* v = get(key)) out = static_cast<int>(as_int(*v, field(key)));
    }
    void read(const std::string& key, std::int64_t& out) {
        if (const json* v = get(key)) out = as_int(*v, field(key));
    }
    void read(const std::string& key, bool& out) {
        if (const json* v = get(key)) {
            if (!v->is_boolean()) throw InvalidParameter(field(key), "must be true or false");
            out = v->get<bool>();
        }
    }
    void read(const std::string& key, std::vector<double>& out) {
        if (const json* v = get(key)) out = as_double_array(*v, field(key));
    }
    void read(const std::string& key, std::optional<double>& out) {
        if (const json* v = get(key)) out = as_double(*v, field(key));
    }

    Section sub(const std::string& key) {
        static const json empty = json::object();
        const json* v = get(key);
        return Section(v ? *v : empty, field(key));
    }

    void finish() const {
        for (const auto& [key, value] : node_.items())
            if (!seen_.count(key)) throw InvalidParameter(field(key), "unknown key");
    }

    static double as_double(const json& v, const std::string& field) {
        if (!v.is_number()) throw InvalidParameter(field, "must be a number");
        return v.get<double>();
    }
    static std::int64_t as_int(const json& v, const std::string& field) {
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
        }
        throw InvalidParameter(field, "must be an integer");
    }
    static std::vector<double> as_double_array(const json& v, const std::string& field) {
        if (!v.is_array()) throw InvalidParameter(field, "must be an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], field + "[" + std::to_string(i) + "]"));
        return out;
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

DistributionSpec read_distribution(Section& parent, const std::string& key, const DistributionSpec& fallback) {
    const json* node = parent.get(key);
    if (!node) return fallback;
    Section s(*node, parent.field(key));
    DistributionSpec spec;
    const json* family = s.get("family");
    if (!family || !family->is_string()) throw InvalidParameter(s.field("family"), "must name a distribution family");
    scoped(parent.field(key), [&] { spec.family = parse_family(family->get<std::string>()); });
    Section params = s.sub("params");
    if (spec.family == Family::categorical) {
        params.read("probs", spec.probs);
    } else if (const json* p = s.get("params")) {
        for (const auto& [name, value] : p->items()) {
            params.get(name);
            spec.params[name] = Section::as_double(value, params.field(name));
        }
    }
    params.finish();
    s.finish();
    scoped(s.field("params"), [&] { spec.validate(); });
    return spec;
}

json distribution_json(const DistributionSpec& spec) {
    json params = json::object();
    if (spec.family == Family::categorical) params["probs"] = spec.probs;
    for (const auto& [k, v] : spec.params) params[k] = v;
    return {{"family", family_name(spec.family)}, {"params", params}};
}

std::vector<double> read_thresholds(Section& parent, const std::vector<double>& fallback) {
    const json* node = parent.get("thresholds");
    if (!node) return fallback;
    const std::string field = parent.field("thresholds");
    if (node->is_array()) return Section::as_double_array(*node, field);
    Section s(*node, field);
    double from = 0.0, to = 0.0, by = 0.0;
    for (const char* key : {"from", "to", "by"})
        if (!node->contains(key)) throw InvalidParameter(s.field(key), "is required");
    s.read("from", from);
    s.read("to", to);
    s.read("by", by);
    s.finish();
    if (!(by > 0.0)) throw InvalidParameter(s.field("by"), "must be > 0");
    return threshold_sequence(from, to, by);
}

json toml_node_json(const toml::node& node) {
    if (auto t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_node_json(v);
        return out;
    }
    if (auto a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_node_json(v));
        return out;
    }
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_boolean()) return v->get();
    if (auto v = node.as_string()) return v->get();
    throw InvalidParameter("<config>", "dates and times are not supported");
}

}  // namespace

SsirParams RunConfig::default_epidemic() {
    SsirParams p;
    p.N = 0;
    return p;
}

void RunConfig::validate() const {
    scoped("population.school_count", [&] { population.school_count.validate(); });
    scoped("population.enrollment", [&] { population.enrollment.validate(); });
    scoped("population.households", [&] { population.households.validate(); });
    scoped("population", [&] { population.validate(); });
    scoped("epidemic", [&] {
        SsirParams probe = epidemic;
        if (probe.N == 0) probe.N = std::max<std::int64_t>(probe.inf_init, 1);
        if (epidemic.N < 0) throw InvalidParameter("N", "must be >= 1 (or 0 for the population size)");
        probe.validate();
    });
    scoped("surveillance", [&] { surveillance.validate(); });
    scoped("evaluation", [&] {
        if (evaluation.maxlag < 1) throw InvalidParameter("maxlag", "must be >= 1");
        if (evaluation.maxlag > surveillance.maxlag)
            throw InvalidParameter("maxlag", "must not exceed surveillance.maxlag");
        validate_thresholds(evaluation.thresholds);
        evaluation.metrics.validate();
        const FitOptions& f = evaluation.fit;
        if (f.max_iterations < 1) throw InvalidParameter("fit.max_iterations", "must be >= 1");
        if (!(f.tolerance > 0.0)) throw InvalidParameter("fit.tolerance", "must be > 0");
        if (!(f.initial_tau_sq > 0.0)) throw InvalidParameter("fit.initial_tau_sq", "must be > 0");
        if (!(f.ridge_penalty > 0.0)) throw InvalidParameter("fit.ridge_penalty", "must be > 0");
        if (!(f.boundary_tau_sq >= 0.0)) throw InvalidParameter("fit.boundary_tau_sq", "must be >= 0");
    });
    if (threads < 1) throw InvalidParameter("threads", "must be >= 1");
    if (plot_year < 1) throw InvalidParameter("plot_year", "must be >= 1");
}

RunConfig config_from_json(const json& doc) {
    RunConfig c;
    Section root(doc, "");
    if (const json* v = root.get("seed")) {
        const std::int64_t s = Section::as_int(*v, "seed");
        if (s < 0) throw InvalidParameter("seed", "must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    root.read("threads", c.threads);
    root.read("plot_year", c.plot_year);
    if (const json* v = root.get("output_dir")) {
        if (!v->is_string()) throw InvalidParameter("output_dir", "must be a string");
        c.output_dir = v->get<std::string>();
    }

    {
        Section s = root.sub("population");
        s.read("num_catchments", c.population.num_catchments);
        s.read("catchment_side", c.population.catchment_side);
        c.population.school_count = read_distribution(s, "school_count", c.population.school_count);
        c.population.enrollment = read_distribution(s, "enrollment", c.population.enrollment);
        Section h = s.sub("households");
        auto& hc = c.population.households;
        h.read("prop_parent_couple", hc.prop_parent_couple);
        h.read("prop_children_couple", hc.prop_children_couple);
        h.read("prop_children_lone", hc.prop_children_lone);
        h.read("prop_elem_age", hc.prop_elem_age);
        h.read("prop_house_size", hc.prop_house_size);
        h.read("prop_house_children", hc.prop_house_children);
        h.finish();
        s.finish();
    }
    {
        Section s = root.sub("epidemic");
        auto& e = c.epidemic;
        s.read("N", e.N);
        s.read("T", e.T);
        s.read("alpha", e.alpha);
        s.read("spark", e.spark);
        s.read("avg_start", e.avg_start);
        s.read("min_start", e.min_start);
        s.read("start_sd", e.start_sd);
        s.read("inf_period", e.inf_period);
        s.read("inf_init", e.inf_init);
        s.read("report_prop", e.report_prop);
        s.read("report_delay_mean", e.report_delay_mean);
        s.read("rep", e.rep);
        s.finish();
    }
    {
        Section s = root.sub("surveillance");
        auto& a = c.surveillance;
        s.read("p_base", a.p_base);
        s.read("p_sick", a.p_sick);
        s.read("maxlag", a.maxlag);
        s.read("window_days", a.window_days);
        s.read("year_length", a.year_length);
        if (const json* v = s.get("case_source")) {
            const std::string name = v->is_string() ? v->get<std::string>() : "";
            if (name == "reported") a.case_source = CaseSource::reported;
            else if (name == "new_infections") a.case_source = CaseSource::new_infections;
            else throw InvalidParameter(s.field("case_source"), "must be \"reported\" or \"new_infections\"");
        }
        s.finish();
    }
    {
        Section s = root.sub("evaluation");
        auto& ev = c.evaluation;
        ev.maxlag = c.surveillance.maxlag;
        s.read("maxlag", ev.maxlag);
        ev.thresholds = read_thresholds(s, ev.thresholds);
        s.read("tau_opt", ev.metrics.tau_opt);
        ev.metrics.tau_max = ev.metrics.tau_opt;
        s.read("tau_max", ev.metrics.tau_max);
        s.read("k", ev.metrics.k);
        s.read("a", ev.metrics.a);
        s.read("add_uses_first_alert", ev.metrics.add_uses_first_alert);
        s.read("year_start", ev.metrics.year_start);
        Section f = s.sub("fit");
        f.read("max_iterations", ev.fit.max_iterations);
        f.read("tolerance", ev.fit.tolerance);
        f.read("initial_tau_sq", ev.fit.initial_tau_sq);
        f.read("ridge_penalty", ev.fit.ridge_penalty);
        f.read("boundary_tau_sq", ev.fit.boundary_tau_sq);
        f.finish();
        s.finish();
    }
    root.finish();
    c.validate();
    return c;
}

json toml_to_json(const std::string& toml_text) {
    try {
        const toml::table table = toml::parse(toml_text);
        return toml_node_json(table);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "TOML parse error at line " << e.source().begin.line << ", column " << e.source().begin.column << ": "
            << e.description();
        throw Error(Stage::config, msg.str());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Stage::config, "cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json doc;
    if (path.extension() == ".json") {
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw Error(Stage::config, "JSON parse error in " + path.string() + ": " + e.what());
        }
    } else {
        doc = toml_to_json(text);
    }
    return config_from_json(doc);
}

json config_to_json(const RunConfig& c) {
    const auto& hc = c.population.households;
    const auto& e = c.epidemic;
    const auto& a = c.surveillance;
    const auto& ev = c.evaluation;
    json epidemic = {{"N", e.N},
                     {"T", e.T},
                     {"alpha", e.alpha},
                     {"spark", e.spark},
                     {"avg_start", e.avg_start},
                     {"min_start", e.min_start},
                     {"inf_period", e.inf_period},
                     {"inf_init", e.inf_init},
                     {"report_prop", e.report_prop},
                     {"report_delay_mean", e.report_delay_mean},
                     {"rep", e.rep}};
    if (e.start_sd) epidemic["start_sd"] = *e.start_sd;
    return {
        {"seed", c.seed},
        {"threads", c.threads},
        {"plot_year", c.plot_year},
        {"output_dir", c.output_dir.string()},
        {"population",
         {{"num_catchments", c.population.num_catchments},
          {"catchment_side", c.population.catchment_side},
          {"school_count", distribution_json(c.population.school_count)},
          {"enrollment", distribution_json(c.population.enrollment)},
          {"households",
           {{"prop_parent_couple", hc.prop_parent_couple},
            {"prop_children_couple", hc.prop_children_couple},
            {"prop_children_lone", hc.prop_children_lone},
            {"prop_elem_age", hc.prop_elem_age},
            {"prop_house_size", hc.prop_house_size},
            {"prop_house_children", hc.prop_house_children}}}}},
        {"epidemic", epidemic},
        {"surveillance",
         {{"p_base", a.p_base},
          {"p_sick", a.p_sick},
          {"maxlag", a.maxlag},
          {"window_days", a.window_days},
          {"year_length", a.year_length},
          {"case_source", a.case_source == CaseSource::reported ? "reported" : "new_infections"}}},
        {"evaluation",
         {{"maxlag", ev.maxlag},
          {"thresholds", ev.thresholds},
          {"tau_opt", ev.metrics.tau_opt},
          {"tau_max", ev.metrics.tau_max},
          {"k", ev.metrics.k},
          {"a", ev.metrics.a},
          {"add_uses_first_alert", ev.metrics.add_uses_first_alert},
          {"year_start", ev.metrics.year_start},
          {"fit",
           {{"max_iterations", ev.fit.max_iterations},
            {"tolerance", ev.fit.tolerance},
            {"initial_tau_sq", ev.fit.initial_tau_sq},
            {"ridge_penalty", ev.fit.ridge_penalty},
            {"boundary_tau_sq", ev.fit.boundary_tau_sq}}}}}};
}

}  // namespace sentinel
