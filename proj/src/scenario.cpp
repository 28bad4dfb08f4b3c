#include "wstreamlet/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace wstreamlet::config {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* channel_name(ChannelType c) {
    switch (c) {
        case ChannelType::Homogeneous: return "homogeneous";
        case ChannelType::TwoClass: return "two_class";
        case ChannelType::Wired: return "wired";
    }
    return "homogeneous";
}

ChannelType channel_from(const std::string& s) {
    if (s == "homogeneous") return ChannelType::Homogeneous;
    if (s == "two_class") return ChannelType::TwoClass;
    if (s == "wired") return ChannelType::Wired;
    throw std::invalid_argument("config field `channel` has unknown value: " + s);
}

const char* policy_name(Policy p) {
    switch (p) {
        case Policy::Cale: return "cale";
        case Policy::Random: return "random";
        case Policy::Oracle: return "oracle";
    }
    return "cale";
}

Policy policy_from(const std::string& s) {
    if (s == "cale") return Policy::Cale;
    if (s == "random") return Policy::Random;
    if (s == "oracle") return Policy::Oracle;
    throw std::invalid_argument("config field `policy` has unknown value: " + s);
}

ordered_json to_json_object(const ScenarioConfig& c) {
    ordered_json j;
    j["experiment"] = c.experiment;
    j["n"] = c.n;
    j["f"] = c.f();
    j["t_slot_ms"] = c.t_slot_ms;
    j["t_guard_ms"] = c.t_guard_ms;
    j["k_tx"] = c.k_tx;
    j["channel"] = channel_name(c.channel);
    j["p_h"] = c.p_h;
    j["beta"] = c.beta;
    j["p_good"] = c.p_good;
    j["p_fade"] = c.p_fade;
    j["policy"] = policy_name(c.policy);
    j["alpha"] = c.alpha;
    j["omega_min"] = c.omega_min;
    j["b_sym"] = c.b_sym;
    j["epsilon"] = c.epsilon;
    j["m"] = c.m;
    j["s"] = c.s;
    j["f_s"] = c.f_s;
    j["per"] = c.per;
    j["r"] = c.r;
    j["c"] = c.c;
    j["t_max_s"] = c.t_max_s;
    j["bandwidth"] = c.bandwidth;
    j["per_request_overhead_s"] = c.per_request_overhead_s;
    j["header_bytes"] = c.header_bytes;
    j["vote_bytes"] = c.vote_bytes;
    j["payload_bytes"] = c.payload_bytes;
    j["epochs"] = c.epochs;
    j["runs"] = c.runs;
    j["seed"] = c.seed;
    return j;
}

template <typename T>
void take(const ordered_json& j, const char* key, T& out, bool& consumed_flag) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument(std::string("config field `") + key + "` has the wrong type");
    }
    consumed_flag = true;
}

}  // namespace

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("config field `" + field + "` " + why);
    };
    static const char* known[] = {"E1", "E2", "E3", "E4", "E5", "E6"};
    bool ok = false;
    for (const char* k : known) ok = ok || experiment == k;
    if (!ok) fail("experiment", "must be one of E1..E6, got `" + experiment + "`");

    if (n == 0 || n > 64) fail("n", "must be in [1, 64]");
    if (n < 3 * f() + 1) fail("f", "violates n >= 3f+1");
    if (!(t_slot_ms > 0)) fail("t_slot_ms", "must be positive");
    if (t_guard_ms < 0) fail("t_guard_ms", "must be nonnegative");
    if (k_tx == 0) fail("k_tx", "must be at least 1");

    auto prob = [&](const char* name, double v) {
        if (!(v >= 0.0 && v <= 1.0)) fail(name, "must be a probability in [0, 1]");
    };
    prob("p_h", p_h);
    prob("beta", beta);
    prob("p_good", p_good);
    prob("p_fade", p_fade);
    prob("per", per);
    if (!(alpha > 0)) fail("alpha", "must be positive");
    if (!(omega_min > 0)) fail("omega_min", "must be positive");

    if (b_sym == 0) fail("b_sym", "must be positive");
    if (epsilon < 0) fail("epsilon", "must be nonnegative");
    if (m == 0 || m > 256) fail("m", "must be in [1, 256]");
    if (s == 0) fail("s", "must be positive");
    if (f_s > s) fail("f_s", "cannot exceed s");
    uint64_t k = (payload_bytes + b_sym - 1) / b_sym;
    if (k == 0) fail("payload_bytes", "must be positive");
    if (k > m) fail("m", "must be at least ceil(payload_bytes / b_sym) source symbols");

    if (r == 0) fail("r", "must be at least 1");
    if (c == 0) fail("c", "must be at least 1");
    if (!(t_max_s > 0)) fail("t_max_s", "must be positive");
    if (!(bandwidth > 0)) fail("bandwidth", "must be positive");
    if (per_request_overhead_s < 0) fail("per_request_overhead_s", "must be nonnegative");

    if (header_bytes == 0) fail("header_bytes", "must be positive");
    if (vote_bytes == 0) fail("vote_bytes", "must be positive");
    if (epochs == 0) fail("epochs", "must be at least 1");
    if (runs == 0) fail("runs", "must be at least 1");
}

ScenarioConfig ScenarioConfig::defaults_for(const std::string& experiment) {
    ScenarioConfig c;
    c.experiment = experiment;
    if (experiment == "E1") {
        c.channel = ChannelType::TwoClass;
        c.alpha = 3.0;  // sensitivity tuned for the two-class channel split
    } else if (experiment == "E2") {
        c.runs = 20;
        c.epochs = 500;  // retrieval trials per run
    } else if (experiment == "E3") {
        c.n = 4;
        c.channel = ChannelType::Homogeneous;
    } else if (experiment == "E4") {
        c.runs = 1;  // deterministic size model
        c.s = 20;    // baseline storage-set size for the height curves
    } else if (experiment == "E5") {
        c.runs = 1;  // deterministic time model
    } else if (experiment == "E6") {
        c.runs = 1;  // closed forms
        c.channel = ChannelType::Homogeneous;
    }
    return c;
}

ScenarioConfig ScenarioConfig::parse(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");

    std::string experiment = "E1";
    if (j.contains("experiment")) {
        if (!j.at("experiment").is_string())
            throw std::invalid_argument("config field `experiment` must be a string");
        experiment = j.at("experiment").get<std::string>();
    }
    ScenarioConfig c = defaults_for(experiment);

    // every key must be consumed; leftovers are reported as unknown
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        bool used = false;
        auto grab = [&](const char* name, auto& field) {
            if (key != name) return;
            take(j, name, field, used);
        };
        if (key == "experiment") used = true;
        grab("n", c.n);
        if (key == "f") {
            uint32_t f = 0;
            take(j, "f", f, used);
            c.f_override = f;
        }
        grab("t_slot_ms", c.t_slot_ms);
        grab("t_guard_ms", c.t_guard_ms);
        grab("k_tx", c.k_tx);
        if (key == "channel") {
            std::string s;
            take(j, "channel", s, used);
            c.channel = channel_from(s);
        }
        grab("p_h", c.p_h);
        grab("beta", c.beta);
        grab("p_good", c.p_good);
        grab("p_fade", c.p_fade);
        if (key == "policy") {
            std::string s;
            take(j, "policy", s, used);
            c.policy = policy_from(s);
        }
        grab("alpha", c.alpha);
        grab("omega_min", c.omega_min);
        grab("b_sym", c.b_sym);
        grab("epsilon", c.epsilon);
        grab("m", c.m);
        grab("s", c.s);
        grab("f_s", c.f_s);
        grab("per", c.per);
        grab("r", c.r);
        grab("c", c.c);
        grab("t_max_s", c.t_max_s);
        grab("bandwidth", c.bandwidth);
        grab("per_request_overhead_s", c.per_request_overhead_s);
        grab("header_bytes", c.header_bytes);
        grab("vote_bytes", c.vote_bytes);
        grab("payload_bytes", c.payload_bytes);
        grab("epochs", c.epochs);
        grab("runs", c.runs);
        grab("seed", c.seed);
        if (!used) throw std::invalid_argument("config has unknown field `" + key + "`");
    }
    c.validate();
    return c;
}

std::string ScenarioConfig::to_json() const {
    return to_json_object(*this).dump(2) + "\n";
}

}  // namespace wstreamlet::config

namespace wstreamlet::scenario {

namespace {

using ordered_json = nlohmann::ordered_json;

// nlohmann keeps shortest-round-trip formatting for doubles, so emitting
// through a json value gives deterministic, parse-exact text.
std::string json_number(double v) { return ordered_json(v).dump(); }

}  // namespace

double student_t_975(uint64_t df) {
    static const double exact[] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df == 0) throw std::invalid_argument("student_t_975 needs df >= 1");
    if (df <= 30) return exact[df - 1];
    if (df <= 40) return 2.021;
    if (df <= 60) return 2.000;
    if (df <= 120) return 1.980;
    return 1.960;
}

void finalize_row(ResultRow& row) {
    row.runs = row.samples.size();
    if (row.samples.empty()) {
        row.mean = 0.0;
        row.ci95 = 0.0;
        return;
    }
    double sum = 0.0;
    for (double v : row.samples) sum += v;
    row.mean = sum / static_cast<double>(row.samples.size());
    if (row.samples.size() < 2) {
        row.ci95 = 0.0;
        return;
    }
    double ss = 0.0;
    for (double v : row.samples) ss += (v - row.mean) * (v - row.mean);
    double var = ss / static_cast<double>(row.samples.size() - 1);
    double sem = std::sqrt(var / static_cast<double>(row.samples.size()));
    row.ci95 = student_t_975(row.samples.size() - 1) * sem;
}

std::string format_double(double v) { return json_number(v); }

std::string emit_csv(const ResultTable& t) {
    std::string out;
    out += "# ";
    out += ordered_json::parse(t.config.to_json()).dump();
    out += "\n";
    out += "experiment,sweep,mode,metric,mean,ci95,runs,seed\n";
    for (const ResultRow& r : t.rows) {
        out += r.experiment;
        out += ',';
        out += r.sweep;
        out += ',';
        out += r.mode;
        out += ',';
        out += r.metric;
        out += ',';
        out += format_double(r.mean);
        out += ',';
        out += format_double(r.ci95);
        out += ',';
        out += std::to_string(r.runs);
        out += ',';
        out += std::to_string(r.seed);
        out += '\n';
    }
    return out;
}

std::string emit_json(const ResultTable& t) {
    ordered_json j;
    j["config"] = ordered_json::parse(t.config.to_json());
    j["rows"] = ordered_json::array();
    for (const ResultRow& r : t.rows) {
        ordered_json row;
        row["experiment"] = r.experiment;
        row["sweep"] = r.sweep;
        row["mode"] = r.mode;
        row["metric"] = r.metric;
        row["mean"] = r.mean;
        row["ci95"] = r.ci95;
        row["runs"] = r.runs;
        row["seed"] = r.seed;
        row["samples"] = r.samples;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

ResultTable parse_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("result table is not valid JSON: ") + e.what());
    }
    ResultTable t;
    t.config = config::ScenarioConfig::parse(j.at("config").dump());
    for (const auto& row : j.at("rows")) {
        ResultRow r;
        r.experiment = row.at("experiment").get<std::string>();
        r.sweep = row.at("sweep").get<std::string>();
        r.mode = row.at("mode").get<std::string>();
        r.metric = row.at("metric").get<std::string>();
        r.mean = row.at("mean").get<double>();
        r.ci95 = row.at("ci95").get<double>();
        r.runs = row.at("runs").get<uint64_t>();
        r.seed = row.at("seed").get<uint64_t>();
        r.samples = row.at("samples").get<std::vector<double>>();
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace wstreamlet::scenario
