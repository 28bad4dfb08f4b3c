#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wstreamlet/analysis.hpp"
#include "wstreamlet/coding.hpp"
#include "wstreamlet/experiments.hpp"
#include "wstreamlet/scenario.hpp"

namespace fs = std::filesystem;
using namespace wstreamlet;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Bytes read_file_bytes(const fs::path& path) {
    std::string s = read_file(path);
    return Bytes(s.begin(), s.end());
}

void write_file(const fs::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_file(const fs::path& path, const Bytes& data) {
    write_file(path, std::string(data.begin(), data.end()));
}

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed,
            std::optional<uint32_t> runs, const std::string& out_dir, const std::string& format) {
    config::ScenarioConfig cfg = config::ScenarioConfig::parse(read_file(config_path));
    if (seed) cfg.seed = *seed;
    if (runs) cfg.runs = *runs;
    cfg.validate();

    scenario::ResultTable table = experiments::run_experiment(cfg);

    fs::create_directories(out_dir);
    std::vector<std::string> written;
    if (format == "csv" || format == "both") {
        fs::path p = fs::path(out_dir) / (cfg.experiment + ".csv");
        write_file(p, scenario::emit_csv(table));
        written.push_back(p.string());
    }
    if (format == "json" || format == "both") {
        fs::path p = fs::path(out_dir) / (cfg.experiment + ".json");
        write_file(p, scenario::emit_json(table));
        written.push_back(p.string());
    }
    std::cout << cfg.experiment << ": " << table.rows.size() << " rows";
    for (const auto& w : written) std::cout << "\n  " << w;
    std::cout << "\n";
    return 0;
}

int cmd_bounds(unsigned n, int f_arg, double p_h, unsigned k_tx, double pi,
               std::optional<double> q_direct, double t_slot_ms, double t_guard_ms,
               unsigned k_min, unsigned k_max) {
    analysis::LivenessParams lp;
    lp.n = n;
    lp.f = f_arg >= 0 ? static_cast<unsigned>(f_arg) : (n - 1) / 3;
    lp.p_h = p_h;
    lp.k_tx = k_tx;
    lp.pi = pi;
    if (n < 3 * lp.f + 1) throw std::runtime_error("bounds: need n >= 3f+1");

    double q = q_direct ? *q_direct : analysis::q_lower_bound(lp);
    std::cout << "n=" << n << " f=" << lp.f << " p_h=" << p_h << " k_tx=" << k_tx << " pi=" << pi
              << "\n";
    std::cout << "p_hat             " << analysis::p_hat(p_h, k_tx) << "\n";
    std::cout << "proposal_reach    " << analysis::proposal_reach_probability(lp) << "\n";
    std::cout << "q_lower_bound     " << analysis::q_lower_bound(lp) << "\n";
    std::cout << "q_used            " << q << "\n";
    if (q > 0.0) {
        std::cout << "expected_epochs   " << analysis::expected_epochs_to_finality(q) << "\n";
        std::cout << "expected_time_ms  "
                  << analysis::expected_time_to_finality_ms(q, n, t_slot_ms, t_guard_ms) << "\n";
    } else {
        std::cout << "expected_epochs   inf\n";
    }
    auto opt = analysis::optimize_k_tx(lp, k_min, k_max);
    std::cout << "k_tx curve (k q epochs cost):\n";
    for (const auto& pt : opt.curve)
        std::cout << "  " << pt.k_tx << " " << pt.q << " " << pt.expected_epochs << " " << pt.cost
                  << "\n";
    std::cout << "best_k_tx         " << opt.best_k_tx << "\n";
    return 0;
}

int cmd_encode(const std::string& payload_path, const std::string& out_dir, uint32_t b_sym,
               uint32_t m) {
    Bytes payload = read_file_bytes(payload_path);
    if (payload.empty()) throw std::runtime_error("payload file is empty: " + payload_path);
    crypto::Digest payload_id = crypto::hash(payload);
    auto symbols = coding::encode_symbols(payload_id, payload, b_sym, m);
    auto bundle = coding::make_commitment(symbols);

    fs::create_directories(out_dir);
    for (const auto& s : symbols) {
        fs::path p = fs::path(out_dir) / ("symbol_" + std::to_string(s.index) + ".bin");
        write_file(p, s.encode());
    }
    write_file(fs::path(out_dir) / "commitment.bin", bundle.encode());
    std::cout << "payload_id " << payload_id.hex() << "\n"
              << "k " << symbols.front().k << "  m " << m << "  b_sym " << b_sym << "\n"
              << "root " << bundle.root.hex() << "\n"
              << "wrote " << m << " symbols + commitment.bin to " << out_dir << "\n";
    return 0;
}

std::vector<coding::EncodedSymbol> load_symbols(const std::vector<std::string>& files) {
    std::vector<coding::EncodedSymbol> out;
    for (const auto& f : files) {
        Bytes raw = read_file_bytes(f);
        auto s = coding::EncodedSymbol::decode(raw);
        if (!s) throw std::runtime_error("not a valid symbol container: " + f);
        out.push_back(std::move(*s));
    }
    return out;
}

int cmd_decode(const std::vector<std::string>& symbol_files, const std::string& out_path,
               const std::string& bundle_path) {
    auto symbols = load_symbols(symbol_files);
    if (!bundle_path.empty()) {
        auto bundle = coding::CommitmentBundle::decode(read_file_bytes(bundle_path));
        if (!bundle) throw std::runtime_error("not a valid commitment bundle: " + bundle_path);
        std::vector<coding::EncodedSymbol> kept;
        for (auto& s : symbols) {
            auto proof = coding::symbol_proof(*bundle, s.index);
            if (coding::verify_symbol(s, bundle->root, proof)) kept.push_back(std::move(s));
            else std::cerr << "dropping unverified symbol index " << s.index << "\n";
        }
        symbols = std::move(kept);
    }
    auto payload = coding::decode_payload(symbols);
    if (!payload) {
        std::cerr << "decode failed: symbols do not reach full rank\n";
        return 1;
    }
    write_file(out_path, *payload);
    std::cout << "decoded " << payload->size() << " bytes -> " << out_path << "\n";
    return 0;
}

int cmd_verify(const std::vector<std::string>& symbol_files, const std::string& bundle_path) {
    auto bundle = coding::CommitmentBundle::decode(read_file_bytes(bundle_path));
    if (!bundle) throw std::runtime_error("not a valid commitment bundle: " + bundle_path);
    auto symbols = load_symbols(symbol_files);
    int bad = 0;
    for (size_t i = 0; i < symbols.size(); ++i) {
        const auto& s = symbols[i];
        bool ok = false;
        if (s.payload_id == bundle->payload_id && s.index < bundle->total) {
            auto proof = coding::symbol_proof(*bundle, s.index);
            ok = coding::verify_symbol(s, bundle->root, proof);
        }
        std::cout << symbol_files[i] << " index=" << s.index << " " << (ok ? "OK" : "FAIL")
                  << "\n";
        if (!ok) ++bad;
    }
    return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wireless consensus and coded storage simulator"};
    app.require_subcommand(1);

    // run
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::optional<uint64_t> seed_override;
    std::optional<uint32_t> runs_override;
    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", config_path, "scenario config file")->required();
    run->add_option("--seed", seed_override, "override the base seed");
    run->add_option("--runs", runs_override, "override the run count");
    run->add_option("--out-dir", out_dir, "output directory (default .)");
    run->add_option("--format", format, "csv | json | both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    // bounds
    unsigned b_n = 10;
    int b_f = -1;
    double b_ph = 0.95;
    unsigned b_ktx = 2;
    double b_pi = 1.0;
    std::optional<double> b_q;
    double b_tslot = 10.0, b_tguard = 5.0;
    unsigned b_kmin = 1, b_kmax = 8;
    auto* bounds = app.add_subcommand("bounds", "liveness closed forms for one configuration");
    bounds->add_option("--n", b_n, "cluster size");
    bounds->add_option("--f", b_f, "fault bound (default floor((n-1)/3))");
    bounds->add_option("--p-h", b_ph, "per-attempt honest link success");
    bounds->add_option("--k-tx", b_ktx, "attempts per slot");
    bounds->add_option("--pi", b_pi, "honest leader probability");
    bounds->add_option("--q", b_q, "use this per-epoch success directly");
    bounds->add_option("--t-slot-ms", b_tslot, "slot duration");
    bounds->add_option("--t-guard-ms", b_tguard, "guard duration");
    bounds->add_option("--k-min", b_kmin, "optimizer lower k_tx");
    bounds->add_option("--k-max", b_kmax, "optimizer upper k_tx");

    // encode
    std::string payload_path, enc_out_dir = "symbols";
    uint32_t enc_bsym = 204800, enc_m = 10;
    auto* encode = app.add_subcommand("encode", "split and encode a payload into symbol files");
    encode->add_option("payload", payload_path, "payload file")->required();
    encode->add_option("--out-dir", enc_out_dir, "directory for symbol containers");
    encode->add_option("--b-sym", enc_bsym, "symbol size in bytes");
    encode->add_option("--m", enc_m, "total symbols to generate");

    // decode
    std::vector<std::string> dec_symbols;
    std::string dec_out = "payload.bin", dec_bundle;
    auto* decode = app.add_subcommand("decode", "reconstruct a payload from symbol files");
    decode->add_option("symbols", dec_symbols, "symbol container files")->required();
    decode->add_option("--out", dec_out, "output payload path");
    decode->add_option("--bundle", dec_bundle, "verify symbols against this commitment first");

    // verify
    std::vector<std::string> ver_symbols;
    std::string ver_bundle;
    auto* verify = app.add_subcommand("verify", "check symbol files against a commitment");
    verify->add_option("symbols", ver_symbols, "symbol container files")->required();
    verify->add_option("--bundle", ver_bundle, "commitment bundle file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, seed_override, runs_override, out_dir, format);
        if (bounds->parsed())
            return cmd_bounds(b_n, b_f, b_ph, b_ktx, b_pi, b_q, b_tslot, b_tguard, b_kmin,
                              b_kmax);
        if (encode->parsed()) return cmd_encode(payload_path, enc_out_dir, enc_bsym, enc_m);
        if (decode->parsed()) return cmd_decode(dec_symbols, dec_out, dec_bundle);
        if (verify->parsed()) return cmd_verify(ver_symbols, ver_bundle);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
