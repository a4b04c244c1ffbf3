// config.cpp - JSON load/save for ModemConfig
#include "uwm/config.hpp"

#include <fstream>

#include "json.hpp"

namespace uwm {

namespace {
constexpr int kSchemaVersion = 1;
}

ModemConfig load_modem_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_modem_config: cannot open " + path);
    nlohmann::json j;
    f >> j;
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion)
        throw std::runtime_error("load_modem_config: missing/unsupported schema_version in " + path);
    ModemConfig cfg;
    cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
    cfg.subcarrier_spacing = j.value("subcarrier_spacing", cfg.subcarrier_spacing);
    cfg.band_low_hz = j.value("band_low_hz", cfg.band_low_hz);
    cfg.band_high_hz = j.value("band_high_hz", cfg.band_high_hz);
    cfg.cp_base = j.value("cp_base", cfg.cp_base);
    cfg.eq_len = j.value("eq_len", cfg.eq_len);
    cfg.snr_threshold_db = j.value("snr_threshold_db", cfg.snr_threshold_db);
    cfg.realloc_lambda = j.value("realloc_lambda", cfg.realloc_lambda);
    cfg.validate();
    return cfg;
}

void save_modem_config(const ModemConfig& cfg, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["sample_rate"] = cfg.sample_rate;
    j["subcarrier_spacing"] = cfg.subcarrier_spacing;
    j["band_low_hz"] = cfg.band_low_hz;
    j["band_high_hz"] = cfg.band_high_hz;
    j["cp_base"] = cfg.cp_base;
    j["eq_len"] = cfg.eq_len;
    j["snr_threshold_db"] = cfg.snr_threshold_db;
    j["realloc_lambda"] = cfg.realloc_lambda;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_modem_config: cannot open " + path);
    f << j.dump(2) << "\n";
}

}  // namespace uwm
