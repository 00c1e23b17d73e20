#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "scra/errors.hpp"
#include "scra/text.hpp"

namespace scra {

inline constexpr const char* kPipelineVersion = "0.1.0";

struct CacheKey {
    std::string question_id;
    std::string stage;
    std::string subhash; // hash of the config fields that affect this stage

    bool operator<(const CacheKey& o) const {
        if (question_id != o.question_id) return question_id < o.question_id;
        if (stage != o.stage) return stage < o.stage;
        return subhash < o.subhash;
    }
};

// Per-stage JSONL cache: one append-only file per stage, one record per
// line, last write wins on key collision. Append-only keeps long runs
// resumable and the files diffable.
class StageCache {
public:
    StageCache() = default;

    explicit StageCache(std::filesystem::path dir) { open(std::move(dir)); }

    void open(std::filesystem::path dir) {
        std::lock_guard<std::mutex> lock(mutex_);
        dir_ = std::move(dir);
        index_.clear();
        if (dir_.empty()) return;
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw io_error("cannot create cache dir " + dir_.string() + ": " + ec.message());
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".jsonl") continue;
            load_file(entry.path());
        }
    }

    bool enabled() const { return !dir_.empty(); }

    std::optional<nlohmann::json> get(const CacheKey& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        return std::make_optional(it->second);
    }

    void put(const CacheKey& key, const nlohmann::json& payload) {
        std::lock_guard<std::mutex> lock(mutex_);
        index_[key] = payload;
        if (dir_.empty()) return;
        nlohmann::json line = {{"key",
                                {{"question_id", key.question_id},
                                 {"stage", key.stage},
                                 {"subhash", key.subhash}}},
                               {"created_at", timestamp()},
                               {"version", kPipelineVersion},
                               {"payload", payload}};
        const auto path = dir_ / (key.stage + ".jsonl");
        std::ofstream out(path, std::ios::app | std::ios::binary);
        if (!out) throw io_error("cannot append to cache file: " + path.string());
        out << line.dump() << "\n";
        if (!out) throw io_error("failed writing cache file: " + path.string());
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return index_.size();
    }

    // Number of cached entries for one stage, any key.
    size_t stage_entries(const std::string& stage) const {
        std::lock_guard<std::mutex> lock(mutex_);
        size_t n = 0;
        for (const auto& [key, payload] : index_)
            if (key.stage == stage) ++n;
        return n;
    }

private:
    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot read cache file: " + path.string());
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception&) {
                continue; // torn write from an interrupted run; later lines still count
            }
            if (!j.contains("key") || !j.contains("payload")) continue;
            CacheKey key{j["key"].value("question_id", ""), j["key"].value("stage", ""),
                         j["key"].value("subhash", "")};
            index_[key] = j["payload"];
        }
    }

    static std::string timestamp() {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::tm tm{};
        gmtime_r(&t, &tm);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::filesystem::path dir_;
    std::map<CacheKey, nlohmann::json> index_;
    mutable std::mutex mutex_;
};

} // namespace scra
