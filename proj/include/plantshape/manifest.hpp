#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace plantshape {

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string digest_bytes(const std::string& bytes) {
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

inline std::string digest_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot digest missing file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return digest_bytes(ss.str());
}

// Append-only run log: one JSON object per line, chained digests so any
// tampering or truncation is detectable on re-read. Wall-clock durations
// deliberately stay out so identical runs produce identical manifests.
class RunManifest {
public:
    struct Entry {
        std::string stage;
        std::string status; // "ok" or "failed"
        std::uint64_t seed = 0;
        std::map<std::string, std::string> inputs;  // path -> digest
        std::map<std::string, std::string> outputs; // path -> digest
        std::string error;
        std::string chain;
    };

    static constexpr const char* kVersion = "plantshape-manifest-v1";

    void append(Entry e) {
        e.chain = chain_digest(e, entries_.empty() ? kVersion : entries_.back().chain);
        entries_.push_back(std::move(e));
    }

    const std::vector<Entry>& entries() const { return entries_; }

    void write(std::ostream& os) const {
        for (const auto& e : entries_) os << to_json(e).dump() << '\n';
    }

    void write(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write manifest: " + path);
        write(os);
    }

    static RunManifest read(std::istream& is) {
        RunManifest m;
        std::string line;
        std::string prev = kVersion;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            Entry e;
            e.stage = j.at("stage").get<std::string>();
            e.status = j.at("status").get<std::string>();
            e.seed = j.at("seed").get<std::uint64_t>();
            e.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
            e.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
            e.error = j.value("error", "");
            e.chain = j.at("chain").get<std::string>();
            if (e.chain != chain_digest(e, prev))
                throw std::runtime_error("manifest chain digest mismatch at stage " + e.stage);
            prev = e.chain;
            m.entries_.push_back(std::move(e));
        }
        return m;
    }

    // Re-hashes every referenced output file and checks it against the
    // recorded digest.
    void verify_outputs() const {
        for (const auto& e : entries_)
            for (const auto& [path, digest] : e.outputs)
                if (digest_file(path) != digest)
                    throw std::runtime_error("digest mismatch for " + path);
    }

private:
    static nlohmann::json to_json(const Entry& e, bool with_chain = true) {
        nlohmann::json j;
        j["stage"] = e.stage;
        j["status"] = e.status;
        j["seed"] = e.seed;
        j["inputs"] = e.inputs;
        j["outputs"] = e.outputs;
        if (!e.error.empty()) j["error"] = e.error;
        if (with_chain) j["chain"] = e.chain;
        return j;
    }

    static std::string chain_digest(const Entry& e, const std::string& prev) {
        const std::string payload = prev + to_json(e, false).dump();
        return digest_bytes(payload);
    }

    std::vector<Entry> entries_;
};

} // namespace plantshape
