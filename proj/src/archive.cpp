#include "chaintt/archive.hpp"

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "chaintt/checkpoint.hpp"

namespace chaintt {

namespace {

constexpr std::string_view kRunMagic = "WTRA";
constexpr std::string_view kContainerMagic = "WTMC";
constexpr std::string_view kClassicalMagic = "WQCM";

using detail::ByteReader;
using detail::ByteWriter;

}  // namespace

ArchiveFormat parse_archive_format(const std::string& name) {
    if (name == "binary") return ArchiveFormat::binary;
    if (name == "matrix-container") return ArchiveFormat::matrix_container;
    throw ConfigError("io.format", fmt::format("unknown archive format '{}'", name));
}

std::string to_string(ArchiveFormat format) {
    return format == ArchiveFormat::binary ? "binary" : "matrix-container";
}

// ---------------------------------------------------------------------------
// classical checkpoint

std::string encode_classical_checkpoint(const ClassicalCheckpoint& c) {
    if (c.q.size() != c.p.size()) throw DimensionError("classical checkpoint: q and p lengths differ");
    ByteWriter w;
    w.raw(kClassicalMagic);
    w.u16(kArchiveVersion);
    w.f64(c.time);
    w.u64(static_cast<std::uint64_t>(c.amplitudes.size()));
    w.u64(static_cast<std::uint64_t>(c.q.size()));
    for (Index i = 0; i < c.amplitudes.size(); ++i) w.c128(c.amplitudes(i));
    for (Index i = 0; i < c.q.size(); ++i) w.f64(c.q(i));
    for (Index i = 0; i < c.p.size(); ++i) w.f64(c.p(i));
    return w.take();
}

ClassicalCheckpoint decode_classical_checkpoint(std::string_view bytes) {
    ByteReader r(bytes, "classical checkpoint");
    if (r.raw(4) != kClassicalMagic) throw IoError("classical checkpoint: bad magic (expected WQCM)");
    const auto version = r.u16();
    if (version != kArchiveVersion)
        throw IoError(fmt::format("classical checkpoint: unsupported version {}", version));
    ClassicalCheckpoint c;
    c.time = r.f64();
    const auto na = r.checked(r.u64(), 16);
    const auto n = r.checked(r.u64(), 16);
    c.amplitudes.resize(static_cast<Index>(na));
    c.q.resize(static_cast<Index>(n));
    c.p.resize(static_cast<Index>(n));
    for (Index i = 0; i < c.amplitudes.size(); ++i) c.amplitudes(i) = r.c128();
    for (Index i = 0; i < c.q.size(); ++i) c.q(i) = r.f64();
    for (Index i = 0; i < c.p.size(); ++i) c.p(i) = r.f64();
    if (!r.done()) throw IoError(fmt::format("classical checkpoint: {} trailing bytes", r.remaining()));
    return c;
}

// ---------------------------------------------------------------------------
// binary records

namespace {

std::string encode_records(const std::vector<ObservableRecord>& records) {
    ByteWriter w;
    w.u64(records.size());
    for (const auto& rec : records) {
        w.text(rec.kind);
        w.i64(rec.index);
        w.f64(rec.time);
        w.f64(rec.energy);
        w.u64(rec.energy_parts.size());
        for (const auto& [name, v] : rec.energy_parts) {
            w.text(name);
            w.f64(v);
        }
        w.f64(rec.norm);
        w.c128(rec.acf);
        w.u64(rec.densities.size());
        for (const auto& rho : rec.densities) {
            w.u64(static_cast<std::uint64_t>(rho.rows()));
            for (Index i = 0; i < rho.rows(); ++i)
                for (Index j = 0; j < rho.cols(); ++j) w.c128(rho(i, j));
        }
        w.u64(rec.populations.size());
        for (const auto& pop : rec.populations) {
            w.u64(pop.size());
            for (double v : pop) w.f64(v);
        }
        w.u64(rec.sites.size());
        for (const auto& [name, values] : rec.sites) {
            w.text(name);
            w.u64(values.size());
            for (const auto& m : values) {
                w.f64(m.mean);
                w.f64(m.uncertainty);
            }
        }
        w.u8(rec.state ? 1 : 0);
        if (rec.state) w.text(encode_checkpoint(*rec.state));
    }
    return w.take();
}

std::vector<ObservableRecord> decode_records(std::string_view bytes) {
    ByteReader r(bytes, "archive records");
    const auto n = r.checked(r.u64(), 8);
    std::vector<ObservableRecord> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        ObservableRecord rec;
        rec.kind = r.text();
        rec.index = r.i64();
        rec.time = r.f64();
        rec.energy = r.f64();
        const auto n_parts = r.checked(r.u64(), 16);
        for (std::size_t j = 0; j < n_parts; ++j) {
            auto name = r.text();
            rec.energy_parts[name] = r.f64();
        }
        rec.norm = r.f64();
        rec.acf = r.c128();
        const auto n_rho = r.checked(r.u64(), 8);
        for (std::size_t j = 0; j < n_rho; ++j) {
            const auto d = static_cast<Index>(r.checked(r.u64(), 16));
            r.checked(static_cast<std::uint64_t>(d) * static_cast<std::uint64_t>(d), 16);
            Matrix rho(d, d);
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b) rho(a, b) = r.c128();
            rec.densities.push_back(std::move(rho));
        }
        const auto n_pop = r.checked(r.u64(), 8);
        for (std::size_t j = 0; j < n_pop; ++j) {
            std::vector<double> pop(r.checked(r.u64(), 8));
            for (auto& v : pop) v = r.f64();
            rec.populations.push_back(std::move(pop));
        }
        const auto n_sites = r.checked(r.u64(), 16);
        for (std::size_t j = 0; j < n_sites; ++j) {
            auto name = r.text();
            std::vector<Moment> values(r.checked(r.u64(), 16));
            for (auto& m : values) {
                m.mean = r.f64();
                m.uncertainty = r.f64();
            }
            rec.sites[name] = std::move(values);
        }
        if (r.u8()) rec.state = decode_state_checkpoint(r.text());
        out.push_back(std::move(rec));
    }
    if (!r.done()) throw IoError(fmt::format("archive records: {} trailing bytes", r.remaining()));
    return out;
}

std::string encode_binary(const RunArchive& a) {
    ByteWriter w;
    w.raw(kRunMagic);
    w.u16(kArchiveVersion);
    w.text("binary");
    w.text(a.config_text);
    w.text(a.model_text);
    w.text(encode_records(a.records));
    w.text(a.checkpoint ? encode_checkpoint(*a.checkpoint) : std::string());
    w.text(a.classical ? encode_classical_checkpoint(*a.classical) : std::string());
    return w.take();
}

RunArchive decode_binary(std::string_view bytes) {
    ByteReader r(bytes, "archive");
    r.raw(4);
    const auto version = r.u16();
    if (version != kArchiveVersion)
        throw IoError(fmt::format("archive: unsupported version {} (expected {})", version, kArchiveVersion));
    if (r.text() != "binary") throw IoError("archive: format name mismatch");
    RunArchive a;
    a.config_text = r.text();
    a.model_text = r.text();
    a.records = decode_records(r.text());
    if (auto ck = r.text(); !ck.empty()) a.checkpoint = decode_state_checkpoint(ck);
    if (auto cl = r.text(); !cl.empty()) a.classical = decode_classical_checkpoint(cl);
    if (!r.done()) throw IoError(fmt::format("archive: {} trailing bytes", r.remaining()));
    return a;
}

// ---------------------------------------------------------------------------
// matrix container

struct Entry {
    std::uint8_t type = 0;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
    std::string bytes;
};

using Entries = std::map<std::string, Entry>;

Entry array_entry(std::vector<std::uint64_t> dims, std::vector<double> values) {
    return Entry{0, std::move(dims), std::move(values), {}};
}
Entry text_entry(std::string s, std::uint8_t type = 1) { return Entry{type, {}, {}, std::move(s)}; }

template <typename Get>
std::vector<double> gather(const std::vector<ObservableRecord>& recs, Get get) {
    std::vector<double> out;
    for (const auto& r : recs) out.push_back(get(r));
    return out;
}

std::string encode_container(const RunArchive& a) {
    const auto& recs = a.records;
    const std::uint64_t n = recs.size();
    Entries e;
    e["config"] = text_entry(a.config_text);
    e["model"] = text_entry(a.model_text);
    std::string kinds;
    for (std::size_t k = 0; k < recs.size(); ++k) kinds += (k ? "\n" : "") + recs[k].kind;
    e["kind"] = text_entry(kinds);
    e["index"] = array_entry({n}, gather(recs, [](const auto& r) { return static_cast<double>(r.index); }));
    e["time"] = array_entry({n}, gather(recs, [](const auto& r) { return r.time; }));
    e["energy"] = array_entry({n}, gather(recs, [](const auto& r) { return r.energy; }));
    e["norm"] = array_entry({n}, gather(recs, [](const auto& r) { return r.norm; }));
    e["acf_re"] = array_entry({n}, gather(recs, [](const auto& r) { return r.acf.real(); }));
    e["acf_im"] = array_entry({n}, gather(recs, [](const auto& r) { return r.acf.imag(); }));

    if (!recs.empty()) {
        const auto& first = recs.front();
        for (const auto& r : recs) {
            std::set<std::string> a_keys, b_keys, a_sites, b_sites;
            for (const auto& [k, v] : r.energy_parts) a_keys.insert(k);
            for (const auto& [k, v] : first.energy_parts) b_keys.insert(k);
            for (const auto& [k, v] : r.sites) a_sites.insert(k);
            for (const auto& [k, v] : first.sites) b_sites.insert(k);
            if (a_keys != b_keys || a_sites != b_sites || r.densities.size() != first.densities.size() ||
                r.populations.size() != first.populations.size())
                throw IoError("matrix-container export needs records of one shape");
        }
        for (const auto& [name, v] : first.energy_parts)
            e["energy_parts/" + name] =
                array_entry({n}, gather(recs, [&name = name](const auto& r) { return r.energy_parts.at(name); }));
        for (const auto& [name, values] : first.sites) {
            const std::uint64_t ns = values.size();
            std::vector<double> mean, unc;
            for (const auto& r : recs) {
                const auto& v = r.sites.at(name);
                if (v.size() != ns) throw IoError("matrix-container export needs records of one shape");
                for (const auto& m : v) {
                    mean.push_back(m.mean);
                    unc.push_back(m.uncertainty);
                }
            }
            e["site/" + name + "/mean"] = array_entry({n, ns}, std::move(mean));
            e["site/" + name + "/uncertainty"] = array_entry({n, ns}, std::move(unc));
        }
        if (!first.populations.empty()) {
            const std::uint64_t ns = first.populations.size();
            const std::uint64_t d = first.populations.front().size();
            std::vector<double> pop;
            for (const auto& r : recs)
                for (const auto& p : r.populations) {
                    if (p.size() != d) throw IoError("matrix-container export needs uniform local dimensions");
                    pop.insert(pop.end(), p.begin(), p.end());
                }
            e["populations"] = array_entry({n, ns, d}, std::move(pop));
        }
        if (!first.densities.empty()) {
            const std::uint64_t ns = first.densities.size();
            const auto d = first.densities.front().rows();
            std::vector<double> re, im;
            for (const auto& r : recs)
                for (const auto& rho : r.densities) {
                    if (rho.rows() != d) throw IoError("matrix-container export needs uniform local dimensions");
                    for (Index i = 0; i < d; ++i)
                        for (Index j = 0; j < d; ++j) {
                            re.push_back(rho(i, j).real());
                            im.push_back(rho(i, j).imag());
                        }
                }
            const auto ud = static_cast<std::uint64_t>(d);
            e["density_re"] = array_entry({n, ns, ud, ud}, std::move(re));
            e["density_im"] = array_entry({n, ns, ud, ud}, std::move(im));
        }
        std::vector<double> with_state;
        for (std::size_t k = 0; k < recs.size(); ++k)
            if (recs[k].state) {
                with_state.push_back(static_cast<double>(k));
                e[fmt::format("state/{}", k)] = text_entry(encode_checkpoint(*recs[k].state), 2);
            }
        if (!with_state.empty()) {
            const std::uint64_t ns = with_state.size();
            e["state_records"] = array_entry({ns}, std::move(with_state));
        }
    }
    if (a.checkpoint) e["checkpoint"] = text_entry(encode_checkpoint(*a.checkpoint), 2);
    if (a.classical) e["classical"] = text_entry(encode_classical_checkpoint(*a.classical), 2);

    ByteWriter w;
    w.raw(kContainerMagic);
    w.u16(kArchiveVersion);
    w.text("matrix-container");
    w.u64(e.size());
    for (const auto& [name, entry] : e) {
        w.text(name);
        w.u8(entry.type);
        w.u64(entry.dims.size());
        for (auto d : entry.dims) w.u64(d);
        if (entry.type == 0)
            for (double v : entry.values) w.f64(v);
        else
            w.text(entry.bytes);
    }
    return w.take();
}

Entries read_entries(std::string_view bytes) {
    ByteReader r(bytes, "matrix container");
    r.raw(4);
    const auto version = r.u16();
    if (version != kArchiveVersion)
        throw IoError(fmt::format("matrix container: unsupported version {} (expected {})", version,
                                  kArchiveVersion));
    if (r.text() != "matrix-container") throw IoError("matrix container: format name mismatch");
    const auto count = r.checked(r.u64(), 9);
    Entries e;
    for (std::size_t k = 0; k < count; ++k) {
        auto name = r.text();
        Entry entry;
        entry.type = r.u8();
        if (entry.type > 2) throw IoError(fmt::format("matrix container: entry '{}' has unknown type", name));
        const auto nd = r.checked(r.u64(), 8);
        std::uint64_t total = 1;
        for (std::size_t j = 0; j < nd; ++j) {
            entry.dims.push_back(r.u64());
            total *= entry.dims.back();
        }
        if (entry.type == 0) {
            entry.values.resize(r.checked(total, 8));
            for (auto& v : entry.values) v = r.f64();
        } else {
            entry.bytes = r.text();
        }
        e[name] = std::move(entry);
    }
    if (!r.done()) throw IoError(fmt::format("matrix container: {} trailing bytes", r.remaining()));
    return e;
}

const Entry& need(const Entries& e, const std::string& name, std::uint8_t type) {
    const auto it = e.find(name);
    if (it == e.end()) throw IoError(fmt::format("matrix container: missing entry '{}'", name));
    if (it->second.type != type) throw IoError(fmt::format("matrix container: entry '{}' has the wrong type", name));
    return it->second;
}

const std::vector<double>& need_array(const Entries& e, const std::string& name, std::size_t expect) {
    const auto& entry = need(e, name, 0);
    if (entry.values.size() != expect)
        throw IoError(fmt::format("matrix container: entry '{}' has {} values, expected {}", name,
                                  entry.values.size(), expect));
    return entry.values;
}

RunArchive decode_container(std::string_view bytes) {
    const Entries e = read_entries(bytes);
    RunArchive a;
    a.config_text = need(e, "config", 1).bytes;
    a.model_text = need(e, "model", 1).bytes;
    const auto& time = need(e, "time", 0).values;
    const std::size_t n = time.size();
    a.records.resize(n);
    const auto& kinds = need(e, "kind", 1).bytes;
    {
        std::size_t k = 0, start = 0;
        if (n > 0) {
            for (std::size_t pos = 0; pos <= kinds.size(); ++pos)
                if (pos == kinds.size() || kinds[pos] == '\n') {
                    if (k >= n) throw IoError("matrix container: too many kinds");
                    a.records[k++].kind = kinds.substr(start, pos - start);
                    start = pos + 1;
                }
            if (k != n) throw IoError("matrix container: kind count mismatch");
        }
    }
    const auto& index = need_array(e, "index", n);
    const auto& energy = need_array(e, "energy", n);
    const auto& nrm = need_array(e, "norm", n);
    const auto& acf_re = need_array(e, "acf_re", n);
    const auto& acf_im = need_array(e, "acf_im", n);
    for (std::size_t k = 0; k < n; ++k) {
        auto& r = a.records[k];
        r.index = static_cast<Index>(index[k]);
        r.time = time[k];
        r.energy = energy[k];
        r.norm = nrm[k];
        r.acf = {acf_re[k], acf_im[k]};
    }
    for (const auto& [name, entry] : e) {
        if (name.rfind("energy_parts/", 0) == 0) {
            const auto& v = need_array(e, name, n);
            for (std::size_t k = 0; k < n; ++k) a.records[k].energy_parts[name.substr(13)] = v[k];
        } else if (name.rfind("site/", 0) == 0 && name.size() > 5 + 5 && name.ends_with("/mean")) {
            const std::string obs = name.substr(5, name.size() - 5 - 5);
            if (entry.dims.size() != 2 || entry.dims[0] != n) throw IoError("matrix container: bad site array");
            const std::size_t ns = entry.dims[1];
            const auto& mean = need_array(e, name, n * ns);
            const auto& unc = need_array(e, "site/" + obs + "/uncertainty", n * ns);
            for (std::size_t k = 0; k < n; ++k) {
                std::vector<Moment> values(ns);
                for (std::size_t s = 0; s < ns; ++s) values[s] = {mean[k * ns + s], unc[k * ns + s]};
                a.records[k].sites[obs] = std::move(values);
            }
        }
    }
    if (e.count("populations")) {
        const auto& entry = need(e, "populations", 0);
        if (entry.dims.size() != 3 || entry.dims[0] != n) throw IoError("matrix container: bad populations array");
        const std::size_t ns = entry.dims[1], d = entry.dims[2];
        const auto& v = need_array(e, "populations", n * ns * d);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t s = 0; s < ns; ++s)
                a.records[k].populations.emplace_back(v.begin() + static_cast<std::ptrdiff_t>((k * ns + s) * d),
                                                      v.begin() + static_cast<std::ptrdiff_t>((k * ns + s + 1) * d));
    }
    if (e.count("density_re")) {
        const auto& entry = need(e, "density_re", 0);
        if (entry.dims.size() != 4 || entry.dims[0] != n) throw IoError("matrix container: bad density array");
        const std::size_t ns = entry.dims[1], d = entry.dims[2];
        const auto& re = need_array(e, "density_re", n * ns * d * d);
        const auto& im = need_array(e, "density_im", n * ns * d * d);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t s = 0; s < ns; ++s) {
                Matrix rho(static_cast<Index>(d), static_cast<Index>(d));
                const std::size_t base = (k * ns + s) * d * d;
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        rho(static_cast<Index>(i), static_cast<Index>(j)) = {re[base + i * d + j], im[base + i * d + j]};
                a.records[k].densities.push_back(std::move(rho));
            }
    }
    if (e.count("state_records")) {
        for (double v : need(e, "state_records", 0).values) {
            const auto k = static_cast<std::size_t>(v);
            if (k >= n) throw IoError("matrix container: state index out of range");
            a.records[k].state = decode_state_checkpoint(need(e, fmt::format("state/{}", k), 2).bytes);
        }
    }
    if (e.count("checkpoint")) a.checkpoint = decode_state_checkpoint(need(e, "checkpoint", 2).bytes);
    if (e.count("classical")) a.classical = decode_classical_checkpoint(need(e, "classical", 2).bytes);
    return a;
}

}  // namespace

std::string encode_run(const RunArchive& archive, ArchiveFormat format) {
    return format == ArchiveFormat::binary ? encode_binary(archive) : encode_container(archive);
}

RunArchive decode_run(std::string_view bytes) {
    if (bytes.size() < 4) throw IoError("archive: file too short");
    const auto magic = bytes.substr(0, 4);
    if (magic == kRunMagic) return decode_binary(bytes);
    if (magic == kContainerMagic) return decode_container(bytes);
    throw IoError("archive: unknown magic (expected WTRA or WTMC)");
}

void save_run(const RunArchive& archive, const std::string& path, ArchiveFormat format) {
    detail::write_file(path, encode_run(archive, format));
}

RunArchive load_run(const std::string& path) { return decode_run(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// text stream

std::string record_to_json(const ObservableRecord& r) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind;
    j["index"] = r.index;
    j["time"] = r.time;
    j["energy"] = r.energy;
    j["energy_parts"] = nlohmann::ordered_json::object();
    for (const auto& [name, v] : r.energy_parts) j["energy_parts"][name] = v;
    j["norm"] = r.norm;
    j["acf_re"] = r.acf.real();
    j["acf_im"] = r.acf.imag();
    j["acf_abs"] = std::abs(r.acf);
    nlohmann::ordered_json sites = nlohmann::ordered_json::object();
    for (const auto& [name, values] : r.sites) {
        std::vector<double> mean, unc;
        for (const auto& m : values) {
            mean.push_back(m.mean);
            unc.push_back(m.uncertainty);
        }
        sites[name] = {{"mean", mean}, {"uncertainty", unc}};
    }
    if (!r.populations.empty()) sites["populations"] = r.populations;
    j["sites"] = std::move(sites);
    return j.dump();
}

void write_records_ndjson(const std::vector<ObservableRecord>& records, const std::string& path) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r);
        out += '\n';
    }
    detail::write_file(path, out);
}

}  // namespace chaintt
