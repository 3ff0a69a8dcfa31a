#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "chaintt/archive.hpp"
#include "chaintt/checkpoint.hpp"

using namespace chaintt;

namespace {

std::vector<ObservableRecord> sample_records(bool with_state) {
    ExcitonModel model{ChainSpec{3, false, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2);
    QuantumObserver observer(h.op, model.observables(2), with_state);
    std::mt19937_64 rng(5);
    std::vector<Index> dims(3, 2);
    const auto psi0 = random_state(dims, 2, rng);
    std::vector<ObservableRecord> out;
    for (Index k = 0; k < 3; ++k) {
        const auto psi = random_state(dims, 2, rng);
        auto rec = observer.observe(psi, &psi0, "tdse", k, 0.5 * static_cast<double>(k));
        rec.energy_parts["quantum"] = rec.energy;
        out.push_back(std::move(rec));
    }
    return out;
}

RunArchive sample_archive(bool with_state) {
    RunArchive a;
    a.config_text = R"({"model":{"kind":"exciton"}})";
    a.model_text = "exciton N=3";
    a.records = sample_records(with_state);
    std::mt19937_64 rng(9);
    a.checkpoint = random_state(std::vector<Index>{2, 2, 2}, 2, rng);
    ClassicalCheckpoint c;
    c.time = 12.5;
    c.amplitudes = Vector::Constant(3, Complex(0.3, -0.2));
    c.q = RealVector::LinSpaced(3, -1.0, 1.0);
    c.p = RealVector::Constant(3, 0.125);
    a.classical = c;
    return a;
}

void expect_same_records(const std::vector<ObservableRecord>& a, const std::vector<ObservableRecord>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].kind, b[k].kind);
        EXPECT_EQ(a[k].index, b[k].index);
        EXPECT_EQ(a[k].time, b[k].time);
        EXPECT_EQ(a[k].energy, b[k].energy);
        EXPECT_EQ(a[k].energy_parts, b[k].energy_parts);
        EXPECT_EQ(a[k].norm, b[k].norm);
        EXPECT_EQ(a[k].acf, b[k].acf);
        ASSERT_EQ(a[k].densities.size(), b[k].densities.size());
        for (std::size_t i = 0; i < a[k].densities.size(); ++i) EXPECT_EQ(a[k].densities[i], b[k].densities[i]);
        EXPECT_EQ(a[k].populations, b[k].populations);
        ASSERT_EQ(a[k].sites.size(), b[k].sites.size());
        for (const auto& [name, v] : a[k].sites) {
            const auto& w = b[k].sites.at(name);
            ASSERT_EQ(v.size(), w.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                EXPECT_EQ(v[i].mean, w[i].mean);
                EXPECT_EQ(v[i].uncertainty, w[i].uncertainty);
            }
        }
        EXPECT_EQ(a[k].state.has_value(), b[k].state.has_value());
    }
}

}  // namespace

TEST(Archive, BinaryRoundTripIsByteIdentical) {
    const auto a = sample_archive(true);
    const auto bytes = encode_run(a, ArchiveFormat::binary);
    EXPECT_EQ(bytes.substr(0, 4), "WTRA");
    const auto b = decode_run(bytes);
    EXPECT_EQ(b.config_text, a.config_text);
    EXPECT_EQ(b.model_text, a.model_text);
    expect_same_records(a.records, b.records);
    ASSERT_TRUE(b.checkpoint && b.classical);
    EXPECT_EQ(to_dense(*b.checkpoint).data, to_dense(*a.checkpoint).data);
    EXPECT_EQ(b.classical->q, a.classical->q);
    EXPECT_EQ(b.classical->amplitudes, a.classical->amplitudes);
    EXPECT_EQ(encode_run(b, ArchiveFormat::binary), bytes);
}

TEST(Archive, MatrixContainerRoundTripIsByteIdentical) {
    const auto a = sample_archive(false);
    const auto bytes = encode_run(a, ArchiveFormat::matrix_container);
    EXPECT_EQ(bytes.substr(0, 4), "WTMC");
    const auto b = decode_run(bytes);
    expect_same_records(a.records, b.records);
    ASSERT_TRUE(b.checkpoint && b.classical);
    EXPECT_EQ(encode_run(b, ArchiveFormat::matrix_container), bytes);
}

TEST(Archive, OptionalSectionsMayBeAbsent) {
    RunArchive a;
    a.config_text = "{}";
    for (auto f : {ArchiveFormat::binary, ArchiveFormat::matrix_container}) {
        const auto b = decode_run(encode_run(a, f));
        EXPECT_FALSE(b.checkpoint.has_value());
        EXPECT_FALSE(b.classical.has_value());
        EXPECT_TRUE(b.records.empty());
    }
}

TEST(Archive, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "chaintt_archive_test";
    std::filesystem::create_directories(dir);
    const auto a = sample_archive(true);
    for (auto f : {ArchiveFormat::binary, ArchiveFormat::matrix_container}) {
        const auto path = (dir / ("run_" + to_string(f))).string();
        save_run(a, path, f);
        const auto b = load_run(path);
        save_run(b, path + ".again", f);
        std::ifstream x(path, std::ios::binary), y(path + ".again", std::ios::binary);
        const std::string sx((std::istreambuf_iterator<char>(x)), {}), sy((std::istreambuf_iterator<char>(y)), {});
        EXPECT_EQ(sx, sy);
    }
    std::filesystem::remove_all(dir);
    EXPECT_THROW(load_run((dir / "missing").string()), IoError);
}

TEST(Archive, TruncationIsDetected) {
    const auto a = sample_archive(true);
    for (auto f : {ArchiveFormat::binary, ArchiveFormat::matrix_container}) {
        const auto bytes = encode_run(a, f);
        for (std::size_t cut : {std::size_t{3}, std::size_t{7}, bytes.size() / 2, bytes.size() - 1})
            EXPECT_THROW(decode_run(std::string_view(bytes).substr(0, cut)), IoError) << cut;
    }
}

TEST(Archive, VersionMismatchIsDetected) {
    const auto a = sample_archive(false);
    for (auto f : {ArchiveFormat::binary, ArchiveFormat::matrix_container}) {
        auto bytes = encode_run(a, f);
        bytes[4] = static_cast<char>(kArchiveVersion + 1);
        EXPECT_THROW(decode_run(bytes), IoError);
    }
    EXPECT_THROW(decode_run("NOPE1234"), IoError);
}

TEST(Archive, ClassicalCheckpointRoundTrip) {
    ClassicalCheckpoint c;
    c.time = 3.0;
    c.q = RealVector::Constant(4, 2.0);
    c.p = RealVector::Constant(4, -1.0);
    const auto bytes = encode_classical_checkpoint(c);
    const auto d = decode_classical_checkpoint(bytes);
    EXPECT_EQ(d.time, c.time);
    EXPECT_EQ(d.amplitudes.size(), 0);
    EXPECT_EQ(d.q, c.q);
    EXPECT_EQ(d.p, c.p);
    EXPECT_THROW(decode_classical_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 2)), IoError);
}

TEST(Archive, FormatNames) {
    EXPECT_EQ(parse_archive_format("binary"), ArchiveFormat::binary);
    EXPECT_EQ(parse_archive_format("matrix-container"), ArchiveFormat::matrix_container);
    EXPECT_THROW(parse_archive_format("pickle"), ConfigError);
}

TEST(Ndjson, OneObjectPerRecord) {
    const auto recs = sample_records(false);
    const auto line = record_to_json(recs[1]);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"kind", "index", "time", "energy", "energy_parts", "norm", "acf_re", "acf_im"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["kind"], "tdse");
    EXPECT_EQ(j["index"], 1);
    EXPECT_DOUBLE_EQ(j["acf_re"].get<double>(), recs[1].acf.real());

    const auto path = (std::filesystem::temp_directory_path() / "chaintt_records.ndjson").string();
    write_records_ndjson(recs, path);
    std::ifstream in(path);
    std::string l;
    int count = 0;
    while (std::getline(in, l)) {
        EXPECT_TRUE(nlohmann::json::accept(l)) << l;
        ++count;
    }
    EXPECT_EQ(count, 3);
    std::filesystem::remove(path);
}
