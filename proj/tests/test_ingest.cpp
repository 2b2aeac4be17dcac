#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "labelsel/ingest.hpp"
#include "support/oracles.hpp"

using namespace labelsel;

namespace {

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name, const std::string& body) {
  auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

std::filesystem::path write_bytes(const std::filesystem::path& dir, const std::string& name,
                                  const std::vector<std::uint8_t>& bytes) {
  auto p = dir / name;
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return p;
}

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::ConfigError;
}

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> nd(0.0f, 3.0f);
  std::vector<float> data(rows * dim);
  for (auto& v : data) v = nd(gen);
  return EmbeddingMatrix::with_contiguous_ids(rows, dim, std::move(data));
}

}  // namespace

TEST_CASE("embeddings csv parses header and rows in file order") {
  auto dir = oracle::scratch_dir("ingest");
  auto m = read_embeddings_csv(write_text(dir, "a.csv", "id,f0,f1\n0,1.0,2.0\n1,3.0,4.0\n"));
  CHECK(m.rows() == 2);
  CHECK(m.dim() == 2);
  CHECK(m.ids() == std::vector<SampleId>{0, 1});
  CHECK(m.at(1, 0) == 3.0f);
  CHECK(m.at(0, 1) == 2.0f);
}

TEST_CASE("embeddings csv errors name the offending row") {
  auto dir = oracle::scratch_dir("ingest");
  try {
    read_embeddings_csv(write_text(dir, "r.csv", "id,f0,f1\n0,1.0,2.0\n1,3.0\n"));
    FAIL("expected RaggedRow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RaggedRow);
    CHECK(e.row() == 2);
  }
  try {
    read_embeddings_csv(write_text(dir, "d.csv", "id,f0\n0,1.0\n0,2.0\n"));
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateId);
    CHECK(std::string(e.what()).find("id 0") != std::string::npos);
  }
  try {
    read_embeddings_csv(write_text(dir, "n.csv", "id,f0,f1\n0,1.0,2.0\n1,3.0,nan\n"));
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFiniteValue);
    CHECK(e.row() == 2);
    CHECK(e.col() == 1);
  }
  CHECK(error_of([&] { read_embeddings_csv(write_text(dir, "h.csv", "0,1.0,2.0\n")); }) == Errc::MissingHeader);
}

TEST_CASE("EMB1 minimal file decodes") {
  std::vector<std::uint8_t> bytes = {'E', 'M', 'B', '1', 1, 0, 0, 0, 2, 0, 0, 0};
  float vals[2] = {0.0f, 1.0f};
  for (float v : vals) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);  // host is little-endian on every supported target
    bytes.insert(bytes.end(), b, b + 4);
  }
  auto m = decode_embeddings_bin(bytes);
  CHECK(m.rows() == 1);
  CHECK(m.dim() == 2);
  CHECK(m.at(0, 0) == 0.0f);
  CHECK(m.at(0, 1) == 1.0f);
  CHECK(m.ids() == std::vector<SampleId>{0});
}

TEST_CASE("EMB1 malformed inputs") {
  auto dir = oracle::scratch_dir("ingest");
  std::vector<std::uint8_t> seven = {'E', 'M', 'B', '1', 1, 0, 0};
  CHECK(error_of([&] { read_embeddings_bin(write_bytes(dir, "t.bin", seven)); }) == Errc::TruncatedFile);
  std::vector<std::uint8_t> bad = {'E', 'M', 'B', '2', 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(error_of([&] { decode_embeddings_bin(bad); }) == Errc::BadMagic);

  auto good = encode_embeddings_bin(random_matrix(3, 2, 1));
  good.pop_back();
  CHECK(error_of([&] { decode_embeddings_bin(good); }) == Errc::TruncatedFile);

  std::vector<std::uint8_t> inf_file = {'E', 'M', 'B', '1', 1, 0, 0, 0, 1, 0, 0, 0, 0x00, 0x00, 0x80, 0x7F};
  CHECK(error_of([&] { decode_embeddings_bin(inf_file); }) == Errc::NonFiniteValue);
}

TEST_CASE("EMB1 size arithmetic and contiguous-id contract") {
  auto dir = oracle::scratch_dir("ingest");
  auto m = EmbeddingMatrix::with_contiguous_ids(2, 2, {1, 0, 0, 1});
  write_embeddings_bin(m, dir / "i.bin");
  CHECK(std::filesystem::file_size(dir / "i.bin") == 28);

  EmbeddingMatrix gap({0, 2}, 1, {1.0f, 2.0f});
  CHECK(error_of([&] { write_embeddings_bin(gap, dir / "g.bin"); }) == Errc::NonContiguousIds);
}

TEST_CASE("EMB1 round trip is bit-exact over random matrices") {
  auto dir = oracle::scratch_dir("ingest");
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t rows = 1 + gen() % 12;
    const std::size_t dim = 1 + gen() % 6;
    auto m = random_matrix(rows, dim, gen());
    write_embeddings_bin(m, dir / "rt.bin");
    auto back = read_embeddings_bin(dir / "rt.bin");
    REQUIRE(back.rows() == rows);
    CHECK(std::memcmp(back.data().data(), m.data().data(), m.data().size() * sizeof(float)) == 0);
    CHECK(back == m);
  }
}

TEST_CASE("csv and binary encodings agree after 9-digit round trip") {
  auto dir = oracle::scratch_dir("ingest");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = random_matrix(6, 4, seed);
    write_embeddings_csv(m, dir / "m.csv", std::vector<std::string>{"comment line"});
    write_embeddings_bin(m, dir / "m.bin");
    CHECK(read_embeddings_csv(dir / "m.csv") == read_embeddings_bin(dir / "m.bin"));
  }
}

TEST_CASE("labels csv") {
  auto dir = oracle::scratch_dir("ingest");
  auto l = read_labels(write_text(dir, "l.csv", "id,label\n0,0\n1,1\n2,1\n"));
  CHECK(l.classes == 2);
  CHECK(l.labels == std::map<SampleId, ClassIndex>{{0, 0}, {1, 1}, {2, 1}});
  CHECK(error_of([&] { read_labels(write_text(dir, "n.csv", "id,label\n0,-1\n")); }) == Errc::NegativeLabel);
  CHECK(error_of([&] { read_labels(write_text(dir, "d.csv", "id,label\n0,0\n0,1\n")); }) == Errc::DuplicateId);
  CHECK(error_of([&] { read_labels(write_text(dir, "h.csv", "0,0\n")); }) == Errc::MissingHeader);

  write_labels(l, dir / "w.csv");
  CHECK(read_labels(dir / "w.csv") == l);
}

TEST_CASE("predictions csv") {
  auto dir = oracle::scratch_dir("ingest");
  auto u = read_predictions(write_text(dir, "u.csv", "id,p0,p1\n0,0.5,0.5\n"));
  CHECK(u.classes() == 2);
  CHECK(u.row(0)[0] == 0.5);

  auto one_hot = read_predictions(write_text(dir, "o.csv", "id,p0,p1\n0,1.0,0.0\n"));
  CHECK(one_hot.row(0)[0] == 1.0);

  try {
    read_predictions(write_text(dir, "b.csv", "id,p0,p1\n0,0.9,0.2\n"));
    FAIL("expected RowNotNormalized");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RowNotNormalized);
    CHECK(e.row() == 1);
    CHECK(std::string(e.what()).find("1.1") != std::string::npos);
  }
  CHECK(error_of([&] { read_predictions(write_text(dir, "neg.csv", "id,p0,p1\n0,-0.1,1.1\n")); }) ==
        Errc::NegativeProbability);

  // Within tolerance: accepted and renormalized.
  auto near = read_predictions(write_text(dir, "near.csv", "id,p0,p1\n0,0.500004,0.5\n"));
  CHECK(near.row(0)[0] + near.row(0)[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("matrix invariants") {
  CHECK(error_of([] { EmbeddingMatrix({}, 1, {}); }) == Errc::EmptyMatrix);
  CHECK(error_of([] { EmbeddingMatrix({0, 0}, 1, {1.0f, 2.0f}); }) == Errc::DuplicateId);
  auto m = random_matrix(5, 2, 3);
  std::vector<std::size_t> pos{4, 1};
  auto s = m.subset(pos);
  CHECK(s.ids() == std::vector<SampleId>{4, 1});
  CHECK(s.at(0, 1) == m.at(4, 1));
}
