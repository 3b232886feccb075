#include <doctest.h>

#include <random>
#include <string>

#include "laar/core.hpp"
#include "laar/workload.hpp"
#include "test_support.hpp"

using namespace laar;

namespace {

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (const char c : s) n += (static_cast<unsigned char>(c) & 0xC0U) != 0x80U;
    return n;
}

}  // namespace

TEST_CASE("classify_language follows the kana > CJK > ASCII cascade") {
    CHECK(classify_language("Key: 6ab6ea3e-f288-4f33-ba46-7f42bb75b03f. The value associated") ==
          LanguageClass::English);
    CHECK(classify_language("キーの値は") == LanguageClass::Japanese);
    CHECK(classify_language("の値は") == LanguageClass::Japanese);
    CHECK(classify_language("键值") == LanguageClass::Chinese);
    CHECK(classify_language("") == LanguageClass::Unknown);
    CHECK(classify_language("1234-5678 {}") == LanguageClass::Unknown);
    // Katakana alone, with ideographs after it.
    CHECK(classify_language("データ値") == LanguageClass::Japanese);
}

TEST_CASE("kana or CJK detection survives ASCII prefix extension") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> ch(32, 126);
    std::uniform_int_distribution<int> len(0, 300);
    const std::string samples[] = {"値は", "键值", "JSON数据", "キー"};
    for (int trial = 0; trial < 500; ++trial) {
        for (const auto& s : samples) {
            std::string prefix;
            for (int i = len(rng); i > 0; --i) prefix.push_back(static_cast<char>(ch(rng)));
            CHECK(classify_language(prefix + s) == classify_language(s));
        }
    }
}

TEST_CASE("sample_text keeps head and tail") {
    CHECK(sample_text("abcdef", 2) == "abef");
    CHECK(sample_text("abc", 10) == "abc");
    CHECK(sample_text("abcd", 2) == "abcd");
    CHECK(sample_text("", 4).empty());
    // Windows count code points, not bytes.
    CHECK(sample_text("値a値b値c", 1) == "値c");
}

TEST_CASE("sample_text of a 64K prompt is 1024 characters ending with the question") {
    const auto q = testing::english_queries(1, 65536).front();
    const auto prompt = q.prompt();
    const auto sample = sample_text(prompt, 512);
    CHECK(code_points(sample) == 1024);
    CHECK(sample.ends_with(q.question));
    CHECK(sample.starts_with("JSON data: {"));
}

TEST_CASE("estimate_tokens") {
    CHECK(estimate_tokens("", LanguageClass::English) == 0);
    CHECK(estimate_tokens(std::string(8192, 'x'), LanguageClass::English) == 2048);
    CHECK(estimate_tokens(std::string(8193, 'x'), LanguageClass::English) == 2049);
    CHECK(estimate_tokens("値は", LanguageClass::Japanese) == 2);

    const auto q = testing::english_queries(1, 16384).front();
    const auto est = static_cast<double>(estimate_tokens(q.prompt(), LanguageClass::English));
    CHECK(est >= 0.8 * 16384);
    CHECK(est <= 1.2 * 16384);
}

TEST_CASE("bucket_of uses inclusive upper bounds") {
    CHECK(bucket_of(0) == LengthBucket::B4K);
    CHECK(bucket_of(4096) == LengthBucket::B4K);
    CHECK(bucket_of(4097) == LengthBucket::B8K);
    CHECK(bucket_of(8192) == LengthBucket::B8K);
    CHECK(bucket_of(16384) == LengthBucket::B16K);
    CHECK(bucket_of(32768) == LengthBucket::B32K);
    CHECK(bucket_of(65536) == LengthBucket::B64K);
    CHECK(bucket_of(65537) == LengthBucket::BOver);
    CHECK(bucket_of(70000) == LengthBucket::BOver);

    auto prev = bucket_of(0);
    for (std::uint64_t t = 1; t <= 70000; ++t) {
        const auto b = bucket_of(t);
        CHECK_UNARY(static_cast<int>(b) >= static_cast<int>(prev));
        CHECK(t <= bucket_upper_bound(b));
        if (b != LengthBucket::B4K) {
            CHECK(t > bucket_upper_bound(static_cast<LengthBucket>(static_cast<int>(b) - 1)));
        }
        prev = b;
    }
}

TEST_CASE("extract_features round-trips generated prompts") {
    SUBCASE("English 16K") {
        const auto q = testing::english_queries(1, 16384).front();
        const auto f = extract_features(q.prompt());
        CHECK(f.language == LanguageClass::English);
        CHECK(f.bucket == LengthBucket::B16K);
        CHECK(f.estimated_tokens == 16384);
        CHECK(f.task_type == "kv-lookup");
    }
    SUBCASE("empty") {
        const auto f = extract_features("");
        CHECK(f.language == LanguageClass::Unknown);
        CHECK(f.estimated_tokens == 0);
        CHECK(f.bucket == LengthBucket::B4K);
    }
    SUBCASE("Japanese 4K") {
        const LanguageClass ja[] = {LanguageClass::Japanese};
        const std::uint64_t len[] = {4096};
        const auto q = generate_workload(1, ja, len, 3).front();
        const auto f = extract_features(q.prompt());
        CHECK(f.language == LanguageClass::Japanese);
        CHECK(f.bucket == LengthBucket::B4K);
        CHECK(static_cast<double>(f.estimated_tokens) == doctest::Approx(4096).epsilon(0.2));
    }
    SUBCASE("Chinese 32K") {
        const LanguageClass zh[] = {LanguageClass::Chinese};
        const std::uint64_t len[] = {32768};
        const auto q = generate_workload(1, zh, len, 3).front();
        const auto f = extract_features(q.prompt());
        CHECK(f.language == LanguageClass::Chinese);
        CHECK(f.bucket == LengthBucket::B32K);
    }
}

TEST_CASE("extract_features work is bounded by the sample window") {
    const auto small = testing::english_queries(1, 4096).front().prompt();
    const auto large = testing::english_queries(1, 65536).front().prompt();
    ScanStats s_small;
    ScanStats s_large;
    (void)extract_features(small, 512, &s_small);
    (void)extract_features(large, 512, &s_large);
    CHECK(s_small.bytes_inspected == s_large.bytes_inspected);
    CHECK(s_large.bytes_inspected <= 2 * 2 * 4 * 512);
    CHECK(s_large.bytes_inspected < large.size() / 100);
}

TEST_CASE("fnv1a64 reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("names parse back") {
    for (const auto l : kAllLanguages) CHECK(parse_language(to_string(l)) == l);
    for (const auto b : kAllBuckets) CHECK(parse_bucket(to_string(b)) == b);
    CHECK_FALSE(parse_language("fr").has_value());
    CHECK_FALSE(parse_bucket("128K").has_value());
}
