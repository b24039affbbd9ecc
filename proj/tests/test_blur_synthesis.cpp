#include <doctest.h>

#include <cmath>
#include <fstream>

#include "estrnn/blur.hpp"
#include "estrnn/dataset.hpp"
#include "estrnn/errors.hpp"
#include "estrnn/image_io.hpp"
#include "support.hpp"

using namespace estrnn;
using testsup::random_tensor;

namespace {

VideoTensor random_encoded(int n, int h, int w, Rng& rng) {
    return VideoTensor{random_tensor({n, 3, h, w}, rng, 0.0, 1.0), ColorSpace::Encoded};
}

SynthesisConfig gamma_cfg(int n) {
    SynthesisConfig cfg;
    cfg.n_subframes = n;
    cfg.stride = n;
    return cfg;
}

SynthesisConfig identity_cfg(int n) {
    SynthesisConfig cfg = gamma_cfg(n);
    cfg.crf = "identity";
    return cfg;
}

}  // namespace

TEST_CASE("crf transform") {
    Rng rng(1);
    SynthesisConfig cfg = gamma_cfg(4);

    SUBCASE("identity passes values through") {
        SynthesisConfig id = identity_cfg(4);
        VideoTensor img = random_encoded(2, 8, 8, rng);
        VideoTensor lin = crf_transform(img, id, CrfDirection::Linearize);
        CHECK(lin.space == ColorSpace::Linear);
        CHECK(testsup::bit_equal(lin.data, img.data));
    }

    SUBCASE("gamma 2.2 encodes 0.5 to about 0.7297") {
        VideoTensor img{Tensor::full({1, 3, 4, 4}, 0.5), ColorSpace::Linear};
        VideoTensor enc = crf_transform(img, cfg, CrfDirection::Encode);
        CHECK(enc.data[0] == doctest::Approx(std::pow(0.5, 1.0 / 2.2)).epsilon(1e-12));
        CHECK(enc.data[0] == doctest::Approx(0.7297).epsilon(2e-4));
    }

    SUBCASE("encode then linearize is the identity within 1e-6") {
        VideoTensor img{random_tensor({3, 3, 8, 8}, rng, 0.0, 1.0), ColorSpace::Linear};
        VideoTensor round = crf_transform(crf_transform(img, cfg, CrfDirection::Encode), cfg,
                                          CrfDirection::Linearize);
        CHECK(testsup::max_abs_diff(round.data, img.data) < 1e-6);
    }

    SUBCASE("out-of-range values are rejected") {
        VideoTensor img{Tensor::full({1, 3, 2, 2}, 1.5), ColorSpace::Linear};
        CHECK_THROWS_AS(crf_transform(img, cfg, CrfDirection::Encode), NumericError);
    }
}

TEST_CASE("synthesize_blur") {
    Rng rng(2);

    SUBCASE("identical subframes average to themselves under any crf") {
        for (const char* crf : {"identity", "gamma"}) {
            SynthesisConfig cfg = gamma_cfg(5);
            cfg.crf = crf;
            Tensor one = random_tensor({3, 6, 6}, rng, 0.01, 0.99);
            VideoTensor sub{Tensor({5, 3, 6, 6}), ColorSpace::Encoded};
            for (int t = 0; t < 5; ++t) {
                std::copy(one.data(), one.data() + one.size(), sub.data.data() + t * one.size());
            }
            Rng noise(3);
            Tensor blur = synthesize_blur(sub, cfg, noise);
            CHECK(testsup::max_abs_diff(blur, one) < 1e-12);
        }
    }

    SUBCASE("identity crf averages constants arithmetically") {
        SynthesisConfig cfg = identity_cfg(2);
        VideoTensor sub{Tensor({2, 3, 4, 4}), ColorSpace::Encoded};
        for (std::int64_t i = 0; i < sub.data.size() / 2; ++i) sub.data[i] = 0.2;
        for (std::int64_t i = sub.data.size() / 2; i < sub.data.size(); ++i) sub.data[i] = 0.4;
        Rng noise(4);
        Tensor blur = synthesize_blur(sub, cfg, noise);
        CHECK(blur.min() == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(blur.max() == doctest::Approx(0.3).epsilon(1e-12));
    }

    SUBCASE("gamma crf averages black and white to 0.5^(1/2.2)") {
        SynthesisConfig cfg = gamma_cfg(2);
        VideoTensor sub{Tensor({2, 3, 4, 4}), ColorSpace::Encoded};
        for (std::int64_t i = sub.data.size() / 2; i < sub.data.size(); ++i) sub.data[i] = 1.0;
        Rng noise(5);
        Tensor blur = synthesize_blur(sub, cfg, noise);
        CHECK(blur.min() == doctest::Approx(0.7297).epsilon(2e-4));
    }

    SUBCASE("subframe count must match the config") {
        SynthesisConfig cfg = gamma_cfg(8);
        Rng noise(6);
        VideoTensor sub = random_encoded(5, 4, 4, rng);
        CHECK_THROWS_AS(synthesize_blur(sub, cfg, noise), ShapeError);
    }

    SUBCASE("brightness conservation, convexity, order invariance (identity crf)") {
        SynthesisConfig cfg = identity_cfg(6);
        VideoTensor sub = random_encoded(6, 8, 8, rng);
        Rng noise(7);
        Tensor blur = synthesize_blur(sub, cfg, noise);

        double sub_mean = 0.0;
        for (std::int64_t i = 0; i < sub.data.size(); ++i) sub_mean += sub.data[i];
        sub_mean /= static_cast<double>(sub.data.size());
        double blur_mean = 0.0;
        for (std::int64_t i = 0; i < blur.size(); ++i) blur_mean += blur[i];
        blur_mean /= static_cast<double>(blur.size());
        CHECK(blur_mean == doctest::Approx(sub_mean).epsilon(1e-9));

        const std::int64_t per = blur.size();
        for (std::int64_t i = 0; i < per; ++i) {
            double lo = 1.0, hi = 0.0;
            for (int t = 0; t < 6; ++t) {
                lo = std::min(lo, sub.data[t * per + i]);
                hi = std::max(hi, sub.data[t * per + i]);
            }
            CHECK(blur[i] >= lo - 1e-12);
            CHECK(blur[i] <= hi + 1e-12);
        }

        VideoTensor permuted{Tensor(sub.data.shape()), ColorSpace::Encoded};
        const int order[6] = {3, 0, 5, 1, 4, 2};
        for (int t = 0; t < 6; ++t) {
            std::copy(sub.data.data() + order[t] * per, sub.data.data() + (order[t] + 1) * per,
                      permuted.data.data() + t * per);
        }
        Rng noise2(8);
        Tensor blur2 = synthesize_blur(permuted, cfg, noise2);
        CHECK(testsup::max_abs_diff(blur, blur2) < 1e-12);
    }

    SUBCASE("noise statistics match sigma away from the range edges") {
        SynthesisConfig cfg = identity_cfg(1);
        cfg.noise_sigma = 0.05;
        // Mid-gray frames keep the noise far from the clamp.
        VideoTensor sub{Tensor::full({1, 3, 640, 640}, 0.5), ColorSpace::Encoded};
        Rng noise(9);
        Tensor noisy = synthesize_blur(sub, cfg, noise);
        REQUIRE(noisy.size() >= 1000000);  // >= 1e6 samples for the estimate
        double mean = 0.0;
        for (std::int64_t i = 0; i < noisy.size(); ++i) mean += noisy[i] - 0.5;
        mean /= static_cast<double>(noisy.size());
        double var = 0.0;
        for (std::int64_t i = 0; i < noisy.size(); ++i) {
            const double d = noisy[i] - 0.5 - mean;
            var += d * d;
        }
        var /= static_cast<double>(noisy.size() - 1);
        CHECK(std::sqrt(var) == doctest::Approx(0.05).epsilon(0.05));
    }
}

TEST_CASE("center-aligned sharp selection") {
    Rng rng(10);
    SynthesisConfig cfg = gamma_cfg(7);
    VideoTensor sub = random_encoded(7, 4, 4, rng);
    Tensor sharp = select_center_sharp(sub, cfg);
    const std::int64_t per = sharp.size();
    for (std::int64_t i = 0; i < per; ++i) CHECK(sharp[i] == sub.data[3 * per + i]);

    SynthesisConfig even = gamma_cfg(8);
    CHECK(even.center_index() == 3);
    even.center_mode = "ceil";
    CHECK(even.center_index() == 4);

    SynthesisConfig one = gamma_cfg(1);
    CHECK(one.center_index() == 0);
}

TEST_CASE("window arithmetic") {
    CHECK(window_count(100, 8, 8) == 12);
    CHECK(window_count(96, 8, 8) == 12);
    CHECK(window_count(8, 8, 8) == 1);
    CHECK(window_count(7, 8, 8) == 0);
    CHECK(window_count(10, 1, 1) == 10);
    CHECK(window_count(100, 8, 4) == 24);
}

TEST_CASE("build_dataset end to end") {
    testsup::TempDir tmp("builddata");
    generate_toy_highfps(tmp.path() / "hf", 3, 20, 32, 32, 11);

    SUBCASE("window counts, splits and manifest round-trip") {
        SynthesisConfig cfg;
        cfg.n_subframes = 4;
        cfg.stride = 4;
        cfg.train_frac = 1.0;
        cfg.val_frac = 0.0;
        cfg.test_frac = 0.0;
        DatasetManifest manifest = build_dataset(tmp.path() / "hf", cfg, tmp.path() / "data");
        REQUIRE(manifest.splits.at("train").size() == 3);
        for (const auto& e : manifest.splits.at("train")) CHECK(e.frames == window_count(20, 4, 4));
        CHECK(manifest.height == 32);
        CHECK(manifest.width == 32);
        manifest.validate_files(tmp.path() / "data");

        DatasetManifest loaded = DatasetManifest::load(tmp.path() / "data");
        CHECK(loaded.to_json() == manifest.to_json());
    }

    SUBCASE("sequences shorter than the window are skipped with a warning") {
        generate_toy_highfps(tmp.path() / "hf2", 2, 20, 32, 32, 12);
        // Truncate the second sequence below the window size.
        for (int t = 5; t < 20; ++t) {
            char name[16];
            std::snprintf(name, sizeof(name), "%08d.png", t);
            std::filesystem::remove(tmp.path() / "hf2" / "seq001" / name);
        }
        SynthesisConfig cfg;
        cfg.n_subframes = 8;
        cfg.stride = 8;
        cfg.train_frac = 1.0;
        cfg.val_frac = 0.0;
        cfg.test_frac = 0.0;
        DatasetManifest manifest = build_dataset(tmp.path() / "hf2", cfg, tmp.path() / "data2");
        CHECK(manifest.splits.at("train").size() == 1);
        REQUIRE(manifest.warnings.size() == 1);
        CHECK(manifest.warnings[0].find("seq001") != std::string::npos);
        CHECK(manifest.warnings[0].find("skipped") != std::string::npos);
    }

    SUBCASE("n_subframes=1 with identity crf returns inputs unchanged") {
        SynthesisConfig cfg;
        cfg.n_subframes = 1;
        cfg.stride = 1;
        cfg.crf = "identity";
        cfg.train_frac = 1.0;
        cfg.val_frac = 0.0;
        cfg.test_frac = 0.0;
        DatasetManifest manifest = build_dataset(tmp.path() / "hf", cfg, tmp.path() / "ident");
        (void)manifest;
        // Blur equals sharp equals the source frame, byte-exact through the
        // 8-bit PNG round trip.
        Tensor src = read_png(tmp.path() / "hf" / "seq000" / "00000000.png");
        Tensor blur = read_png(tmp.path() / "ident" / "train" / "seq000" / "blur" / "00000000.png");
        Tensor sharp = read_png(tmp.path() / "ident" / "train" / "seq000" / "sharp" / "00000000.png");
        CHECK(testsup::bit_equal(blur, src));
        CHECK(testsup::bit_equal(sharp, src));
    }

    SUBCASE("fractional splits follow the 60/20/20 pattern") {
        testsup::TempDir tmp2("splits");
        generate_toy_highfps(tmp2.path() / "hf", 5, 6, 16, 16, 13);
        SynthesisConfig cfg;
        cfg.n_subframes = 2;
        cfg.stride = 2;
        DatasetManifest manifest = build_dataset(tmp2.path() / "hf", cfg, tmp2.path() / "data");
        CHECK(manifest.splits.at("train").size() == 3);
        CHECK(manifest.splits.at("validation").size() == 1);
        CHECK(manifest.splits.at("test").size() == 1);
    }
}

TEST_CASE("png round trip is exact for 8-bit data") {
    testsup::TempDir tmp("png");
    Rng rng(14);
    Tensor frame({3, 9, 7});
    for (std::int64_t i = 0; i < frame.size(); ++i) {
        frame[i] = static_cast<double>(rng.uniform_index(256)) / 255.0;
    }
    write_png(tmp.path() / "f.png", frame);
    Tensor back = read_png(tmp.path() / "f.png");
    CHECK(testsup::bit_equal(back, frame));
    CHECK_THROWS_AS(read_png(tmp.path() / "missing.png"), IoError);
}
