#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "glsim/cost_model.hpp"
#include "glsim/errors.hpp"

using namespace glsim;

TEST_CASE("matmul_flops counts exactly n^2 * (2n - 1)") {
    CHECK(matmul_flops(1) == 1);
    CHECK(matmul_flops(2) == 12);
    CHECK(matmul_flops(10) == 1900);
    CHECK(matmul_flops(325) == 68550625ull); // 325^2 * 649
}

TEST_CASE("effective_tokens per method") {
    const cost_arch b16 = cost_preset("B-16");
    const cost_arch b14 = cost_preset("B-14");
    const cost_arch t16 = cost_preset("T-16");

    // overlapping grid at stride patch-4: ((S-P)/(P-4) + 1)^2 + 1
    CHECK(effective_tokens(dfsm_method::psm, b16, 224) == 325);   // 18^2 + 1
    CHECK(effective_tokens(dfsm_method::sacm, b16, 224) == 325);
    CHECK(effective_tokens(dfsm_method::psm, b14, 224) == 485);   // 22^2 + 1
    CHECK(effective_tokens(dfsm_method::psm, t16, 448) == 1370);  // 37^2 + 1

    // non-overlapping grid: rollout/maws keep CLS, gls drops it
    CHECK(effective_tokens(dfsm_method::rollout, b16, 224) == 197);
    CHECK(effective_tokens(dfsm_method::maws, b16, 224) == 197);
    CHECK(effective_tokens(dfsm_method::gls, b16, 224) == 196);
    CHECK(effective_tokens(dfsm_method::rollout, b14, 224) == 257);
    CHECK(effective_tokens(dfsm_method::gls, b14, 768) == 2916); // 54^2
}

TEST_CASE("dfsm_flops closed forms at spot-checked operating points") {
    const cost_arch b16 = cost_preset("B-16");

    // psm B-16/224: (12-2) * 12 * matmul_flops(325) / 1e6
    CHECK(dfsm_flops(dfsm_method::psm, b16, 224) ==
          doctest::Approx(120.0 * 68550625.0 / 1e6).epsilon(1e-12));

    // gls B-16/448: 3 * 784 * 768 flops exactly
    CHECK(dfsm_flops(dfsm_method::gls, b16, 448) ==
          doctest::Approx(3.0 * 784.0 * 768.0 / 1e6).epsilon(1e-12));

    // maws B-16/224: 4.5 * 12 * 12 * 197 / 1e6
    CHECK(dfsm_flops(dfsm_method::maws, b16, 224) ==
          doctest::Approx(0.127656).epsilon(1e-12));

    // rollout B-16/224: 11 * matmul_flops(197) + 12 * 13 * 197^2
    const double roll = (11.0 * 15251937.0 + 12.0 * 13.0 * 38809.0) / 1e6;
    CHECK(dfsm_flops(dfsm_method::rollout, b16, 224) == doctest::Approx(roll).epsilon(1e-12));

    // sacm B-16/224: (12*11 + 1) * 325^2
    CHECK(dfsm_flops(dfsm_method::sacm, b16, 224) ==
          doctest::Approx(133.0 * 105625.0 / 1e6).epsilon(1e-12));
}

TEST_CASE("backbone_flops closed form") {
    const cost_arch b16 = cost_preset("B-16");
    // 12*(12*197*768^2 + 2*197^2*768) + 2*196*768*3*256, in MFLOPs
    const double expect =
        (12.0 * (12.0 * 197 * 768 * 768 + 2.0 * 197 * 197 * 768) +
         2.0 * 196 * 768 * 3 * 256) /
        1e6;
    CHECK(backbone_flops(b16, 224) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(backbone_flops(b16, 224) == doctest::Approx(17678.665728).epsilon(1e-9));
}

TEST_CASE("cost_table layout: arch-major, sizes in order, methods in enum order") {
    const cost_report rep = cost_table(default_cost_archs(), {224, 448, 768, 1024});
    REQUIRE(rep.entries.size() == 3 * 4 * 5);

    CHECK(rep.entries[0].arch == "B-16");
    CHECK(rep.entries[0].image_size == 224);
    CHECK(rep.entries[0].method == dfsm_method::psm);
    CHECK(rep.entries[4].method == dfsm_method::gls);
    CHECK(rep.entries[5].image_size == 448);
    CHECK(rep.entries[20].arch == "B-14");
    CHECK(rep.entries[40].arch == "T-16");

    for (const cost_entry& e : rep.entries) {
        const cost_arch arch = cost_preset(e.arch);
        CHECK(e.mflops == dfsm_flops(e.method, arch, e.image_size));
        CHECK(e.pct_backbone ==
              doctest::Approx(100.0 * e.mflops / backbone_flops(arch, e.image_size))
                  .epsilon(1e-12));
    }
}

TEST_CASE("method cost ordering holds at every operating point") {
    for (const cost_arch& arch : default_cost_archs())
        for (int s : {224, 448, 768, 1024}) {
            const double maws = dfsm_flops(dfsm_method::maws, arch, s);
            const double gls = dfsm_flops(dfsm_method::gls, arch, s);
            const double sacm = dfsm_flops(dfsm_method::sacm, arch, s);
            const double roll = dfsm_flops(dfsm_method::rollout, arch, s);
            const double psm = dfsm_flops(dfsm_method::psm, arch, s);
            CAPTURE(arch.name);
            CAPTURE(s);
            CHECK(maws < gls);
            CHECK(gls < sacm);
            CHECK(sacm < roll);
            CHECK(roll < psm);
        }
}

TEST_CASE("costs grow monotonically with image size") {
    for (const cost_arch& arch : default_cost_archs())
        for (dfsm_method m : {dfsm_method::psm, dfsm_method::rollout, dfsm_method::maws,
                              dfsm_method::sacm, dfsm_method::gls}) {
            double prev = 0.0;
            for (int s : {224, 448, 768, 1024}) {
                const double v = dfsm_flops(m, arch, s);
                CHECK(v > prev);
                prev = v;
            }
            CHECK(backbone_flops(arch, 1024) > backbone_flops(arch, 224));
        }
}

TEST_CASE("round_to_2sf") {
    CHECK(round_to_2sf(8226.075) == doctest::Approx(8200.0).epsilon(1e-12));
    CHECK(round_to_2sf(0.00125139) == doctest::Approx(0.0013).epsilon(1e-12));
    CHECK(round_to_2sf(46.531) == doctest::Approx(47.0).epsilon(1e-12));
    CHECK(round_to_2sf(0.127656) == doctest::Approx(0.13).epsilon(1e-12));
    CHECK(round_to_2sf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(round_to_2sf(0.0) == 0.0);
    CHECK(round_to_2sf(-8226.075) == doctest::Approx(-8200.0).epsilon(1e-12));
    CHECK(round_to_2sf(99.5) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("format_mflops prints two significant figures") {
    CHECK(format_mflops(8226.075) == "8.2e+03");
    CHECK(format_mflops(0.451584) == "4.5e-01");
    CHECK(format_mflops(0.127656) == "1.3e-01");
    CHECK(format_mflops(170.0) == "1.7e+02");
    CHECK(format_mflops(15015000.0) == "1.5e+07");
}

TEST_CASE("method_name strings") {
    CHECK(std::string(method_name(dfsm_method::psm)) == "PSM");
    CHECK(std::string(method_name(dfsm_method::rollout)) == "Rollout");
    CHECK(std::string(method_name(dfsm_method::maws)) == "MAWS");
    CHECK(std::string(method_name(dfsm_method::sacm)) == "SACM");
    CHECK(std::string(method_name(dfsm_method::gls)) == "GLS");
}

TEST_CASE("cost_preset accepts both spellings and rejects junk") {
    CHECK(cost_preset("b16").name == "B-16");
    CHECK(cost_preset("B-14").width == 768);
    CHECK(cost_preset("B-14").patch == 14);
    CHECK(cost_preset("t16").width == 192);
    CHECK(cost_preset("T-16").heads == 3);
    CHECK(cost_preset("T-16").depth == 12);
    CHECK_THROWS_AS(cost_preset("L-32"), config_error);
}

TEST_CASE("text rendering carries one MFLOPs row and one percent row per size") {
    const cost_report rep = cost_table({cost_preset("B-16")}, {224, 448});
    const std::string text = render_cost_text(rep);

    CHECK(text.find("B-16") != std::string::npos);
    CHECK(text.find("MFLOPs (IS=224)") != std::string::npos);
    CHECK(text.find("MFLOPs (IS=448)") != std::string::npos);
    CHECK(text.find("% of backbone") != std::string::npos);
    CHECK(text.find("PSM") != std::string::npos);
    CHECK(text.find("GLS") != std::string::npos);
    CHECK(text.find("8.2e+03") != std::string::npos); // psm 224
    CHECK(text.find("4.5e-01") != std::string::npos); // gls 224
    CHECK(text.find("46.531") != std::string::npos);  // psm 224 % of backbone

    // every line fits the five 12-char columns after a 24-char label
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line))
        if (line.find("MFLOPs") != std::string::npos) CHECK(line.size() == 24 + 5 * 12);
}

TEST_CASE("csv rendering: header, row count, spot row") {
    const cost_report rep = cost_table(default_cost_archs(), {224, 448, 768, 1024});
    const std::string csv = render_cost_csv(rep);

    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "arch,image_size,method,mflops,pct_backbone");

    int rows = 0;
    bool found = false;
    while (std::getline(lines, line)) {
        ++rows;
        if (line.rfind("B-16,224,PSM,", 0) == 0) {
            found = true;
            CHECK(line.find("8226.075") != std::string::npos);
        }
    }
    CHECK(rows == 60);
    CHECK(found);
}

TEST_CASE("relative_error in percent of the reference error rate") {
    // (100-90.93 pts of error vs 9.89 reference pts) * 100 = -0.82/9.89 * 100
    CHECK(relative_error(90.93, 90.11) == doctest::Approx(-8.2912032).epsilon(1e-6));
    CHECK(relative_error(90.55, 90.11) == doctest::Approx(-4.4489383).epsilon(1e-6));
    CHECK(relative_error(90.11, 90.11) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(relative_error(80.0, 90.0) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK_THROWS_AS(relative_error(90.0, 100.0), config_error);
    CHECK_THROWS_AS(relative_error(90.0, 100.5), config_error);
}
