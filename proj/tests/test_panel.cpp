// Panel ingestion and the additive-effect adjustment: CSV parsing and
// validation, a hand-computed demeaning oracle, annihilation of additive
// series/time effects, and the passthrough wrapper.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "curvecluster/errors.hpp"
#include "curvecluster/panel.hpp"
#include "curvecluster/rng.hpp"

using namespace curvecluster;

namespace {

PanelData tiny_panel() {
    PanelData p;
    p.n = 2;
    p.T = 2;
    p.series_ids = {"a", "b"};
    p.y = {1.0, 2.0, 3.0, 5.0};
    p.x = {0.1, 0.9, 0.2, 0.8};
    return p;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("demeaning matches the leave-one-out hand computation") {
    // For series i: ystar_it = y_it - rowmean_i - crossmean_t^(i) + grandmean^(i),
    // where the cross and grand means exclude series i.  With
    // Y = [[1,2],[3,5]]:
    //   i=a: rowmean 1.5, cross (3,5), grand 4    -> ( 0.5, -0.5)
    //   i=b: rowmean 4,   cross (1,2), grand 1.5  -> (-0.5,  0.5)
    const TransformedPanel tp = within_transform(tiny_panel());
    CHECK(tp.ystar_at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tp.ystar_at(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(tp.ystar_at(1, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(tp.ystar_at(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tp.row_means[0] == doctest::Approx(1.5));
    CHECK(tp.row_means[1] == doctest::Approx(4.0));
    CHECK(tp.col_sums[0] == doctest::Approx(4.0));
    CHECK(tp.total_sum == doctest::Approx(11.0));
}

TEST_CASE("demeaning annihilates additive series and time effects") {
    Rng rng(404);
    const int n = 6, T = 40;
    PanelData clean, shifted;
    clean.n = shifted.n = n;
    clean.T = shifted.T = T;
    std::vector<double> alpha(n), gamma(T);
    for (double& v : alpha) v = 3.0 * rng.normal();
    for (double& v : gamma) v = 2.0 * rng.normal();
    for (int i = 0; i < n; ++i) {
        clean.series_ids.push_back("s" + std::to_string(i));
        shifted.series_ids.push_back("s" + std::to_string(i));
        for (int t = 0; t < T; ++t) {
            const double x = rng.uniform01();
            const double y = std::sin(5.0 * x) + 0.1 * rng.normal();
            clean.x.push_back(x);
            clean.y.push_back(y);
            shifted.x.push_back(x);
            shifted.y.push_back(y + alpha[i] + gamma[t]);
        }
    }
    const TransformedPanel a = within_transform(clean);
    const TransformedPanel b = within_transform(shifted);
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < T; ++t)
            CHECK(a.ystar_at(i, t) == doctest::Approx(b.ystar_at(i, t)).epsilon(1e-10));
}

TEST_CASE("passthrough keeps responses untouched but fills the summaries") {
    const PanelData p = tiny_panel();
    const TransformedPanel tp = transform_passthrough(p);
    for (int i = 0; i < p.n; ++i)
        for (int t = 0; t < p.T; ++t) CHECK(tp.ystar_at(i, t) == p.y_at(i, t));
    CHECK(tp.row_means[0] == doctest::Approx(1.5));
    CHECK(tp.row_means[1] == doctest::Approx(4.0));
    CHECK(tp.col_sums[1] == doctest::Approx(7.0));
    CHECK(tp.total_sum == doctest::Approx(11.0));
    CHECK(tp.series_ids == p.series_ids);
}

TEST_CASE("panel validation refuses structural problems") {
    PanelData p = tiny_panel();
    p.n = 1;
    p.y = {1.0, 2.0};
    p.x = {0.1, 0.9};
    p.series_ids = {"a"};
    CHECK_THROWS_AS(validate_panel(p), Error);

    p = tiny_panel();
    p.y.pop_back();
    CHECK_THROWS_AS(validate_panel(p), Error);

    p = tiny_panel();
    p.x[2] = 1.5;  // outside [0,1]
    try {
        validate_panel(p);
        FAIL("expected out_of_support");
    } catch (const Error& e) {
        CHECK(e.code() == errc::out_of_support);
    }

    p = tiny_panel();
    p.y[1] = std::nan("");
    CHECK_THROWS_AS(validate_panel(p), Error);
}

TEST_CASE("CSV round-trip preserves values and first-appearance series order") {
    const std::string csv =
        "series_id,t,x,y\n"
        "beta,2,0.5,2.5\n"
        "alpha,1,0.1,1.0\n"
        "beta,1,0.25,1.5\n"
        "alpha,2,0.9,-0.125\n";
    std::istringstream in(csv);
    const PanelData p = read_panel_csv(in, "inline");
    CHECK(p.n == 2);
    CHECK(p.T == 2);
    // first appearance: beta before alpha; rows sorted by t inside a series
    CHECK(p.series_ids[0] == "beta");
    CHECK(p.series_ids[1] == "alpha");
    CHECK(p.x_at(0, 0) == 0.25);
    CHECK(p.y_at(0, 0) == 1.5);
    CHECK(p.y_at(0, 1) == 2.5);
    CHECK(p.y_at(1, 0) == 1.0);
    CHECK(p.y_at(1, 1) == -0.125);
}

TEST_CASE("CSV reader reports malformed input with the offending location") {
    auto expect_error = [](const std::string& body, errc code, const char* needle) {
        std::istringstream in(body);
        try {
            read_panel_csv(in, "buf");
            FAIL_CHECK("expected a parse error for: " << needle);
        } catch (const Error& e) {
            CHECK(e.code() == code);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_error("", errc::io_error, "empty");
    expect_error("id,t,x,y\n", errc::io_error, "header");
    expect_error("series_id,t,x,y\na,1,0.1\n", errc::io_error, "4 fields");
    expect_error("series_id,t,x,y\na,0,0.1,1\nb,1,0.1,1\n", errc::io_error, "positive integer");
    expect_error("series_id,t,x,y\na,1,zzz,1\nb,1,0.1,1\n", errc::io_error, "cannot parse");
    expect_error("series_id,t,x,y\na,1,0.1,1\na,2,0.2,2\n", errc::too_few_series, "2 series");
    expect_error(
        "series_id,t,x,y\na,1,0.1,1\na,1,0.2,2\nb,1,0.3,3\n",
        errc::duplicate_observation, "two rows");
    expect_error(
        "series_id,t,x,y\na,1,0.1,1\na,2,0.2,2\nb,1,0.3,3\n",
        errc::unbalanced_panel, "rows");
    expect_error(
        "series_id,t,x,y\na,1,0.1,1\na,2,0.2,2\nb,1,0.3,3\nb,3,0.4,4\n",
        errc::unbalanced_panel, "covers");
    expect_error("series_id,t,x,y\na,1,1.5,1\nb,1,0.1,1\n", errc::out_of_support, "outside");
}

TEST_CASE("CSV reader accepts blank lines, CRLF and surrounding spaces") {
    const std::string csv =
        "series_id,t,x,y\r\n"
        " a , 1 , 0.1 , 1.0 \r\n"
        "\r\n"
        "b,1,0.2,2.0\n"
        "a,2,0.3,3.0\n"
        "\n"
        "b,2,0.4,4.0\n";
    std::istringstream in(csv);
    const PanelData p = read_panel_csv(in, "buf");
    CHECK(p.n == 2);
    CHECK(p.T == 2);
    CHECK(p.series_ids[0] == "a");
    CHECK(p.y_at(1, 1) == 4.0);
}

TEST_CASE("file-based CSV reading works and missing files are io errors") {
    const std::string path = temp_path("curvecluster_test_panel.csv");
    {
        std::ofstream out(path, std::ios::trunc);
        out << "series_id,t,x,y\n";
        Rng rng(7);
        for (int i = 0; i < 3; ++i)
            for (int t = 1; t <= 5; ++t)
                out << "s" << i << "," << t << "," << rng.uniform01() << "," << rng.normal()
                    << "\n";
    }
    const PanelData p = read_panel_csv(path);
    CHECK(p.n == 3);
    CHECK(p.T == 5);
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_panel_csv(temp_path("curvecluster_definitely_missing.csv")), Error);
}

TEST_CASE("demeaning and passthrough keep design points and ids aligned") {
    Rng rng(12);
    PanelData p;
    p.n = 3;
    p.T = 8;
    for (int i = 0; i < p.n; ++i) {
        p.series_ids.push_back("row" + std::to_string(i));
        for (int t = 0; t < p.T; ++t) {
            p.x.push_back(rng.uniform01());
            p.y.push_back(rng.normal());
        }
    }
    for (const TransformedPanel& tp : {within_transform(p), transform_passthrough(p)}) {
        CHECK(tp.n == p.n);
        CHECK(tp.T == p.T);
        CHECK(tp.series_ids == p.series_ids);
        for (int i = 0; i < p.n; ++i)
            for (int t = 0; t < p.T; ++t) CHECK(tp.x_row(i)[t] == p.x_at(i, t));
    }
}
