#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "abstain/io/csv.hpp"
#include "abstain/io/model_io.hpp"
#include "abstain/io/problem_spec.hpp"
#include "abstain/io/report.hpp"
#include "abstain/io/synthetic.hpp"

using namespace abstain;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("abstain_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("csv loading") {
    TempDir dir;
    SUBCASE("three rows with string labels") {
        write_text(dir.file("ok.csv"), "f1,f2,y\n1.0,2.0,a\n3.0,4.0,b\n-1.5,0.25,a\n");
        const auto data = load_csv(dir.file("ok.csv"), "y");
        CHECK(data.m == 3);
        CHECK(data.d == 2);
        CHECK(data.n == 2);
        REQUIRE(data.label_names.size() == 2);
        CHECK(data.label_names[0] == "a");
        CHECK(data.label_names[1] == "b");
        CHECK(data.labels == std::vector<int>{1, 2, 1});
        CHECK(data.row(2)[1] == 0.25);
    }
    SUBCASE("empty data section") {
        write_text(dir.file("empty.csv"), "f1,f2,y\n");
        CHECK_THROWS_WITH_AS(load_csv(dir.file("empty.csv"), "y"),
                             doctest::Contains("no data rows"), std::runtime_error);
    }
    SUBCASE("NaN cell names the row") {
        write_text(dir.file("nan.csv"), "f1,y\n1.0,a\nnan,b\n");
        CHECK_THROWS_WITH_AS(load_csv(dir.file("nan.csv"), "y"), doctest::Contains("row 2"),
                             std::runtime_error);
    }
    SUBCASE("non-numeric feature names the row") {
        write_text(dir.file("bad.csv"), "f1,y\nfoo,a\n1.0,b\n");
        CHECK_THROWS_WITH_AS(load_csv(dir.file("bad.csv"), "y"), doctest::Contains("row 1"),
                             std::runtime_error);
    }
    SUBCASE("missing label column") {
        write_text(dir.file("m.csv"), "f1,f2\n1,2\n");
        CHECK_THROWS_AS(load_csv(dir.file("m.csv"), "y"), std::runtime_error);
    }
    SUBCASE("unseen label under a recorded mapping is an error") {
        write_text(dir.file("u.csv"), "f1,y\n1.0,a\n2.0,zebra\n");
        const std::vector<std::string> mapping{"a", "b"};
        CHECK_THROWS_WITH_AS(load_csv(dir.file("u.csv"), "y", mapping),
                             doctest::Contains("zebra"), std::runtime_error);
    }
    SUBCASE("save/load round trip preserves the mapping") {
        write_text(dir.file("rt.csv"), "f1,f2,y\n1.0,2.0,red\n3.0,4.0,blue\n");
        const auto data = load_csv(dir.file("rt.csv"), "y");
        save_csv(dir.file("rt2.csv"), data);
        const auto again = load_csv(dir.file("rt2.csv"), "y");
        CHECK(again.labels == data.labels);
        CHECK(again.label_names == data.label_names);
        CHECK(again.features == data.features);
    }
}

TEST_CASE("problem spec files") {
    TempDir dir;
    SUBCASE("valid two-atom file") {
        write_text(dir.file("p.spec"),
                   "# fixture\nn=2 c=0.2\n0.5 1 0\n0.5 0 1  # second atom\n");
        const auto p = load_problem_spec(dir.file("p.spec"));
        CHECK(p.n() == 2);
        CHECK(p.c() == 0.2);
        CHECK(p.atoms().size() == 2);
        CHECK_FALSE(p.has_features());
    }
    SUBCASE("probabilities off by more than 1e-9") {
        write_text(dir.file("bad.spec"), "n=2 c=0.2\n1.0 0.49 0.49\n");
        CHECK_THROWS_AS(load_problem_spec(dir.file("bad.spec")), std::runtime_error);
    }
    SUBCASE("c outside the open interval") {
        write_text(dir.file("c1.spec"), "n=2 c=1.0\n1.0 1 0\n");
        CHECK_THROWS_AS(load_problem_spec(dir.file("c1.spec")), std::runtime_error);
    }
    SUBCASE("features parse and must be distinct") {
        write_text(dir.file("f.spec"), "n=2 c=0.3\n0.5 1 0 | 0.0 1.0\n0.5 0 1 | 2.0 3.0\n");
        const auto p = load_problem_spec(dir.file("f.spec"));
        CHECK(p.has_features());
        CHECK(p.feature_dim() == 2);
        write_text(dir.file("dup.spec"), "n=2 c=0.3\n0.5 1 0 | 1 2\n0.5 0 1 | 1 2\n");
        CHECK_THROWS_AS(load_problem_spec(dir.file("dup.spec")), std::runtime_error);
    }
    SUBCASE("write-read-write produces identical bytes") {
        write_text(dir.file("p.spec"), "n=3 c=0.25\n0.25 1 0 0 | 1 0\n0.75 0 0.5 0.5 | 0 1\n");
        const auto p = load_problem_spec(dir.file("p.spec"));
        save_problem_spec(dir.file("p1.spec"), p);
        const auto q = load_problem_spec(dir.file("p1.spec"));
        save_problem_spec(dir.file("p2.spec"), q);
        CHECK(read_text(dir.file("p1.spec")) == read_text(dir.file("p2.spec")));
    }
}

TEST_CASE("synthetic generators") {
    SUBCASE("separable margin is certified") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::separable_margin;
        r.n = 3;
        r.d = 2;
        r.margin = 0.5;
        r.atom_count = 60;
        r.seed = 7;
        const auto gen = generate(r);
        CHECK(gen.certified_margin >= 0.5);
        CHECK(gen.problem.atoms().size() == 60);
        for (const auto& a : gen.problem.atoms()) CHECK(a.dist.deterministic());
    }
    SUBCASE("gamma must be positive") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::separable_margin;
        r.margin = 0.0;
        CHECK_THROWS_AS(generate(r), std::invalid_argument);
    }
    SUBCASE("zero label noise reproduces the deterministic problem") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::label_noise;
        r.noise = 0.0;
        r.seed = 9;
        const auto gen = generate(r);
        for (const auto& a : gen.problem.atoms()) CHECK(a.dist.deterministic());
    }
    SUBCASE("label noise spreads rho across the other labels") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::label_noise;
        r.noise = 0.12;
        r.n = 3;
        const auto gen = generate(r);
        for (const auto& a : gen.problem.atoms()) {
            double top = 0.0;
            for (double v : a.dist.p()) top = std::max(top, v);
            CHECK(top == doctest::Approx(0.88).epsilon(1e-12));
        }
    }
    SUBCASE("chow_stress places half the atoms near the boundary") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::chow_stress;
        r.c = 0.3;
        r.n = 3;
        r.atom_count = 20;
        r.seed = 11;
        const auto gen = generate(r);
        int near = 0;
        for (const auto& a : gen.problem.atoms()) {
            double top = 0.0;
            for (double v : a.dist.p()) top = std::max(top, v);
            if (std::abs(top - 0.7) <= 0.05) ++near;
        }
        CHECK(near == 10);
    }
    SUBCASE("infeasible chow_stress is an error") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::chow_stress;
        r.c = 0.9;  // 1-c-0.05 = 0.05 < 1/3
        r.n = 3;
        CHECK_THROWS_AS(generate(r), std::invalid_argument);
    }
    SUBCASE("sampler determinism") {
        SyntheticRecipe r;
        r.kind = SyntheticRecipe::Kind::label_noise;
        r.noise = 0.2;
        r.seed = 13;
        const auto gen = generate(r);
        const auto a = sample_from_problem(gen.problem, 200, 43);
        const auto b = sample_from_problem(gen.problem, 200, 43);
        CHECK(a.features == b.features);
        CHECK(a.labels == b.labels);
        const auto c = sample_from_problem(gen.problem, 200, 44);
        CHECK(a.labels != c.labels);
    }
}

TEST_CASE("model persistence") {
    TempDir dir;
    SUBCASE("round trip is bit-identical") {
        auto m = Model::mlp_seeded(3, 4, 8, 1.5, 77);
        m.loss_tag = "L_mu";
        m.mu = 1.7;
        m.cost = 0.15;
        save_model(dir.file("m.model"), m);
        const auto back = load_model(dir.file("m.model"));
        CHECK(back.parameter_hash() == m.parameter_hash());
        CHECK(back.kind == Model::Kind::mlp);
        CHECK(back.clamp == 1.5);
        CHECK(back.mu == 1.7);
        CHECK(back.cost == 0.15);
        CHECK(back.seed == 77);
        // write -> read -> write byte identity
        save_model(dir.file("m2.model"), back);
        CHECK(read_text(dir.file("m.model")) == read_text(dir.file("m2.model")));
    }
    SUBCASE("truncated file fails") {
        const auto m = Model::linear_zero(2, 3);
        save_model(dir.file("t.model"), m);
        auto text = read_text(dir.file("t.model"));
        write_text(dir.file("t.model"), text.substr(0, text.size() / 2));
        CHECK_THROWS_AS(load_model(dir.file("t.model")), std::runtime_error);
    }
    SUBCASE("tampered parameters fail the checksum") {
        auto m = Model::linear_zero(2, 3);
        m.w1[0] = 0.5;
        save_model(dir.file("c.model"), m);
        auto text = read_text(dir.file("c.model"));
        const auto pos = text.find("0.5");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 3, "0.7");
        write_text(dir.file("c.model"), text);
        CHECK_THROWS_WITH_AS(load_model(dir.file("c.model")), doctest::Contains("checksum"),
                             std::runtime_error);
    }
    SUBCASE("future format version is an explicit error") {
        const auto m = Model::linear_zero(2, 3);
        save_model(dir.file("v.model"), m);
        auto text = read_text(dir.file("v.model"));
        const auto pos = text.find("\"format_version\": 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 19, "\"format_version\": 99");
        write_text(dir.file("v.model"), text);
        CHECK_THROWS_WITH_AS(load_model(dir.file("v.model")), doctest::Contains("version"),
                             std::runtime_error);
    }
}

TEST_CASE("report files") {
    TempDir dir;
    SUBCASE("gap report round trip with sidecar") {
        GapReport g;
        g.mu = 1.5;
        g.c = 0.25;
        g.closed_form_v = 0.8;
        g.numeric_v = 0.8000001;
        g.gap_estimate = 1e-7;
        g.optimal_softmax = {0.6, 0.3};
        const auto body = to_json(g);
        write_report(dir.file("gap.json"), "gap", body);
        const auto back = read_report(dir.file("gap.json"));
        for (const char* key :
             {"mu", "c", "closed_form_V", "numeric_V", "gap_estimate", "optimal_softmax"})
            CHECK(back.contains(key));
        CHECK(back["mu"] == 1.5);
        CHECK(back["optimal_softmax"][0] == 0.6);
        // field-for-field equality of the payload
        auto expected = body;
        expected["schema_version"] = back["schema_version"];
        expected["kind"] = "gap";
        CHECK(back == expected);
        // sidecar: header plus one row
        const auto csv = read_text(csv_sidecar_path(dir.file("gap.json")));
        CHECK(csv.find("mu") != std::string::npos);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
        // write -> read -> write byte identity
        write_report(dir.file("gap2.json"), "gap", back);
        CHECK(read_text(dir.file("gap.json")) == read_text(dir.file("gap2.json")));
    }
    SUBCASE("bound check report with violations") {
        BoundCheckReport r;
        r.name = "demo";
        r.trials = 10;
        r.violation_count = 2;
        r.violations.push_back({"trial 3", 0.5, 0.4});
        r.violations.push_back({"trial 7", 0.9, 0.7});
        r.max_slack = 0.2;
        r.min_slack = -0.2;
        r.finish();
        CHECK_FALSE(r.passed);
        const auto body = to_json(r);
        write_report(dir.file("b.json"), "bound_check", body);
        const auto back = read_report(dir.file("b.json"));
        CHECK(back["passed"] == false);
        CHECK(back["violations"].size() == 2);
        CHECK(back["violations"][0]["lhs"] == 0.5);
    }
    SUBCASE("schema version is validated") {
        write_text(dir.file("bad.json"), "{\"schema_version\": 99}");
        CHECK_THROWS_AS(read_report(dir.file("bad.json")), std::runtime_error);
        write_text(dir.file("nojson.json"), "not json");
        CHECK_THROWS_AS(read_report(dir.file("nojson.json")), std::runtime_error);
    }
    SUBCASE("explicit table sidecar") {
        CsvTable table;
        table.header = {"mu", "V"};
        table.add_row({"1.0", "0.954"});
        table.add_row({"2.0", "0.5"});
        CHECK_THROWS_AS(table.add_row({"3.0"}), std::invalid_argument);
        write_report(dir.file("sweep.json"), "gap_sweep", nlohmann::json{{"rows", 2}}, table);
        const auto csv = read_text(dir.file("sweep.csv"));
        CHECK(csv == "mu,V\n1.0,0.954\n2.0,0.5\n");
    }
}
