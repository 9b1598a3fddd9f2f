#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "grrt/csv.hpp"
#include "grrt/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    ++counter;
    const fs::path dir = fs::temp_directory_path();
    const fs::path out = dir / ("grrt_cli_stdout_" + std::to_string(counter));
    const fs::path err = dir / ("grrt_cli_stderr_" + std::to_string(counter));
    const std::string cmd = std::string(CLI_BIN) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = slurp(out);
    res.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return res;
}

// One shared solve fixture: 16x32 design, support {3, 20}, light noise.
struct Fixture {
    fs::path dir;
    fs::path matrix;
    fs::path observation;
    std::vector<int> support{3, 20};

    Fixture() {
        dir = fs::temp_directory_path() / "grrt_cli_fixture";
        fs::create_directories(dir);
        matrix = dir / "design.csv";
        observation = dir / "obs.csv";
        const grrt::DesignMatrix X = grrt::hadamard_identity_design(16);
        grrt::write_matrix_csv(matrix.string(), X.entries());
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd y = X.entries().col(2) - X.entries().col(19);
        for (int i = 0; i < 16; ++i) y(i, 0) += 0.02 * gauss(rng);
        grrt::write_matrix_csv(observation.string(), y);
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("gamma-table reproduces the reference thresholds") {
    const RunResult res = run_cli("gamma-table --n 64 --alpha 0.01 --kmax 32");
    REQUIRE(res.code == 0);
    // Reference values for n=64, p=128, alpha=0.01, 32 steps (60-digit
    // bisection oracle); the printed table carries 15 significant digits.
    const double golden[32] = {
        0.83723669665782786057, 0.83492523416509498737, 0.83254494033268701765,
        0.83009267733041789094, 0.8275651138454937138,  0.82495870998715263079,
        0.82226970076247583097, 0.81949407796401202607, 0.8166275702893667281,
        0.81366562148943085932, 0.81060336631497472825, 0.80743560400034010438,
        0.80415676898724771915, 0.80076089855049791213, 0.7972415969396264827,
        0.79359199559525422898, 0.78980470893458848321, 0.78587178512568795764,
        0.78178465118276214343, 0.77753405161263472082, 0.77310997972278509624,
        0.76850160056075982924, 0.76369716428920166263, 0.75868390860543712966,
        0.75344794858365174164, 0.74797415204411005837, 0.74224599822912967563,
        0.73624541717932019488, 0.72995260674358298929, 0.72334582360769636451,
        0.7164011440712764124,  0.7090921895205529718,
    };
    std::stringstream ss(res.out);
    std::string line;
    std::getline(ss, line);  // header
    int rows = 0;
    while (std::getline(ss, line)) {
        std::istringstream row(line);
        int k = 0, pos = 0;
        double dof_a = 0, dof_b = 0, gamma = 0;
        REQUIRE((row >> k >> dof_a >> dof_b >> pos >> gamma));
        REQUIRE(k == rows + 1);
        CHECK(dof_a == (64.0 - k) / 2.0);
        CHECK(dof_b == 0.5);
        CHECK(pos == 128 - k + 1);
        CHECK(std::fabs(gamma - golden[k - 1]) <= 1e-9);
        ++rows;
    }
    CHECK(rows == 32);
}

TEST_CASE("gamma-table rejects impossible settings") {
    CHECK(run_cli("gamma-table --n 64 --alpha 0.01 --kmax 64").code == 1);
    CHECK(run_cli("gamma-table --n 64 --alpha 0 --kmax 8").code == 1);
    const RunResult res = run_cli("gamma-table --n 64 --lb 4 --scenario smv --kmax 4");
    CHECK(res.code == 1);
    CHECK(res.err.find("error:") != std::string::npos);
}

TEST_CASE("solve recovers a planted support") {
    const Fixture& f = fixture();
    const fs::path est = f.dir / "estimate.csv";
    const RunResult res =
        run_cli("solve --matrix " + f.matrix.string() + " --observation " +
                f.observation.string() + " --algorithm omp --out " + est.string());
    CHECK(res.code == 0);
    CHECK(res.out.find("row support: {3, 20}") != std::string::npos);
    CHECK(res.out.find("<- selected") != std::string::npos);
    CHECK(res.out.find("selected k: 2") != std::string::npos);

    const Eigen::MatrixXd estimate = grrt::read_matrix_csv(est.string());
    REQUIRE(estimate.rows() == 32);
    REQUIRE(estimate.cols() == 1);
    for (int j = 1; j <= 32; ++j) {
        if (j == 3 || j == 20)
            CHECK(std::fabs(estimate(j - 1, 0)) > 0.9);
        else
            CHECK(estimate(j - 1, 0) == 0.0);
    }
    CHECK(estimate(2, 0) > 0.0);
    CHECK(estimate(19, 0) < 0.0);
}

TEST_CASE("solve via the path algorithm matches") {
    const Fixture& f = fixture();
    const RunResult res =
        run_cli("solve --matrix " + f.matrix.string() + " --observation " +
                f.observation.string() + " --algorithm lasso");
    CHECK(res.code == 0);
    CHECK(res.out.find("row support: {3, 20}") != std::string::npos);
}

TEST_CASE("solve handles a zero observation with the fallback exit code") {
    const Fixture& f = fixture();
    const fs::path zero_obs = f.dir / "zeros.csv";
    grrt::write_matrix_csv(zero_obs.string(), Eigen::MatrixXd::Zero(16, 1));
    const RunResult res = run_cli("solve --matrix " + f.matrix.string() +
                                  " --observation " + zero_obs.string());
    CHECK(res.code == 2);
    CHECK(res.out.find("identically zero") != std::string::npos);
    CHECK(res.out.find("row support: {}") != std::string::npos);
}

TEST_CASE("solve rejects bad inputs with exit code 1") {
    const Fixture& f = fixture();
    const fs::path bad = f.dir / "zero_col.csv";
    Eigen::MatrixXd M = grrt::hadamard_identity_design(16).entries();
    M.col(4).setZero();
    grrt::write_matrix_csv(bad.string(), M);
    const RunResult res = run_cli("solve --matrix " + bad.string() +
                                  " --observation " + f.observation.string());
    CHECK(res.code == 1);
    CHECK(res.err.find("column") != std::string::npos);

    CHECK(run_cli("solve --matrix " + f.matrix.string() + " --observation " +
                  f.observation.string() + " --scenario mmv")
              .code == 1);
    CHECK(run_cli("solve --matrix " + f.matrix.string() + " --observation " +
                  f.observation.string() + " --algorithm sorcery")
              .code == 1);
    CHECK(run_cli("solve --matrix " + f.matrix.string() + " --observation " +
                  f.matrix.string() + " --L 3")
              .code == 1);
}

TEST_CASE("trace-path prints identity-design knots") {
    const Fixture& f = fixture();
    const fs::path eye = f.dir / "identity.csv";
    const fs::path obs = f.dir / "obs4.csv";
    const fs::path knots = f.dir / "knots.csv";
    grrt::write_matrix_csv(eye.string(), Eigen::MatrixXd::Identity(4, 4));
    Eigen::MatrixXd y(4, 1);
    y << 3.0, -1.0, 2.0, 0.5;
    grrt::write_matrix_csv(obs.string(), y);

    const RunResult res =
        run_cli("trace-path --matrix " + eye.string() + " --observation " +
                obs.string() + " --out " + knots.string());
    REQUIRE(res.code == 0);
    CHECK(res.out.find("knots: 5") != std::string::npos);
    for (const char* ev : {"+1", "+3", "+2", "+4", "end"})
        CHECK(res.out.find(ev) != std::string::npos);

    const Eigen::MatrixXd table = grrt::read_matrix_csv(knots.string());
    REQUIRE(table.rows() == 5);
    REQUIRE(table.cols() == 5);
    const double lambdas[5] = {6.0, 4.0, 2.0, 1.0, 0.0};
    for (int i = 0; i < 5; ++i)
        CHECK(table(i, 0) == doctest::Approx(lambdas[i]).epsilon(1e-12));
    // The terminal knot carries the unpenalized solution.
    for (int j = 0; j < 4; ++j)
        CHECK(table(4, j + 1) == doctest::Approx(y(j, 0)).epsilon(1e-12));
}

TEST_CASE("validate-dist passes on matched degrees of freedom") {
    const RunResult res =
        run_cli("validate-dist --n 32 --k1 1 --k2 3 --samples 2000 --seed 11");
    CHECK(res.code == 0);
    CHECK(res.out.find("PASS") != std::string::npos);
    CHECK(run_cli("validate-dist --n 32 --k1 3 --k2 3").code == 1);
}

TEST_CASE("run-experiment writes the metrics CSV") {
    const Fixture& f = fixture();
    const fs::path cfg = f.dir / "exp.cfg";
    {
        std::ofstream out(cfg);
        out << "algorithm = omp\ndesign = hadamard-identity\n"
               "n = 16\np = 32\nk_block = 2\nsnr_db = 20\n"
               "trials = 20\nseed = 7\nalpha = 0.1\n";
    }
    const fs::path csv1 = f.dir / "metrics1.csv";
    const fs::path csv3 = f.dir / "metrics3.csv";
    const RunResult res =
        run_cli("run-experiment --config " + cfg.string() + " --out " +
                csv1.string() + " --workers 1");
    REQUIRE(res.code == 0);
    CHECK(res.out.find("wrote 4 metric rows") != std::string::npos);

    std::stringstream ss(slurp(csv1));
    std::string line;
    int lines = 0;
    while (std::getline(ss, line)) ++lines;
    CHECK(lines == 5);

    REQUIRE(run_cli("run-experiment --config " + cfg.string() + " --out " +
                    csv3.string() + " --workers 3")
                .code == 0);
    CHECK(slurp(csv1) == slurp(csv3));

    CHECK(run_cli("run-experiment --config /nonexistent.cfg --out " +
                  (f.dir / "x.csv").string())
              .code == 1);
}

TEST_CASE("a subcommand is required") {
    CHECK(run_cli("").code != 0);
    CHECK(run_cli("conjure").code != 0);
}
