import json
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stdout
from io import StringIO

from fomutils.certify import certify_trace
from fomutils.cli import EXIT_CERTIFICATE, EXIT_CONFIG, EXIT_OK, EXIT_STEP_CONDITION, main
from fomutils.errors import ConfigError
from fomutils.file_formats import (
    CERTIFICATE_CSV_COLUMNS, CERTIFICATE_CSV_HEADER, COMPARE_CSV_HEADER, TRACE_CSV_COLUMNS, TRACE_CSV_HEADER,
    load_trace, read_csv_table, save_trace, trace_from_json,
)
from fomutils.methods import RunConfig, run
from fomutils.oracle import generate, known_optimum
from fomutils.space import SIMPLEX, FeasibleSet, ProxSetup

QUADRATIC = {"variant": "quadratic", "dim": 6, "seed": 0, "condition": 50.0}
FREE_SETUP = {"dim": 6, "set": {"kind": "free"}, "geometry": "euclidean"}


def quiet(argv):
    with redirect_stdout(StringIO()):
        return main(argv)


class TestCommands(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, runs, problem=None, setup=None, **extra):
        path = os.path.join(self.tmp, "experiment.json")
        data = {"problem": problem or QUADRATIC, "setup": setup or FREE_SETUP, "runs": runs, **extra}
        with open(path, "w") as fp:
            json.dump(data, fp)
        return path

    def test_run(self):
        """
        A passing run exits 0 and writes trace and certificate artifacts with their headers.
        """
        config = self.write_config([{"preset": "fgm_da", "max_iters": 50}])
        out = os.path.join(self.tmp, "out")
        assert quiet(["run", "--config", config, "--out", out]) == EXIT_OK

        for name in ("fgm_da-trace.json", "fgm_da-trace.csv", "fgm_da-certificate.json", "fgm_da-certificate.csv"):
            assert os.path.exists(os.path.join(out, name)), name

        header, rows = read_csv_table(os.path.join(out, "fgm_da-trace.csv"))
        assert header == TRACE_CSV_HEADER
        assert tuple(rows[0]) == TRACE_CSV_COLUMNS
        assert len(rows) == 50 and rows[-1]["k"] == "49"

        header, rows = read_csv_table(os.path.join(out, "fgm_da-certificate.csv"))
        assert header == CERTIFICATE_CSV_HEADER
        assert tuple(rows[0]) == CERTIFICATE_CSV_COLUMNS
        assert all(row["pass"] == "1" for row in rows)

        with open(os.path.join(out, "fgm_da-certificate.json")) as fp:
            assert json.load(fp)["passed"]

    def test_kmax_caps_iterations(self):
        """
        --kmax shortens every run.
        """
        config = self.write_config([{"preset": "primal_gradient", "max_iters": 500}])
        out = os.path.join(self.tmp, "out")
        assert quiet(["run", "--config", config, "--out", out, "--kmax", "20"]) == EXIT_OK
        assert len(load_trace(os.path.join(out, "primal_gradient-trace.json"))) == 20

    def test_reproducible(self):
        """
        Two runs of the same config write byte-identical CSVs.
        """
        config = self.write_config([{"preset": "dam", "max_iters": 40}],
                                   problem={"variant": "max_affine", "dim": 6, "seed": 2},
                                   setup={"dim": 6, "set": {"kind": "simplex"}})
        first, second = os.path.join(self.tmp, "a"), os.path.join(self.tmp, "b")
        assert quiet(["run", "--config", config, "--out", first]) == EXIT_OK
        assert quiet(["run", "--config", config, "--out", second]) == EXIT_OK
        for name in ("dam-trace.csv", "dam-certificate.csv"):
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                assert a.read() == b.read()

    def test_failed_certificate(self):
        """
        An understated f* makes the bound check fail, which exits 1.
        """
        config = self.write_config([{"preset": "fgm_md", "max_iters": 20}],
                                   optimum={"f_star": -1e6, "d_star_upper": 1.0})
        assert quiet(["run", "--config", config, "--out", self.tmp]) == EXIT_CERTIFICATE

    def test_invalid_config(self):
        """
        Decreasing custom scalings, mismatched dimensions and unreadable files exit 2.
        """
        config = self.write_config([{"method": "subgrad_a",
                                     "schedule": {"kind": "custom", "lambdas": [1.0, 1.0], "betas": [1.0, 2.0, 1.0]},
                                     "max_iters": 2}],
                                   problem={"variant": "max_affine", "dim": 6, "seed": 0})
        assert quiet(["run", "--config", config, "--out", self.tmp]) == EXIT_CONFIG

        config = self.write_config([{"preset": "dam"}], setup={"dim": 5})
        assert quiet(["run", "--config", config, "--out", self.tmp]) == EXIT_CONFIG

        assert quiet(["run", "--config", os.path.join(self.tmp, "missing.json")]) == EXIT_CONFIG

    def test_singular_quadratic(self):
        """
        Explicit singular quadratics run to completion: with b in the range of A the bound is
        certified against the nearest minimizer, without it only the trace checks apply.
        """
        setup = {"dim": 2, "set": {"kind": "free"}, "geometry": "euclidean"}
        for b, has_bound in (([1.0, 0.0], True), ([1.0, 1.0], False)):
            out = os.path.join(self.tmp, f"b{int(b[1])}")
            config = self.write_config([{"preset": "fgm_md", "max_iters": 30}], setup=setup,
                                       problem={"variant": "quadratic", "dim": 2, "A": [[1.0, 0.0], [0.0, 0.0]],
                                                "b": b})
            assert quiet(["run", "--config", config, "--out", out]) == EXIT_OK
            _, rows = read_csv_table(os.path.join(out, "fgm_md-certificate.csv"))
            assert len(rows) == 30
            assert (rows[-1]["bound"] != "") == has_bound

    def test_step_condition(self):
        """
        A fast gradient run with L understated by half exits 3.
        """
        config = self.write_config([{"preset": "fgm_md", "schedule": {"kind": "fast_smooth", "L": 0.5},
                                     "max_iters": 10}])
        assert quiet(["run", "--config", config, "--out", self.tmp]) == EXIT_STEP_CONDITION

    def test_compare(self):
        """
        compare needs two runs and writes gap columns followed by bound columns.
        """
        config = self.write_config([{"preset": "fgm_md", "max_iters": 30}])
        assert quiet(["compare", "--config", config, "--out", self.tmp]) == EXIT_CONFIG

        config = self.write_config([{"preset": "primal_gradient", "max_iters": 30},
                                    {"preset": "fgm_md", "max_iters": 20}])
        assert quiet(["compare", "--config", config, "--out", self.tmp]) == EXIT_OK
        header, rows = read_csv_table(os.path.join(self.tmp, "compare.csv"))
        assert header == COMPARE_CSV_HEADER
        assert list(rows[0]) == ["k", "primal_gradient_gap", "fgm_md_gap", "primal_gradient_bound", "fgm_md_bound"]
        assert len(rows) == 30
        assert rows[-1]["fgm_md_gap"] == "" and rows[-1]["primal_gradient_gap"] != ""

    def test_verify(self):
        """
        The beta_hat and mutation suites pass and report JSON.
        """
        assert quiet(["verify", "--suite", "beta_hat", "--kmax", "1000", "--out", self.tmp]) == EXIT_OK
        with open(os.path.join(self.tmp, "verify-beta_hat.json")) as fp:
            report = json.load(fp)
        assert report["beta_hat"]["passed"]
        assert quiet(["verify", "--suite", "mutation", "--kmax", "30"]) == EXIT_OK


class TestTraceFiles(unittest.TestCase):
    def test_reload_gives_same_certificate(self):
        """
        A trace written to JSON and read back certifies exactly like the original.
        """
        problem = generate("max_affine", 5, seed=1)
        setup = ProxSetup(5, FeasibleSet(SIMPLEX, 5))
        optimum = known_optimum(problem, setup)
        trace = run(problem, setup, RunConfig.from_dict({"preset": "dam", "max_iters": 30}))
        with tempfile.TemporaryDirectory() as tmp:
            path = save_trace(trace, os.path.join(tmp, "dam"))
            reloaded = load_trace(path)
        assert certify_trace(reloaded, optimum).to_dict() == certify_trace(trace, optimum).to_dict()

    def test_rejects_foreign_documents(self):
        """
        Documents without the trace format marker or with another version are refused.
        """
        with self.assertRaises(ConfigError):
            trace_from_json(json.dumps({"records": []}))
        with self.assertRaises(ConfigError):
            trace_from_json(json.dumps({"format": "fomutils-trace", "version": 99}))
        with self.assertRaises(ConfigError):
            trace_from_json("{not json")


if __name__ == "__main__":
    unittest.main(argv=sys.argv)
