from cqs import cli


def run_cli(tmp_path, *args):
    out = tmp_path / "artifacts"
    return cli.main(["--out", str(out), *args]), out


class TestUsage:
    def test_unknown_experiment(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, "--experiment", "nope", "--seed", "1")
        assert code == 1
        err = capsys.readouterr().err
        assert "grover" in err  # the experiment list is printed

    def test_unknown_key_rejected(self, tmp_path):
        code, _ = run_cli(
            tmp_path, "--experiment", "heat", "--set", "bogus=3", "--seed", "1"
        )
        assert code == 1

    def test_missing_seed_for_stochastic(self, tmp_path):
        code, _ = run_cli(tmp_path, "--experiment", "grover")
        assert code == 1

    def test_malformed_config_reports_line(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("nodes = 51\nbroken line\n")
        code, _ = run_cli(tmp_path, "--experiment", "heat", "--config", str(cfg))
        assert code == 1
        assert ":2:" in capsys.readouterr().err


class TestRuns:
    def test_grover_pass(self, tmp_path, capsys):
        code, out = run_cli(
            tmp_path, "--experiment", "grover", "--seed", "1", "--set", "n=8",
            "--set", "target=13",
        )
        assert code == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("grover: PASS success_prob=")
        assert (out / "grover_trace.csv").exists()

    def test_csv_header_units(self, tmp_path):
        code, out = run_cli(tmp_path, "--experiment", "heat", "--seed", "0")
        assert code == 0
        header = (out / "heat.csv").read_text().splitlines()[0]
        assert header == "x (length),u_explicit (temperature),u_sweep (temperature)"

    def test_determinism_byte_identical(self, tmp_path):
        code1, out1 = run_cli(
            tmp_path / "a", "--experiment", "born-grain", "--seed", "7"
        )
        code2, out2 = run_cli(
            tmp_path / "b", "--experiment", "born-grain", "--seed", "7"
        )
        assert code1 == code2 == 0
        a = (out1 / "born_grain.csv").read_bytes()
        b = (out2 / "born_grain.csv").read_bytes()
        assert a == b

    def test_config_file_plus_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("# comment\nnodes = 51\nsteps = 50\n")
        code, _ = run_cli(
            tmp_path, "--experiment", "heat", "--config", str(cfg),
            "--set", "steps=20",
        )
        assert code == 0

    def test_metric_failure_exit_2(self, tmp_path, capsys):
        code, _ = run_cli(
            tmp_path, "--experiment", "cnot-synth", "--set", "threshold=1e-9",
        )
        assert code == 2
        assert "FAIL" in capsys.readouterr().out

    def test_qec_cycle(self, tmp_path, capsys):
        code, out = run_cli(
            tmp_path, "--experiment", "qec-cycle", "--seed", "3", "--set", "cycles=20"
        )
        assert code == 0
        lines = (out / "qec_cycles.csv").read_text().splitlines()
        assert len(lines) == 21

    def test_thread_cap_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CQS_THREADS", "1")
        code, _ = run_cli(tmp_path, "--experiment", "cnot-synth")
        assert code == 0

    def test_fast_experiments_pass(self, tmp_path):
        fast = [
            ("qft-check", ["--set", "max_n=5"]),
            ("cnot-synth", []),
            ("fock-check", ["--seed", "0", "--set", "levels=3"]),
            ("born-grain", ["--seed", "5"]),
            ("grover-general", []),
        ]
        for name, extra in fast:
            code, _ = run_cli(tmp_path / name, "--experiment", name, "--seed", "1", *extra)
            assert code == 0, name
