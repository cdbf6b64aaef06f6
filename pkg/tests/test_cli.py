import pytest

from eslab.cli import main, parse_args


class TestParseArgs:
    def test_sweep_happy_path(self):
        command = parse_args(
            [
                "sweep", "--kind", "H4", "--dim", "4", "--cond", "10",
                "--lambdas", "10,100,1000", "--iters", "100000", "--seed", "7",
                "--out", "run.csv",
            ]
        )
        assert command.verb == "sweep"
        assert command.options["kind"] == "H4"
        assert command.options["lambdas"] == "10,100,1000"
        assert command.options["seed"] == "7"
        assert command.options["out"] == "run.csv"

    def test_density_happy_path(self):
        command = parse_args(
            ["density", "--kind", "H1", "--dim", "64", "--cond", "10", "--lambda", "1000", "--samples", "100000"]
        )
        assert command.verb == "density"
        assert command.options["lam"] == "1000"
        assert command.options["samples"] == "100000"

    def test_degree_larger_than_population_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            parse_args(["sweep", "--mode", "ell", "--ell", "5", "--lambda", "3"])
        assert excinfo.value.code == 2
        assert "exceeds" in capsys.readouterr().err

    def test_unknown_flag_rejected(self):
        with pytest.raises(SystemExit) as excinfo:
            parse_args(["sweep", "--frobnicate", "1"])
        assert excinfo.value.code == 2

    def test_unknown_verb_rejected(self):
        with pytest.raises(SystemExit):
            parse_args(["explode"])

    def test_help_exits_zero_and_lists_flags(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            parse_args(["sweep", "--help"])
        assert excinfo.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--kind", "--dim", "--cond", "--lambdas", "--iters", "--seed", "--workers", "--out", "--config"):
            assert flag in text

    def test_env_seed_fallback(self, monkeypatch):
        monkeypatch.setenv("ES_LAB_SEED", "4242")
        command = parse_args(["sweep", "--kind", "H1", "--dim", "4", "--cond", "4", "--lambdas", "5"])
        assert command.options["seed"] == "4242"

    def test_flag_overrides_config_file(self, tmp_path, monkeypatch):
        config = tmp_path / "run.cfg"
        config.write_text("seed = 5\ndim = 8\n")
        command = parse_args(["sweep", "--config", str(config), "--seed", "9"])
        assert command.options["seed"] == "9"
        assert command.options["dim"] == "8"


class TestDispatch:
    def test_sweep_smoke(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        status = main(
            ["sweep", "--kind", "H4", "--dim", "4", "--cond", "10", "--lambdas", "10",
             "--iters", "2", "--seed", "7", "--workers", "1", "--out", str(out)]
        )
        assert status == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("kind,n,c,lambda")
        assert "wrote 1 rows" in capsys.readouterr().out

    def test_sweep_deterministic_artifact(self, tmp_path):
        args = ["sweep", "--kind", "H1", "--dim", "4", "--cond", "4", "--lambdas", "5,10",
                "--iters", "20", "--seed", "3", "--workers", "1"]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(first)]) == 0
        assert main(args + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_density_writes_two_files(self, tmp_path):
        out = tmp_path / "dens.csv"
        status = main(
            ["density", "--kind", "H1", "--dim", "4", "--cond", "10", "--lambda", "20",
             "--samples", "1000", "--iters", "1000", "--seed", "1", "--out", str(out)]
        )
        assert status == 0
        psi = tmp_path / "dens_psi.csv"
        omega = tmp_path / "dens_omega.csv"
        assert psi.exists() and omega.exists()
        assert len(psi.read_text().splitlines()) == 81  # header + 80 bins

    def test_density_default_competitions_scale_with_samples(self, tmp_path, monkeypatch):
        # without an explicit --iters the winner run uses samples // 10, not
        # the sweep verb's iteration default
        import eslab.cli as cli_module

        captured = {}
        real = cli_module.density_experiment

        def spy(**kwargs):
            captured.update(kwargs)
            return real(**kwargs)

        monkeypatch.setattr(cli_module, "density_experiment", spy)
        out = tmp_path / "d.csv"
        status = main(
            ["density", "--kind", "H1", "--dim", "4", "--cond", "10",
             "--samples", "2000", "--seed", "1", "--out", str(out)]
        )
        assert status == 0
        assert captured["competitions"] is None
        assert captured["lam"] == 1000  # default population size

    def test_perturb_ref_smoke(self, tmp_path):
        out = tmp_path / "perturb.csv"
        status = main(
            ["perturb-ref", "--kind", "H1,H5", "--dim", "4", "--cond", "4,16",
             "--epsilon", "0.05", "--trials", "50", "--seed", "2", "--out", str(out)]
        )
        assert status == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("kind,n,c,epsilon,trials")
        assert len(lines) == 5  # 2 kinds x 2 conds

    def test_order_stat_smoke(self, tmp_path):
        out = tmp_path / "os.csv"
        status = main(
            ["order-stat", "--kind", "H4", "--dim", "4", "--cond", "10", "--lambdas", "10",
             "--ell", "2", "--iters", "5", "--seed", "4", "--out", str(out)]
        )
        assert status == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        row = lines[1].split(",")
        assert row[4] == "ell" and row[5] == "2"

    def test_hessian_info(self, capsys):
        status = main(["hessian-info", "--kind", "H5", "--dim", "8", "--cond", "16"])
        assert status == 0
        text = capsys.readouterr().out
        assert "spectrum:" in text
        assert "condition number: 16" in text
        assert "constant-diagonal spread" in text

    def test_failing_cell_maps_to_nonzero_exit(self, tmp_path, capsys):
        out = tmp_path / "bad.csv"
        status = main(
            ["sweep", "--kind", "H5", "--dim", "6", "--cond", "4", "--lambdas", "5",
             "--iters", "2", "--seed", "1", "--out", str(out)]
        )
        assert status == 1
        assert out.exists()  # row written with error status

    def test_config_file_driven_run(self, tmp_path):
        config = tmp_path / "run.cfg"
        out = tmp_path / "cfg.csv"
        config.write_text(
            f"kind = H1\ndim = 4\ncond = 4\nlambdas = 5\niters = 3\nseed = 11\nworkers = 1\nout = {out}\n"
        )
        assert main(["sweep", "--config", str(config)]) == 0
        assert out.exists()
