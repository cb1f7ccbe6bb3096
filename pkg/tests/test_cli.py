import json

import numpy as np
import pytest

from msdetect.cli import main
from msdetect.config import config_to_text, load_config, parse_config
from msdetect.errors import ParseError
from msdetect.simlab import gen_gaussian_basis, gen_perp_vector, gen_subspace_vector
from msdetect.vecspace import write_matrix, write_vector

MINIMAL = "n = 500\nr = 5\nm_grid = 10, 50, 100\n"


class TestConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.trials_per_m == 100
        assert cfg.sampling_mode == "without"
        assert cfg.m_grid == (10, 50, 100)
        assert cfg.basis_kind == "gaussian"

    def test_sections_and_brackets(self):
        text = "[fig1]\nn = 500\nr = 5\nm_grid = [10, 50]\n\n[fig2]\nn = 600\nr = 6\nm_grid = 20\nvector_kind = in_subspace\n"
        assert parse_config(text, "fig2").n == 600
        assert parse_config(text, "fig1").m_grid == (10, 50)
        with pytest.raises(ParseError):
            parse_config(text)

    def test_not_increasing(self):
        with pytest.raises(ParseError) as err:
            parse_config("n = 500\nr = 5\nm_grid = 50, 10\n")
        assert err.value.field == "m_grid"
        assert err.value.line == 3

    def test_unknown_key_named(self):
        with pytest.raises(ParseError) as err:
            parse_config(MINIMAL + "trails = 5\n")
        assert err.value.field == "trails"
        assert "trails" in str(err.value)
        assert err.value.line == 4

    def test_bad_value(self):
        with pytest.raises(ParseError) as err:
            parse_config("n = five\nr = 5\nm_grid = 10\n")
        assert err.value.field == "n" and err.value.line == 1

    def test_missing_required(self):
        with pytest.raises(ParseError) as err:
            parse_config("n = 500\nr = 5\n")
        assert err.value.field == "m_grid"

    def test_text_roundtrip(self, tmp_path):
        cfg = parse_config(MINIMAL + "lambda_grid = 0.01, 0.1\nspike = 0.5\n")
        path = tmp_path / "c.ini"
        path.write_text(config_to_text(cfg))
        assert load_config(path) == cfg


@pytest.fixture
def files(tmp_path):
    U = gen_gaussian_basis(200, 4, 1)
    write_matrix(tmp_path / "basis.csv", U.matrix)
    write_vector(tmp_path / "in.csv", gen_subspace_vector(U, 1))
    write_vector(tmp_path / "perp.csv", gen_perp_vector(U, 1))
    (tmp_path / "idx.csv").write_text("\n".join(str(i) for i in range(0, 200, 4)) + "\n")
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_kv(text):
    return dict(line.split("=", 1) for line in text.split())


def test_min_samples(capsys):
    code, out, _ = run(capsys, "min-samples", "--r", 50, "--mu-s", 1, "--delta", 0.1)
    assert code == 0 and out == "922\n"


def test_estimate_in_subspace(capsys, files):
    code, out, _ = run(capsys, "estimate", "--basis", files / "basis.csv", "--vector", files / "in.csv",
                       "--indices", files / "idx.csv")
    assert code == 0
    kv = parse_kv(out)
    assert float(kv["t"]) <= 1e-12
    assert kv["m"] == "50"


def test_estimate_sampled(capsys, files):
    code, out, _ = run(capsys, "estimate", "--basis", files / "basis.csv", "--vector", files / "perp.csv",
                       "--m", 100, "--mode", "with", "--seed", 3)
    assert code == 0 and float(parse_kv(out)["t"]) > 0


def test_coherence(capsys, files):
    code, out, _ = run(capsys, "coherence", "--basis", files / "basis.csv", "--vector", files / "perp.csv")
    assert code == 0
    assert out.startswith("mu_S=") and "mu_v=" in out


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--n", 10000, "--r", 50, "--m", 2000, "--delta", 0.05,
                       "--mu-s", 1.5, "--mu-y", 13.6)
    assert code == 0
    kv = parse_kv(out)
    assert float(kv["upper"]) == pytest.approx(0.348874529899045682816, rel=1e-12)


def test_bounds_gamma_too_large(capsys):
    args = ["bounds", "--n", 10000, "--r", 50, "--m", 100, "--delta", 0.05, "--mu-s", 1.5, "--mu-y", 2]
    code, _, err = run(capsys, *args)
    assert code == 3 and "gamma" in err
    code, out, _ = run(capsys, *args, "--upper-only")
    assert code == 0 and "lower_valid=false" in out


def test_validate_lemma(capsys):
    code, out, _ = run(capsys, "validate-lemma", 3, "--n", 500, "--r", 5, "--m", 300, "--trials", 50)
    assert code == 0
    kv = parse_kv(out)
    assert kv["lemma"] == "3" and kv["trials"] == "50"


def test_detect(capsys, files):
    base = ["detect", "--basis", files / "basis.csv", "--indices", files / "idx.csv"]
    code, out, _ = run(capsys, *base, "--vector", files / "in.csv", "--sigma", 0)
    assert code == 0 and parse_kv(out)["decision"] == "H0"
    code, out, _ = run(capsys, *base, "--vector", files / "perp.csv", "--sigma", 0)
    assert parse_kv(out)["decision"] == "H1"
    code, out, _ = run(capsys, *base, "--vector", files / "in.csv", "--sigma", 1, "--lambda", 0.05,
                       "--dof-policy", "paper-r")
    assert code == 0 and parse_kv(out)["dof"] == "4"


def test_usage_error(capsys):
    code, _, _ = run(capsys, "min-samples", "--r", "x")
    assert code == 2
    code, _, _ = run(capsys, "nonsense")
    assert code == 2


def test_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "coherence", "--basis", tmp_path / "missing.csv")
    assert code == 4 and "missing.csv" in err


def test_config_error_exit(capsys, tmp_path):
    (tmp_path / "bad.ini").write_text(MINIMAL + "trails = 3\n")
    code, _, err = run(capsys, "simulate", "fig1", "--config", tmp_path / "bad.ini", "--out", tmp_path / "o.csv")
    assert code == 2 and "trails" in err


def test_simulate_and_replay(capsys, tmp_path, monkeypatch):
    (tmp_path / "fig1.ini").write_text("[fig1]\n" + MINIMAL + "trials_per_m = 10\nseed = 4\n")
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", "fig1", "--config", tmp_path / "fig1.ini", "--out", out1, "--threads", 1)[0] == 0
    monkeypatch.setenv("MSDETECT_THREADS", "4")
    assert run(capsys, "simulate", "fig1", "--config", tmp_path / "fig1.ini", "--out", out2)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    manifest = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    assert manifest["threads"] == 4 and manifest["seed"] == 4 and manifest["outputs"] == [str(out2)]
    out3 = tmp_path / "c.csv"
    assert run(capsys, "replay", "--manifest", tmp_path / "a.csv.manifest.json", "--out", out3)[0] == 0
    assert out3.read_bytes() == out1.read_bytes()


def test_simulate_fig2_and_roc(capsys, tmp_path):
    (tmp_path / "c.ini").write_text(
        "[fig2]\nn = 300\nr = 5\nm_grid = 20, 300\nvector_kind = in_subspace\ntrials_per_m = 5\n"
        "[roc]\nn = 300\nr = 5\nm_grid = 100\ntrials_per_m = 50\nlambda_grid = 0.05, 0.1\n"
    )
    assert run(capsys, "simulate", "fig2", "--config", tmp_path / "c.ini", "--out", tmp_path / "f2.csv")[0] == 0
    lines = (tmp_path / "f2.csv").read_text().splitlines()
    assert len(lines) == 3 and float(lines[2].split(",")[3]) <= 1e-12
    assert run(capsys, "simulate", "roc", "--config", tmp_path / "c.ini", "--out", tmp_path / "roc.csv")[0] == 0
    assert (tmp_path / "roc.csv").read_text().startswith("m,lambda,p_fa,p_d,trials_h0,trials_h1\n")
