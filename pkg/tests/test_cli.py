import json

import pytest

from hedgehog.cli import RunConfig, load_config, main
from hedgehog.errors import ConfigError


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_odd_n_is_config_error(tmp_path, capsys):
    assert main(["profile", "--n", "2001", "--out", str(tmp_path)]) == 2
    assert "N must be even" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="N must be even"):
        RunConfig(n=7).validate()


def test_bad_params(tmp_path):
    assert main(["profile", "--c2", "0", "--out", str(tmp_path)]) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[params]\na2 = 0.1\na2_list = 0.05, 1\n[grid]\nn = 1000\n")
    c = load_config(cfg)
    assert (c.a2, c.n, c.a2_list) == (0.1, 1000, [0.05, 1.0])
    cfg.write_text("[params]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config(cfg)


def test_profile_artifacts(tmp_path):
    assert main(["profile", "--n", "1000", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "profile.json").read_text())
    assert body["grid"]["n"] == 1000 and len(body["config_hash"]) == 16
    lines = (tmp_path / "profile.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert "r,u,du,w" in lines


def test_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["scan", "--n", "1000", "--a2-list", "0.05,1", "--out", str(d)]) == 0
        assert main(["bounds", "--n", "1000", "--samples", "5", "--seed", "7", "--out", str(d)]) == 0
    assert _files(a) == _files(b)


def test_scan(tmp_path):
    assert main(["scan", "--n", "2000", "--a2-list", "0.05,1,10", "--out", str(tmp_path)]) == 0
    spectra = json.loads((tmp_path / "scan.json").read_text())["spectra"]
    assert [s["a2"] for s in spectra] == [0.05, 1.0, 10.0]
    assert spectra[0]["verdict"] == "stable-with-kernel"
    assert all("grid" in s for s in spectra)


def test_identities_seed_42(tmp_path):
    assert main(["identities", "--n", "2000", "--seed", "42", "--fields", "4",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "identities.json").read_text())["passed"] is True


def test_witness(tmp_path):
    assert main(["witness", "--a2", "1", "--b2", "0.01", "--n", "2000", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "witness.json").read_text())
    assert body["Q3"] < 0
