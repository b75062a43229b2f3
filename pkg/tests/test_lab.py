import json

import pytest

from bcoh import lab
from bcoh.cli import EXIT_CONFIG, EXIT_GEOMETRY, EXIT_OK, main
from bcoh.eightmodel import DEFAULT_GEOMETRY, RegionLabel

FAST = {"mode": "regions", "mc_samples": 20_000, "seed": 3}


def test_config_validation():
    with pytest.raises(lab.ConfigError):
        lab.ExperimentConfig(epsilons=[0.1, 0.2])
    with pytest.raises(lab.ConfigError):
        lab.ExperimentConfig(epsilons=[1.2])
    with pytest.raises(lab.ConfigError):
        lab.ExperimentConfig(words=["ababababab"], word_cap=8)
    with pytest.raises(lab.ConfigError):
        lab.ExperimentConfig(integrator={"mode": "fast"})
    with pytest.raises(lab.ConfigError):
        lab.ExperimentConfig.from_dict({"nope": 1})


def test_descriptors():
    assert lab.cochain_from_descriptor({"kind": "brooks2", "pattern": "ab"}).degree == 2
    assert lab.cochain_from_descriptor({"kind": "vol3", "rho": {"translation_length": 0.8}}).degree == 3
    assert lab.cochain_from_descriptor({"kind": "zero", "degree": 1}).degree == 1
    for bad in ({"kind": "what"}, {"kind": "vol3", "rho": {"kind": "parabolic"}}, {"kind": "vol3", "rho": {"x": 1}}):
        with pytest.raises(lab.ConfigError):
            lab.cochain_from_descriptor(bad)


def test_converge_sweep_rows():
    cfg = lab.ExperimentConfig(integrator=FAST)
    rows = lab.converge_sweep(cfg)
    assert [r.epsilon for r in rows] == cfg.epsilons
    collar = [r.mu_collar for r in rows]
    assert all(a > b for a, b in zip(collar, collar[1:]))
    assert rows[-1].discrepancy <= rows[0].discrepancy
    assert all(r.ok for r in rows)
    assert rows[0].core_closed_form == rows[0].mu_core_both


def test_converge_zero_cochain():
    rows = lab.converge_sweep(lab.ExperimentConfig(cochain={"kind": "zero"}, integrator=FAST))
    assert all(r.value == 0 and r.core_closed_form == 0 and r.discrepancy == 0 for r in rows)


def test_parallel_rows_keep_ladder_order():
    cfg = lab.ExperimentConfig(integrator=FAST, epsilons=[0.4, 0.2], words=["ab", "aB"])
    assert lab.converge_sweep(cfg, workers=3) == lab.converge_sweep(cfg)


def test_csv_roundtrip_reproduces_values():
    cfg = lab.ExperimentConfig(integrator={"mode": "mc", "mc_samples": 20_000, "seed": 9}, epsilons=[0.4, 0.1])
    rows = lab.converge_sweep(cfg)
    text = lab.convergence_csv(rows, cfg)
    assert text.startswith("# config=")
    cfg2, rows2 = lab.read_convergence_csv(text)
    assert rows2 == rows
    assert lab.converge_sweep(cfg2) == rows


def test_volume_class_eval():
    cfg = lab.ExperimentConfig(cochain={"kind": "vol3", "rho": {}}, integrator=FAST)
    rep = lab.volume_class_eval(cfg, lab.parse_tuple("ab,b,Ba,A"))
    assert abs(rep.total) <= 1.015 * rep.area
    assert len(rep.entries) <= 4 * 2
    assert rep.total == pytest.approx(rep.core_total + rep.collar_total)
    same = lab.volume_class_eval(cfg, lab.parse_tuple("ab,ab,Ba,A"))
    assert same.total == 0 and all(e.volume == 0 for e in same.entries + same.collar)
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["config"]["cochain"]["kind"] == "vol3"
    assert rep.table_csv().splitlines()[1].startswith("schema_version,region,word1")
    with pytest.raises(lab.ConfigError):
        lab.volume_class_eval(lab.ExperimentConfig(), lab.parse_tuple("a,b,ab,e"))


def test_regions_report():
    rep = lab.regions_report(DEFAULT_GEOMETRY)
    assert abs(rep["residual"]) <= 5e-8
    assert rep["measures"][RegionLabel.COLLAR.value] > 0


def test_cli_gamma(capsys, tmp_path):
    assert main(["gamma", "--element", "ab", "--point", "0.01,0.98"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ab"
    pts = tmp_path / "p.csv"
    pts.write_text("0.01,0.98\n5,0\n")
    assert main(["gamma", "--element", "ab", "--points-csv", str(pts)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[1].endswith(",ab") and lines[2].endswith(",e")


def test_cli_induce_and_seed_rule(capsys):
    desc = '{"kind": "brooks2", "pattern": "ab"}'
    assert main(["induce", "--cochain", desc, "--tuple", "ab,aB,e", "--mode", "mc", "--samples", "5000"]) == EXIT_CONFIG
    capsys.readouterr()
    assert main(["induce", "--cochain", desc, "--tuple", "ab,aB,e", "--mode", "mc", "--samples", "5000", "--seed", "1"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert {"value", "stat_error", "collar_bound", "region_breakdown"} <= set(out)


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "g.json"
    bad.write_text(json.dumps({"R": 1.0}))
    assert main(["regions", "--geometry", str(bad)]) == EXIT_GEOMETRY
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"epsilons": [0.1, 0.3]}))
    assert main(["converge", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["regions"]) == EXIT_OK


def test_cli_converge_and_rerun(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"epsilons": [0.4, 0.2], "integrator": {"mode": "mc", "mc_samples": 10000}}))
    out = tmp_path / "rows.csv"
    assert main(["converge", "--config", str(cfg), "--output", str(out)]) == EXIT_CONFIG
    assert main(["converge", "--config", str(cfg), "--seed", "4", "--output", str(out)]) == EXIT_OK
    out2 = tmp_path / "rows2.csv"
    assert main(["converge", "--rerun", str(out), "--output", str(out2)]) == EXIT_OK
    assert out.read_text() == out2.read_text()


def test_cli_qm_and_volume(tmp_path, capsys):
    assert main(["qm", "--element", "ab", "--samples", "10000"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["core_closed_form"] > 0
    table = tmp_path / "t.csv"
    assert main(["volume", "--tuple", "ab,b,Ba,A", "--table", str(table)]) == EXIT_OK
    assert "total" in json.loads(capsys.readouterr().out)
    assert table.read_text().startswith("# config=")
