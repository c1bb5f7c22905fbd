import json

from nextsense.channel import read_tap_file
from nextsense.cli import main
from nextsense.scenario import ExperimentSpec, UESpec, spec_to_json
from nextsense.waveform import GridDims


def write_spec(tmp_path, **kw):
    defaults = dict(
        name="cli",
        duration_s=0.05,
        snapshot_interval_s=0.01,
        seed=2,
        ues=(UESpec(id="ue0", channel={
            "taps": [{"delay_ns": 0.0, "power_db": 0.0, "doppler_hz": 0.0}],
            "seed": 1}),),
    )
    defaults.update(kw)
    path = tmp_path / "spec.json"
    path.write_text(spec_to_json(ExperimentSpec(**defaults)))
    return path


def test_validate_spec_ok(tmp_path, capsys):
    path = write_spec(tmp_path)
    assert main(["validate-spec", str(path)]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_spec_violations(tmp_path, capsys):
    spec = json.loads(write_spec(tmp_path).read_text())
    spec["radio"]["subcarrier_spacing_khz"] = 17.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(spec))
    assert main(["validate-spec", str(bad)]) == 1
    assert "radio.subcarrier_spacing" in capsys.readouterr().out


def test_run_and_compare_and_replay(tmp_path, capsys):
    spec_a = write_spec(tmp_path, seed=2)
    out_a = tmp_path / "run_a"
    assert main(["run", str(spec_a), "--out", str(out_a)]) == 0
    assert (out_a / "manifest.json").exists()

    spec_b = write_spec(tmp_path, seed=3)
    out_b = tmp_path / "run_b"
    assert main(["run", str(spec_b), "--out", str(out_b)]) == 0

    stats_path = tmp_path / "stats.json"
    assert main(["compare", str(out_a), str(out_b), "--out", str(stats_path)]) == 0
    stats = json.loads(stats_path.read_text())
    assert "ks_d" in stats and "wasserstein" in stats
    assert (tmp_path / "stats_waterfall_a.csv").exists()
    assert (tmp_path / "stats_cdf.csv").exists()

    taps_path = tmp_path / "recovered.taps"
    assert main(["replay-estimate", str(out_a), "--out", str(taps_path)]) == 0
    taps = read_tap_file(taps_path)
    assert len(taps) == 1
    assert taps[0].delay_ns == 0.0


def test_run_rejects_invalid(tmp_path, capsys):
    spec = json.loads(write_spec(tmp_path).read_text())
    spec["duration_s"] = -1.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(spec))
    assert main(["run", str(bad), "--out", str(tmp_path / "x")]) == 1
