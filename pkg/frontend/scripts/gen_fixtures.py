"""Regenerate frontend test fixtures against the live backend.

Run from the repository root with the nextsense package installed:

    python3 frontend/scripts/gen_fixtures.py
"""
import json
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from nextsense.api import create_app
from nextsense.scenario import Box, Cbr, ExperimentSpec, RadioConfig, UESpec, Waypoints, spec_to_doc, spec_to_json

out = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

spec = ExperimentSpec(
    name="fixture",
    duration_s=0.1,
    snapshot_interval_s=0.01,
    seed=7,
    log_verbosity={"phy": "full", "mac": "full", "rrc": "summary", "nas": "summary"},
    radio=RadioConfig(),
    ues=(
        UESpec(
            id="walker",
            initial_position=(1.0, 1.0, 1.5),
            speed_mps=2.0,
            direction_deg=30.0,
            mobility_area=Box((0.0, 0.0, 0.0), (5.0, 5.0, 3.0)),
            mobility_logic="linear_bounce",
            traffic_profile=Cbr(rate_kbps=1500.0),
            channel={"preset": "tdla30", "doppler_hz": 25.0,
                     "noise_spectral_density_dbm_hz": -54.8, "seed": 3},
        ),
        UESpec(
            id="cart",
            initial_position=(0.5, 0.5, 1.0),
            speed_mps=0.5,
            mobility_area=Box((0.0, 0.0, 0.0), (5.0, 5.0, 3.0)),
            mobility_logic=Waypoints(points=((2.0, 0.5, 1.0), (2.0, 2.5, 1.0))),
            traffic_profile="none",
            channel={"taps": [{"delay_ns": 0.0, "power_db": 0.0, "doppler_hz": 0.0}], "seed": 4},
        ),
    ),
)
doc = spec_to_doc(spec)
(out / "spec.json").write_text(spec_to_json(spec))

with tempfile.TemporaryDirectory() as d:
    app = create_app(data_dir=d, workers=1)
    with TestClient(app) as c:
        run_id = c.post("/v1/experiments", json=doc).json()["run_id"]
        preview = c.get(f"/v1/runs/{run_id}/preview").json()
        (out / "preview.json").write_text(json.dumps(preview, indent=2))
        c.post(f"/v1/experiments/{run_id}/run")
        while True:
            st = c.get(f"/v1/runs/{run_id}").json()
            if st["state"] in ("completed", "failed"):
                break
            time.sleep(0.05)
        assert st["state"] == "completed", st
        (out / "run_status.json").write_text(json.dumps(st, indent=2))
        (out / "waterfall.csv").write_text(c.get(f"/v1/runs/{run_id}/artifacts/waterfall?ue=0").text)
        stats = c.post(f"/v1/compare?a={run_id}&b={run_id}").json()
        (out / "stats.json").write_text(json.dumps(stats, indent=2))
        (out / "iq_ue1.bin").write_bytes(c.get(f"/v1/runs/{run_id}/artifacts/iq?ue=1").content)
        manifest = json.loads(c.get(f"/v1/runs/{run_id}/artifacts/manifest").content)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
print("fixtures written:", sorted(p.name for p in out.iterdir()))
