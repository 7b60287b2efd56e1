"""Record the end-to-end probe quality threshold fixture.

Runs `probe` against `mock-serve` (both as CLI subprocesses, exactly like the
acceptance test replays them), measures si-RMSE between the estimated map and
the mock's hidden ground truth, and freezes threshold = round(1.5 x measured, 4)
into tests/fixtures/thresholds.json. Rerun only to recalibrate deliberately;
the acceptance suite treats the recorded numbers as immutable.
"""

from __future__ import annotations

import json
import re
import subprocess
import sys
import tempfile
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from probelight import load_image, save_image, si_rmse  # noqa: E402
from probelight.backend import check_health  # noqa: E402
from probelight.synth import make_scene_image, make_synthetic_env  # noqa: E402

CONFIG = {
    "scene": {"width": 320, "height": 240, "seed": 5},
    "gt_env": {"height": 64, "seed": 3},
    "probe_flags": {
        "n": 6,
        "k": 2,
        "seed": 198,
        "evs": "0,-2.5,-5",
        "ball_diameter": 128,
        "canvas": 256,
        "env_height": 64,
    },
    "mock_flags": {"corrupt_fraction": 0.2, "ball_diameter": 128, "canvas": 256},
}

FIXTURE = REPO / "tests" / "fixtures" / "thresholds.json"


def run_probe_vs_mock(workdir: Path) -> float:
    scene_path = workdir / "scene.png"
    gt_path = workdir / "gt.pfm"
    out_path = workdir / "env.pfm"
    save_image(make_scene_image(**CONFIG["scene"]), scene_path)
    save_image(make_synthetic_env(**CONFIG["gt_env"]).image, gt_path)

    mf = CONFIG["mock_flags"]
    server = subprocess.Popen(
        [sys.executable, "-m", "probelight", "mock-serve", "--env", str(gt_path),
         "--port", "0",
         "--corrupt-fraction", str(mf["corrupt_fraction"]),
         "--ball-diameter", str(mf["ball_diameter"]),
         "--canvas", str(mf["canvas"])],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        line = server.stdout.readline()
        url = re.search(r"listening on (http://\S+)", line).group(1)
        deadline = time.monotonic() + 10.0
        while not check_health(url, timeout=1.0):
            if time.monotonic() > deadline:
                raise RuntimeError("mock-serve never became healthy")
            time.sleep(0.05)

        pf = CONFIG["probe_flags"]
        cmd = [sys.executable, "-m", "probelight", "probe",
               "--input", str(scene_path), "--backend", url, "--out", str(out_path),
               "--n", str(pf["n"]), "--k", str(pf["k"]), "--seed", str(pf["seed"]),
               "--evs", pf["evs"],
               "--ball-diameter", str(pf["ball_diameter"]),
               "--canvas", str(pf["canvas"]),
               "--env-height", str(pf["env_height"])]
        subprocess.run(cmd, check=True, timeout=600)
    finally:
        server.terminate()
        server.wait(timeout=10)

    pred = load_image(out_path)
    gt = make_synthetic_env(**CONFIG["gt_env"]).image
    return si_rmse(pred.data, gt.data)


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        measured = run_probe_vs_mock(Path(tmp))
    threshold = round(1.5 * measured, 4)
    fixture = dict(CONFIG)
    fixture["measured_si_rmse"] = measured
    fixture["threshold_si_rmse"] = threshold
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps({"end_to_end_probe": fixture}, indent=2) + "\n")
    print(f"measured si-RMSE: {measured!r}")
    print(f"threshold (1.5x, 4 dp): {threshold}")
    print(f"wrote {FIXTURE}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
