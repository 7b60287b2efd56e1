"""Minimal end-to-end walkthrough against the deterministic mock backend.

Generates a synthetic scene and a hidden environment map, serves the mock
backend in-process, estimates the environment from the scene image, and
writes the results (plus a tone-mapped preview and an evaluation table) to
demo_out/.
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from probelight import (  # noqa: E402
    BallSpec,
    HttpBackend,
    MockConfig,
    ProbeConfig,
    evaluate_three_spheres,
    probe,
    save_image,
    start_mock_server,
    tonemap,
)
from probelight.synth import make_scene_image, make_synthetic_env  # noqa: E402


def main() -> int:
    out_dir = Path("demo_out")
    out_dir.mkdir(exist_ok=True)

    gt = make_synthetic_env(height=64, seed=3, light_peak=20.0)
    scene = make_scene_image(320, 240, seed=5)
    spec = BallSpec(center=(128.0, 128.0), radius=64.0, image_size=(256, 256))

    server, _thread, port = start_mock_server(
        MockConfig(env_map=gt, ball_spec=spec, corrupt_fraction=0.2)
    )
    try:
        cfg = ProbeConfig(
            n_balls=6,
            iterations=2,
            ball_spec=spec,
            base_seed=198,
            env_height=64,
        )
        env = probe(scene, HttpBackend(f"http://127.0.0.1:{port}"), cfg)
    finally:
        server.shutdown()
        server.server_close()

    save_image(scene, out_dir / "scene.png")
    save_image(gt.image, out_dir / "gt_env.pfm")
    save_image(env.image, out_dir / "estimated_env.pfm")
    save_image(tonemap(env.image), out_dir / "estimated_env_preview.png")

    report = evaluate_three_spheres(env, gt)
    print(report.to_table())
    (out_dir / "report.json").write_text(report.to_json() + "\n")
    print(f"\noutputs in {out_dir.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
