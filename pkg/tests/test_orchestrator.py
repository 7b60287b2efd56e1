import threading

import numpy as np
import pytest

from probelight import (
    BallSpec,
    ColorSpace,
    EnvironmentMap,
    RasterImage,
    ball_mask,
    ball_to_envmap,
    linearize,
)
from probelight.images import decode_png, encode_png
from probelight.backend import InpaintRequest, InpaintResponse, MockBackend, MockConfig
from probelight.errors import BackendError, ConfigError, RangeError
from probelight.orchestrator import (
    EV_SEED_STRIDE,
    ProbeConfig,
    iterative_inpaint,
    prepare_input,
    probe,
    prompt_weight,
)
from probelight.synth import make_synthetic_env

from helpers import gray_image

SPEC = BallSpec(center=(32.0, 32.0), radius=16.0, image_size=(64, 64))


def small_cfg(**kw) -> ProbeConfig:
    defaults = dict(n_balls=2, iterations=2, ball_spec=SPEC, env_height=16, base_seed=50)
    defaults.update(kw)
    return ProbeConfig(**defaults)


def canvas_scene(value: float = 0.3) -> RasterImage:
    return gray_image(value, width=64, height=64)


def painted_depth() -> RasterImage:
    from probelight import paint_depth_circle

    blank = RasterImage(np.zeros((64, 64, 1), dtype=np.float32), ColorSpace.LDR_SRGB)
    return paint_depth_circle(blank, SPEC, white=True)


class RecordingBackend:
    """Echoes the request image; serial so the request order is observable."""

    backend_id = "echo"
    max_in_flight = 1

    def __init__(self):
        self.requests: list[InpaintRequest] = []
        self._lock = threading.Lock()

    def inpaint(self, req: InpaintRequest) -> InpaintResponse:
        with self._lock:
            self.requests.append(req)
        return InpaintResponse(image=req.image, backend_id=self.backend_id, elapsed_ms=0)


class ConstantBackend:
    """Always answers with one fixed canvas, whatever the request."""

    backend_id = "constant"
    max_in_flight = 4

    def __init__(self, payload: bytes):
        self.payload = payload

    def inpaint(self, req: InpaintRequest) -> InpaintResponse:
        return InpaintResponse(image=self.payload, backend_id=self.backend_id, elapsed_ms=0)


class FailingBackend:
    backend_id = "failing"
    max_in_flight = 1

    def inpaint(self, req: InpaintRequest) -> InpaintResponse:
        raise BackendError("synthetic failure")


class TestPromptWeight:
    def test_endpoints_and_midpoint(self):
        assert prompt_weight(0.0, -5.0) == 0.0
        assert prompt_weight(-5.0, -5.0) == 1.0
        assert prompt_weight(-2.5, -5.0) == 0.5

    def test_range_errors(self):
        with pytest.raises(RangeError):
            prompt_weight(0.0, 0.0)
        with pytest.raises(RangeError):
            prompt_weight(-6.0, -5.0)
        with pytest.raises(RangeError):
            prompt_weight(0.5, -5.0)


class TestProbeConfig:
    def test_defaults_match_pipeline_parameters(self):
        cfg = ProbeConfig()
        assert (cfg.n_balls, cfg.iterations, cfg.strength) == (30, 2, 0.8)
        assert cfg.ev_list == (0.0, -2.5, -5.0)
        assert cfg.ev_min == -5.0
        assert cfg.prompt == "a perfect mirrored reflective chrome ball sphere"
        assert cfg.negative_prompt == "matte, diffuse, flat, dull"
        assert (cfg.steps, cfg.guidance, cfg.lora_scale) == (30, 5.0, 0.75)
        assert cfg.ball_spec.radius == 128.0
        assert cfg.ball_spec.image_size == (1024, 1024)

    @pytest.mark.parametrize(
        "kw",
        [
            dict(n_balls=0),
            dict(iterations=0),
            dict(strength=0.0),
            dict(strength=1.2),
            dict(ev_list=(-1.0, -2.0)),
            dict(ev_list=(0.0, -1.0, -1.0)),
            dict(ev_list=()),
            dict(ev_min=-0.5, ev_list=(0.0, -1.0)),
            dict(base_seed=-1),
            dict(env_height=0),
            dict(steps=0),
            dict(n_balls=600_000, iterations=2),
        ],
    )
    def test_invalid_configs_rejected(self, kw):
        with pytest.raises(ConfigError):
            small_cfg(**kw)


class TestPrepareInput:
    def test_identity_when_already_canvas_sized(self):
        img = canvas_scene()
        assert prepare_input(img, SPEC) is img

    def test_letterboxes_wide_input(self):
        img = gray_image(1.0, width=100, height=50)
        out = prepare_input(img, SPEC)
        assert (out.width, out.height) == (64, 64)
        assert np.all(out.data[:16] == 0.0)
        assert np.all(out.data[48:] == 0.0)
        assert np.all(out.data[16:48] > 0.99)

    def test_letterboxes_tall_input(self):
        img = gray_image(1.0, width=50, height=100)
        out = prepare_input(img, SPEC)
        assert np.all(out.data[:, :16] == 0.0)
        assert np.all(out.data[:, 48:] == 0.0)
        assert np.all(out.data[:, 16:48] > 0.99)

    def test_preserves_ldr_range(self):
        rng = np.random.default_rng(0)
        img = RasterImage(rng.random((30, 70, 3), dtype=np.float32), ColorSpace.LDR_SRGB)
        out = prepare_input(img, SPEC)
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0


class TestIterativeInpaint:
    def test_seed_and_strength_schedule(self):
        backend = RecordingBackend()
        cfg = small_cfg(n_balls=3, iterations=2, base_seed=100, strength=0.8)
        iterative_inpaint(canvas_scene(), painted_depth(), backend, cfg, ev=0.0)
        seen = [(r.seed, r.denoising_strength) for r in backend.requests]
        assert seen == [
            (100, 1.0),
            (101, 1.0),
            (102, 1.0),
            (103, 0.8),
            (104, 0.8),
            (105, 0.8),
            (106, 0.8),  # final lone request at base + k*N
        ]

    def test_first_iteration_always_full_strength(self):
        backend = RecordingBackend()
        cfg = small_cfg(n_balls=1, iterations=3, base_seed=0, strength=0.3)
        iterative_inpaint(canvas_scene(), painted_depth(), backend, cfg, ev=0.0)
        strengths = [r.denoising_strength for r in backend.requests]
        assert strengths == [1.0, 0.3, 0.3, 0.3]

    def test_request_carries_config_and_painted_depth(self):
        backend = RecordingBackend()
        cfg = small_cfg(n_balls=1, iterations=1, prompt="p", negative_prompt="n",
                        steps=7, guidance=3.5, lora_scale=0.5)
        iterative_inpaint(canvas_scene(), painted_depth(), backend, cfg, ev=-2.5)
        req = backend.requests[0]
        assert (req.prompt, req.negative_prompt) == ("p", "n")
        assert (req.steps, req.guidance, req.lora_scale) == (7, 3.5, 0.5)
        assert req.embed_weight == 0.5
        inside = ball_mask(SPEC).data > 0.5
        depth = decode_png(req.depth)
        assert np.all(depth.data[inside] == 1.0)
        assert np.all(depth.data[~inside] == 0.0)
        mask = decode_png(req.mask)
        assert np.array_equal(mask.data[:, :, 0] > 0.5, inside)

    def test_constant_backend_is_fixed_point_for_any_k_n(self, small_env):
        cfg_mock = MockConfig(env_map=small_env, ball_spec=SPEC)
        clean = MockBackend(cfg_mock).inpaint(
            InpaintRequest(
                image=encode_png(canvas_scene()),
                mask=encode_png(RasterImage(ball_mask(SPEC).data, ColorSpace.LDR_SRGB)),
                depth=encode_png(painted_depth()),
                prompt="p",
                negative_prompt="n",
                embed_weight=0.0,
                denoising_strength=1.0,
                seed=0,
            )
        ).image
        backend = ConstantBackend(clean)
        box = SPEC.crop_box()
        x0, y0, x1, y1 = box
        expected = decode_png(clean).data[y0:y1, x0:x1]
        for n_balls, iters in [(1, 1), (4, 3)]:
            cfg = small_cfg(n_balls=n_balls, iterations=iters)
            out = iterative_inpaint(canvas_scene(), painted_depth(), backend, cfg, ev=0.0)
            assert np.array_equal(out.data, expected)

    def test_k1_n1_hand_trace(self, small_env):
        cfg = small_cfg(n_balls=1, iterations=1, base_seed=9, strength=0.8)
        backend = MockBackend(MockConfig(env_map=small_env, ball_spec=SPEC))
        out = iterative_inpaint(canvas_scene(), painted_depth(), backend, cfg, ev=0.0)

        def call(image_png: bytes, strength: float, seed: int) -> bytes:
            return backend.inpaint(
                InpaintRequest(
                    image=image_png,
                    mask=encode_png(RasterImage(ball_mask(SPEC).data, ColorSpace.LDR_SRGB)),
                    depth=encode_png(painted_depth()),
                    prompt=cfg.prompt,
                    negative_prompt=cfg.negative_prompt,
                    embed_weight=0.0,
                    denoising_strength=strength,
                    seed=seed,
                )
            ).image

        first = decode_png(call(encode_png(canvas_scene()), 1.0, 9))
        inside = ball_mask(SPEC).data[:, :, None]
        composed = (1.0 - inside) * canvas_scene().data + inside * first.data
        composed_img = RasterImage(composed.astype(np.float32), ColorSpace.LDR_SRGB)
        final = decode_png(call(encode_png(composed_img), 0.8, 10))
        x0, y0, x1, y1 = SPEC.crop_box()
        assert np.array_equal(out.data, final.data[y0:y1, x0:x1])

    def test_input_validation(self, small_env):
        backend = MockBackend(MockConfig(env_map=small_env, ball_spec=SPEC))
        cfg = small_cfg()
        with pytest.raises(ConfigError):
            iterative_inpaint(gray_image(0.3, width=32, height=32), painted_depth(), backend, cfg)
        with pytest.raises(ConfigError):
            iterative_inpaint(canvas_scene(), gray_image(0.3, width=64, height=64), backend, cfg)
        hdr = RasterImage(np.zeros((64, 64, 3), dtype=np.float32), ColorSpace.LINEAR_HDR)
        with pytest.raises(ConfigError):
            iterative_inpaint(hdr, painted_depth(), backend, cfg)

    def test_backend_errors_propagate(self):
        with pytest.raises(BackendError):
            iterative_inpaint(canvas_scene(), painted_depth(), FailingBackend(), small_cfg())


class TestProbe:
    def test_single_ev_degenerates_to_linearized_unwrap(self, small_env):
        backend = MockBackend(MockConfig(env_map=small_env, ball_spec=SPEC))
        cfg = small_cfg(ev_list=(0.0,), ev_min=-5.0)
        env = probe(canvas_scene(), backend, cfg)
        crop = iterative_inpaint(canvas_scene(), painted_depth(), backend, cfg, ev=0.0)
        expected = ball_to_envmap(linearize(crop), SPEC.crop_spec(), cfg.env_height)
        assert np.array_equal(env.image.data, expected.image.data)

    def test_ev_brackets_use_strided_seeds(self):
        backend = RecordingBackend()
        cfg = small_cfg(n_balls=1, iterations=1, base_seed=3)
        probe(canvas_scene(), backend, cfg)
        # 3 EVs x (one generation + one final) each
        seeds = [r.seed for r in backend.requests]
        assert seeds == [
            3,
            4,
            3 + EV_SEED_STRIDE,
            4 + EV_SEED_STRIDE,
            3 + 2 * EV_SEED_STRIDE,
            4 + 2 * EV_SEED_STRIDE,
        ]
        weights = [r.embed_weight for r in backend.requests]
        assert weights == [0.0, 0.0, 0.5, 0.5, 1.0, 1.0]

    def test_constant_env_yields_constant_map(self):
        data = np.full((32, 64, 3), 2.0, dtype=np.float32)
        env_gt = EnvironmentMap(RasterImage(data, ColorSpace.LINEAR_HDR))
        backend = MockBackend(MockConfig(env_map=env_gt, ball_spec=SPEC))
        cfg = small_cfg(env_height=16)
        env = probe(canvas_scene(), backend, cfg)
        # rim taps near the forward blind cone mix in outside-disk zeros;
        # everywhere else the constant must survive all stages
        h, w = 16, 32
        us = (np.arange(w) + 0.5) / w
        vs = (np.arange(h) + 0.5) / h
        from probelight.geometry import uv_to_dir

        dirs = uv_to_dir(np.stack(np.meshgrid(us, vs, indexing="xy"), axis=-1))
        sel = dirs[..., 2] > -0.75
        vals = env.image.data[sel]
        assert float(vals.max() - vals.min()) <= 1e-6 * float(vals.max())

    def test_determinism_across_concurrency_limits(self, small_env):
        cfg_mock = MockConfig(env_map=small_env, ball_spec=SPEC, corrupt_fraction=0.2)
        wide = MockBackend(cfg_mock)
        narrow = MockBackend(cfg_mock)
        narrow.max_in_flight = 1
        cfg = small_cfg(n_balls=4, iterations=2, base_seed=123)
        env_a = probe(canvas_scene(), wide, cfg)
        env_b = probe(canvas_scene(), narrow, cfg)
        assert np.array_equal(env_a.image.data, env_b.image.data)

    def test_more_iterations_never_hurt_clean_mock(self, small_env):
        backend = MockBackend(MockConfig(env_map=small_env, ball_spec=SPEC))
        scene = canvas_scene()

        def rmse_for(iterations: int) -> float:
            cfg = small_cfg(n_balls=2, iterations=iterations, ev_list=(0.0,))
            crop = iterative_inpaint(scene, painted_depth(), backend, cfg, ev=0.0)
            ref = decode_png(backend.inpaint(
                InpaintRequest(
                    image=encode_png(scene),
                    mask=encode_png(RasterImage(ball_mask(SPEC).data, ColorSpace.LDR_SRGB)),
                    depth=encode_png(painted_depth()),
                    prompt="p",
                    negative_prompt="n",
                    embed_weight=0.0,
                    denoising_strength=1.0,
                    seed=999_999,  # clean residue
                )
            ).image)
            x0, y0, x1, y1 = SPEC.crop_box()
            ref_crop = ref.data[y0:y1, x0:x1]
            inside = ball_mask(SPEC.crop_spec()).data[:, :, None] > 0.5
            diff = (crop.data - ref_crop)[np.broadcast_to(inside, crop.data.shape)]
            return float(np.sqrt(np.mean(diff**2)))

        assert rmse_for(2) <= rmse_for(1) + 1e-12

    def test_probe_with_explicit_depth(self, small_env):
        backend = MockBackend(MockConfig(env_map=small_env, ball_spec=SPEC))
        rng = np.random.default_rng(1)
        depth = RasterImage((rng.random((40, 80, 1)) * 0.7).astype(np.float32),
                            ColorSpace.LDR_SRGB)
        cfg = small_cfg(n_balls=1, iterations=1)
        env = probe(canvas_scene(), backend, cfg, depth=depth)
        assert (env.width, env.height) == (32, 16)
