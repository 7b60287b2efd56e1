"""Wire-protocol conformance, checked with the probe client itself.

If these pass, the adapter is interchangeable with the mock backend from the
probe's point of view: same endpoints, same field names, same error shape,
same size guarantees.
"""

import numpy as np
import pytest
import requests
from fastapi.testclient import TestClient

from probelight.backend import (
    InpaintResponse,
    check_health,
    request_to_json,
    send_inpaint,
)
from probelight.errors import BackendError
from probelight_adapter import StubPipeline, build_app
from util import decode_rgb_png, make_request, scene_arrays


class TestHealth:
    def test_client_sees_healthy(self, adapter_url):
        assert check_health(adapter_url) is True

    def test_body_is_status_ok(self, adapter_url):
        resp = requests.get(adapter_url + "/v1/health", timeout=5)
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_loading_reports_200_with_loading_status(self):
        client = TestClient(build_app(StubPipeline()))
        resp = client.get("/v1/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "loading"}


class TestInpaintRoundTrip:
    def test_golden_response(self, adapter_url):
        req = make_request()
        resp = send_inpaint(adapter_url, req)
        assert isinstance(resp, InpaintResponse)
        assert resp.backend_id == "adapter-stub"
        assert resp.elapsed_ms >= 0
        out = decode_rgb_png(resp.image)
        assert out.shape == (16, 24, 3)

    def test_byte_identical_reruns(self, adapter_url):
        req = make_request(seed=9)
        a = send_inpaint(adapter_url, req)
        b = send_inpaint(adapter_url, req)
        assert a.image == b.image

    def test_outside_mask_pixels_unchanged(self, adapter_url):
        image, mask, _ = scene_arrays()
        req = make_request()
        out = decode_rgb_png(send_inpaint(adapter_url, req).image)
        # Round-trip through 8-bit PNG is exact for already-quantized levels.
        quantized = np.rint(image * 255.0) / 255.0
        outside = mask <= 0.5
        np.testing.assert_array_equal(
            out[outside], quantized.astype(np.float32)[outside]
        )

    def test_masked_region_changes(self, adapter_url):
        image, mask, _ = scene_arrays()
        out = decode_rgb_png(send_inpaint(adapter_url, make_request()).image)
        assert not np.allclose(out[mask > 0.5], image[mask > 0.5], atol=1 / 255)

    def test_embed_weight_changes_output(self, adapter_url):
        bright = send_inpaint(adapter_url, make_request(embed_weight=0.0))
        dim = send_inpaint(adapter_url, make_request(embed_weight=1.0))
        assert bright.image != dim.image
        image, mask, _ = scene_arrays()
        inside = mask > 0.5
        assert (
            decode_rgb_png(dim.image)[inside].mean()
            < decode_rgb_png(bright.image)[inside].mean()
        )

    def test_seed_changes_output(self, adapter_url):
        a = send_inpaint(adapter_url, make_request(seed=100))
        b = send_inpaint(adapter_url, make_request(seed=101))
        assert a.image != b.image


class TestClientVisibleErrors:
    def test_undecodable_image_is_backend_error(self, adapter_url):
        req = make_request(image=b"not a png at all")
        with pytest.raises(BackendError, match="PNG"):
            send_inpaint(adapter_url, req)

    def test_mask_size_mismatch_is_backend_error(self, adapter_url):
        good = make_request()
        small = make_request(width=8, height=8)
        req = make_request(mask=small.mask)
        assert good.image == req.image
        with pytest.raises(BackendError, match="mask"):
            send_inpaint(adapter_url, req)

    def test_depth_size_mismatch_is_backend_error(self, adapter_url):
        small = make_request(width=8, height=8)
        req = make_request(depth=small.depth)
        with pytest.raises(BackendError, match="depth"):
            send_inpaint(adapter_url, req)


@pytest.fixture(scope="module")
def client(pipeline):
    return TestClient(build_app(pipeline))


class TestServerValidation:
    """Raw-JSON abuse the strict client cannot produce."""

    def _post(self, client, **overrides):
        body = request_to_json(make_request())
        body.update(overrides)
        return client.post("/v1/inpaint", json=body)

    def test_valid_body_passes(self, client):
        resp = self._post(client)
        assert resp.status_code == 200
        assert set(resp.json()) == {"image", "backend_id", "elapsed_ms"}

    @pytest.mark.parametrize(
        "overrides",
        [
            {"embed_weight": 1.5},
            {"embed_weight": -0.1},
            {"denoising_strength": 0.0},
            {"denoising_strength": 1.2},
            {"seed": -1},
            {"seed": 2**64},
            {"steps": 0},
            {"prompt": None},
        ],
    )
    def test_field_violations_return_400(self, client, overrides):
        resp = self._post(client, **overrides)
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_missing_field_returns_400(self, client):
        body = request_to_json(make_request())
        del body["image"]
        resp = client.post("/v1/inpaint", json=body)
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_invalid_base64_returns_400(self, client):
        resp = self._post(client, mask="@@not-base64@@")
        assert resp.status_code == 400
        assert "base64" in resp.json()["error"]

    def test_malformed_json_returns_400(self, client):
        resp = client.post(
            "/v1/inpaint",
            content=b"{not json",
            headers={"Content-Type": "application/json"},
        )
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_not_loaded_returns_503(self):
        client = TestClient(build_app(StubPipeline()))
        resp = client.post("/v1/inpaint", json=request_to_json(make_request()))
        assert resp.status_code == 503
        assert "error" in resp.json()

    def test_inference_failure_returns_500(self):
        pipe = StubPipeline()
        pipe.load()

        def boom(**kwargs):
            raise RuntimeError("cuda device on fire")

        pipe.generate = boom
        client = TestClient(build_app(pipe))
        resp = client.post("/v1/inpaint", json=request_to_json(make_request()))
        assert resp.status_code == 500
        assert "inference failed" in resp.json()["error"]
