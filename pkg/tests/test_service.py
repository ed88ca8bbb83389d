"""HTTP service: registry listing, generation endpoints, the error contract
(400/404/408/422), and byte-level response determinism."""

import base64
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from polyptych.canvas import extract_sketch
from polyptych.bank import save_bank
from polyptych.imageio import decode_ppm, encode_png, encode_ppm
from polyptych.networks import ModelBundle, save_bundle
from polyptych.service import REGISTRY_ENV, create_app


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _sketch_rgb(painting, size=32):
    """Deterministic RGB sketch file content for a painting crop."""
    sk = extract_sketch(painting[:, :size, :size])
    return np.repeat(sk, 3, axis=0)


@pytest.fixture(scope="module")
def registry_dir(tmp_path_factory, painting, small_bank):
    root = tmp_path_factory.mktemp("registry")
    bundle = ModelBundle.init(n_refs=small_bank.k, seed=3, width=4)
    save_bundle(bundle, root / "model.nply")
    save_bank(small_bank, root / "bank.npbk")
    (root / "template.ppm").write_bytes(encode_ppm(_sketch_rgb(painting)))
    (root / "registry.json").write_text(json.dumps({
        "texture-a": {
            "bundle": "model.nply",
            "bank": "bank.npbk",
            "genre": "texture",
            "stage1_res": 32,
            "templates": [{"id": "tpl-1", "file": "template.ppm"}],
        }
    }))
    return root


@pytest.fixture(scope="module")
def client(registry_dir):
    return TestClient(create_app(str(registry_dir)))


@pytest.fixture(scope="module")
def sketch_payload(painting):
    return _b64(encode_ppm(_sketch_rgb(painting)))


class TestRegistry:
    def test_empty_registry_lists_nothing(self, tmp_path):
        empty = TestClient(create_app(str(tmp_path)))
        resp = empty.get("/api/v1/models")
        assert resp.status_code == 200
        assert resp.json() == []

    def test_models_listed(self, client):
        resp = client.get("/api/v1/models")
        assert resp.status_code == 200
        assert resp.json() == [
            {"model_id": "texture-a", "genre": "texture", "stage1_res": 32}
        ]

    def test_env_var_fallback(self, registry_dir, monkeypatch):
        monkeypatch.setenv(REGISTRY_ENV, str(registry_dir))
        via_env = TestClient(create_app())
        assert via_env.get("/api/v1/models").json()[0]["model_id"] == "texture-a"

    def test_templates_round_trip(self, client, registry_dir):
        resp = client.get("/api/v1/models/texture-a/templates")
        assert resp.status_code == 200
        items = resp.json()
        assert [t["template_id"] for t in items] == ["tpl-1"]
        # Canonical PPM: the payload matches the registered file byte for byte.
        assert base64.b64decode(items[0]["sketch_image"]) == \
            (registry_dir / "template.ppm").read_bytes()

    def test_templates_unknown_model(self, client):
        resp = client.get("/api/v1/models/nope/templates")
        assert resp.status_code == 404
        assert resp.json()["error"] == "unknown_model"


class TestGenerate:
    def _body(self, sketch_payload, **extra):
        body = {"model_id": "texture-a", "sketch": sketch_payload, "seed": 5}
        body.update(extra)
        return body

    def test_basic_generation(self, client, sketch_payload):
        resp = client.post("/api/v1/generate", json=self._body(sketch_payload))
        assert resp.status_code == 200
        out = resp.json()
        assert out["width"] == 64 and out["height"] == 64  # 2x the 32px sketch
        assert out["elapsed_ms"] >= 0
        img = decode_ppm(base64.b64decode(out["image"]))
        assert img.shape == (3, 64, 64)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_fixed_seed_byte_identical(self, client, sketch_payload):
        body = self._body(sketch_payload)
        a = client.post("/api/v1/generate", json=body).json()["image"]
        b = client.post("/api/v1/generate", json=body).json()["image"]
        assert a == b

    def test_png_input_matches_ppm_input(self, client, painting, sketch_payload):
        png_body = self._body(_b64(encode_png(_sketch_rgb(painting))))
        ppm_body = self._body(sketch_payload)
        a = client.post("/api/v1/generate", json=png_body).json()["image"]
        b = client.post("/api/v1/generate", json=ppm_body).json()["image"]
        assert a == b

    def test_mask_accepted(self, client, sketch_payload):
        mask = _b64(encode_ppm(np.zeros((3, 32, 32), dtype=np.float32)))
        resp = client.post("/api/v1/generate",
                           json=self._body(sketch_payload, mask=mask))
        assert resp.status_code == 200

    def test_tiled_generation(self, client, painting):
        sketch = _b64(encode_ppm(np.repeat(extract_sketch(painting[:, :32, :]), 3, axis=0)))
        body = {"model_id": "texture-a", "sketch": sketch, "seed": 1,
                "tile": {"tile_w": 32, "tile_h": 32, "overlap_w": 16}}
        resp = client.post("/api/v1/generate", json=body)
        assert resp.status_code == 200
        out = resp.json()
        assert (out["width"], out["height"]) == (128, 64)

    def test_unknown_model_404(self, client, sketch_payload):
        resp = client.post("/api/v1/generate",
                           json={"model_id": "nope", "sketch": sketch_payload})
        assert resp.status_code == 404
        assert resp.json()["error"] == "unknown_model"

    def test_missing_fields_400(self, client):
        resp = client.post("/api/v1/generate", json={"model_id": "texture-a"})
        assert resp.status_code == 400
        assert resp.json()["error"] == "malformed_body"

    def test_non_object_body_400(self, client):
        resp = client.post("/api/v1/generate", json=[1, 2, 3])
        assert resp.status_code == 400
        assert resp.json()["error"] == "malformed_body"

    def test_invalid_json_400(self, client):
        resp = client.post("/api/v1/generate", content=b"{oops",
                           headers={"Content-Type": "application/json"})
        assert resp.status_code == 400

    def test_bad_base64_400(self, client):
        resp = client.post("/api/v1/generate",
                           json={"model_id": "texture-a", "sketch": "!!!"})
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_image"

    def test_unrecognized_image_bytes_400(self, client):
        resp = client.post("/api/v1/generate",
                           json={"model_id": "texture-a",
                                 "sketch": _b64(b"not an image at all")})
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_image"

    def test_truncated_ppm_400(self, client, painting):
        data = encode_ppm(_sketch_rgb(painting))
        resp = client.post("/api/v1/generate",
                           json={"model_id": "texture-a",
                                 "sketch": _b64(data[:-5])})
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_image"

    def test_mask_dims_mismatch_400(self, client, sketch_payload):
        mask = _b64(encode_ppm(np.zeros((3, 40, 40), dtype=np.float32)))
        resp = client.post("/api/v1/generate",
                           json=self._body(sketch_payload, mask=mask))
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_dims"

    def test_divisibility_422_machine_readable(self, client):
        sketch = _b64(encode_ppm(np.ones((3, 30, 30), dtype=np.float32)))
        resp = client.post("/api/v1/generate",
                           json={"model_id": "texture-a", "sketch": sketch})
        assert resp.status_code == 422
        out = resp.json()
        assert out["error"] == "divisibility"
        assert "divisible by 8" in out["detail"]

    def test_tile_divisibility_422(self, client, sketch_payload):
        body = self._body(sketch_payload,
                          tile={"tile_w": 30, "tile_h": 30})
        resp = client.post("/api/v1/generate", json=body)
        assert resp.status_code == 422
        assert resp.json()["error"] == "divisibility"

    def test_timeout_408(self, client, sketch_payload):
        resp = client.post("/api/v1/generate",
                           json=self._body(sketch_payload, timeout_ms=0))
        assert resp.status_code == 408
        assert resp.json()["error"] == "timeout"

    def test_concurrent_identical_requests(self, client, sketch_payload):
        body = self._body(sketch_payload)

        def post(_):
            return client.post("/api/v1/generate", json=body)

        with ThreadPoolExecutor(max_workers=4) as pool:
            responses = list(pool.map(post, range(4)))
        assert all(r.status_code == 200 for r in responses)
        payloads = {r.json()["image"] for r in responses}
        assert len(payloads) == 1


class TestShuffle:
    def test_shuffle_deterministic(self, client, sketch_payload):
        body = {"sketch": sketch_payload, "grid_n": 4, "seed": 7}
        a = client.post("/api/v1/shuffle", json=body).json()["sketch"]
        b = client.post("/api/v1/shuffle", json=body).json()["sketch"]
        assert a == b
        img = decode_ppm(base64.b64decode(a))
        assert img.shape == (3, 32, 32)

    def test_shuffle_preserves_pixels(self, client, painting, sketch_payload):
        body = {"sketch": sketch_payload, "grid_n": 4, "seed": 7}
        out = decode_ppm(base64.b64decode(
            client.post("/api/v1/shuffle", json=body).json()["sketch"]))
        src = _sketch_rgb(painting)
        assert sorted(out[0].ravel()) == sorted(src[0].ravel())

    def test_shuffle_divisibility_422(self, client, sketch_payload):
        body = {"sketch": sketch_payload, "grid_n": 5, "seed": 0}
        resp = client.post("/api/v1/shuffle", json=body)
        assert resp.status_code == 422
        assert resp.json()["error"] == "divisibility"

    def test_shuffle_missing_grid_400(self, client, sketch_payload):
        resp = client.post("/api/v1/shuffle", json={"sketch": sketch_payload})
        assert resp.status_code == 400


class TestBankBuild:
    def test_build_writes_bank(self, client, painting, registry_dir):
        body = {"painting": _b64(encode_ppm(painting)), "k": 2, "sizes": [8, 16]}
        resp = client.post("/api/v1/bank/build", json=body)
        assert resp.status_code == 200
        out = resp.json()
        assert 1 <= out["k_effective"] <= 2
        assert out["outlier_count"] >= 0
        assert (registry_dir / f"{out['bank_id']}.npbk").exists()

    def test_build_missing_painting_400(self, client):
        resp = client.post("/api/v1/bank/build", json={"k": 2})
        assert resp.status_code == 400
        assert resp.json()["error"] == "malformed_body"

    def test_build_infeasible_400(self, client):
        tiny = _b64(encode_ppm(np.ones((3, 16, 16), dtype=np.float32)))
        with pytest.warns(Warning):
            resp = client.post("/api/v1/bank/build",
                               json={"painting": tiny, "k": 4, "sizes": [32]})
        assert resp.status_code == 400
        assert resp.json()["error"] == "bank_error"
