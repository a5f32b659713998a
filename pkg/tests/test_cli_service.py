"""CLI subcommands and the HTTP service, including their byte parity."""

import base64
import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from pdas.cli import main
from pdas.inference.rle import rle_decode, rle_from_base64
from pdas.inference.sliding import interactive_predict
from pdas.model.config import ModelConfig
from pdas.model.network import PromptSegModel
from pdas.service.app import create_app

TINY = ModelConfig(
    image_crop=16,
    patch_size=8,
    embed_dim=16,
    num_heads=1,
    encoder_depth=1,
    decoder_depth=2,
    mlp_ratio=2,
    projector_dim=8,
)


@pytest.fixture(scope="module")
def tiny_model():
    return PromptSegModel.init(TINY, seed=9)


@pytest.fixture(scope="module")
def tiny_checkpoint(tiny_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "tiny.ckpt"
    tiny_model.save(path, step=5)
    return path


@pytest.fixture()
def catalog():
    rng = np.random.default_rng(4)
    return {
        "demo-0000": ("source", rng.uniform(0.2, 0.8, size=(24, 24))),
        "demo-0001": ("target", rng.uniform(0.2, 0.8, size=(16, 32))),
    }


def _client(tiny_model, catalog):
    return TestClient(create_app(model=tiny_model, images=catalog))


# --- service ----------------------------------------------------------------------


def test_health_reports_model(tiny_model, catalog):
    client = _client(tiny_model, catalog)
    body = client.get("/v1/health").json()
    assert body["status"] == "ok"
    assert body["n_params"] == len(tiny_model.params)


def test_health_without_model_is_503(catalog):
    client = TestClient(create_app(images=catalog))
    r = client.get("/v1/health")
    assert r.status_code == 503
    assert "error" in r.json()


def test_image_catalog_roundtrip(tiny_model, catalog):
    client = _client(tiny_model, catalog)
    listing = client.get("/v1/images").json()["images"]
    assert [e["id"] for e in listing] == ["demo-0000", "demo-0001"]
    assert listing[1]["shape"] == [16, 32]

    payload = client.get("/v1/images/demo-0001").json()
    raw = base64.b64decode(payload["png"])
    img = np.asarray(Image.open(io.BytesIO(raw)))
    assert img.shape == (16, 32)

    assert client.get("/v1/images/nope").status_code == 404


def test_segment_by_image_id(tiny_model, catalog):
    client = _client(tiny_model, catalog)
    r = client.post(
        "/v1/segment",
        json={"image_id": "demo-0000", "points": [{"row": 5, "col": 7}]},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["shape"] == [24, 24]
    mask = rle_decode(rle_from_base64(body["mask"]), (24, 24))
    expected = interactive_predict(tiny_model, catalog["demo-0000"][1], [(5, 7)])
    assert np.array_equal(mask, expected.mask)
    assert body["instance_count"] == int(expected.instances.max())
    assert body["latency_ms"] > 0


def test_segment_png_format_matches_rle(tiny_model, catalog):
    client = _client(tiny_model, catalog)
    req = {"image_id": "demo-0000", "points": []}
    rle_body = client.post("/v1/segment", json={**req, "format": "rle"}).json()
    png_body = client.post("/v1/segment", json={**req, "format": "png"}).json()
    from_rle = rle_decode(rle_from_base64(rle_body["mask"]), (24, 24))
    raw = base64.b64decode(png_body["mask"])
    from_png = (np.asarray(Image.open(io.BytesIO(raw))) > 0).astype(from_rle.dtype)
    assert np.array_equal(from_rle, from_png)


def test_segment_accepts_inline_png(tiny_model, catalog):
    client = _client(tiny_model, catalog)
    image = catalog["demo-0001"][1]
    img8 = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(img8, mode="L").save(buf, format="PNG")
    b64 = base64.b64encode(buf.getvalue()).decode("ascii")
    r = client.post("/v1/segment", json={"image": b64, "points": []})
    assert r.status_code == 200
    assert r.json()["shape"] == [16, 32]


def test_segment_error_codes(tiny_model, catalog):
    client = _client(tiny_model, catalog)
    post = lambda body: client.post("/v1/segment", json=body)  # noqa: E731

    assert post({"points": []}).status_code == 400  # neither image nor id
    assert post({"image": "aGk=", "image_id": "demo-0000"}).status_code == 400  # both
    assert post({"image_id": "missing"}).status_code == 404
    assert post({"image": "!!!not-png!!!"}).status_code == 400
    # out-of-bounds prompt
    r = post({"image_id": "demo-0000", "points": [{"row": 99, "col": 0}]})
    assert r.status_code == 400
    # image smaller than the model window
    small = {"small": ("source", np.zeros((8, 8)))}
    tiny_client = TestClient(create_app(model=PromptSegModel.init(TINY, 0), images=small))
    assert tiny_client.post("/v1/segment", json={"image_id": "small"}).status_code == 400
    # oversized image
    big = {"big": ("source", np.zeros((1025, 16)))}
    big_client = TestClient(create_app(model=PromptSegModel.init(TINY, 0), images=big))
    assert big_client.post("/v1/segment", json={"image_id": "big"}).status_code == 413
    # no model loaded
    bare = TestClient(create_app(images=catalog))
    assert bare.post("/v1/segment", json={"image_id": "demo-0000"}).status_code == 503


# --- CLI --------------------------------------------------------------------------


def test_cli_gen_train_eval_pipeline(tmp_path, capsys):
    train_dir = tmp_path / "train"
    val_dir = tmp_path / "val"
    run_dir = tmp_path / "run"
    assert main([
        "gen-data", "--domain", "source", "--n", "3", "--out", str(train_dir),
    ]) == 0
    assert main([
        "gen-data", "--domain", "source", "--split", "val", "--n", "2",
        "--out", str(val_dir),
    ]) == 0
    capsys.readouterr()

    assert main([
        "train", "--source-data", str(train_dir), "--iterations", "2",
        "--batch-size", "1", "--out", str(run_dir),
    ]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["mode"] == "supervised"
    assert (run_dir / "final_student.ckpt").exists()
    assert (run_dir / "trace.csv").exists()

    assert main([
        "eval", "--checkpoint", str(run_dir / "final_student.ckpt"),
        "--data", str(val_dir), "--out", str(tmp_path / "report.json"),
    ]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report["mean"]) == {"dice", "aji", "pq", "sq", "rq"}
    assert len(report["per_image"]) == 2


def test_cli_train_rejects_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "nonsense"}))
    rc = main([
        "train", "--source-data", str(tmp_path), "--config", str(cfg),
        "--out", str(tmp_path / "run"),
    ])
    assert rc == 1
    assert "error" in json.loads(capsys.readouterr().err)


def test_cli_predict_matches_service(tiny_checkpoint, tmp_path, capsys):
    rng = np.random.default_rng(11)
    image = rng.uniform(0.0, 1.0, size=(24, 24))
    img8 = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    png_path = tmp_path / "img.png"
    Image.fromarray(img8, mode="L").save(png_path)

    assert main([
        "predict", "--checkpoint", str(tiny_checkpoint),
        "--image", str(png_path), "--point", "3,4", "--point", "10,12",
    ]) == 0
    cli_body = json.loads(capsys.readouterr().out)

    with open(png_path, "rb") as fh:
        b64 = base64.b64encode(fh.read()).decode("ascii")
    client = TestClient(create_app(checkpoint=tiny_checkpoint, images={}))
    srv_body = client.post(
        "/v1/segment",
        json={"image": b64, "points": [{"row": 3, "col": 4}, {"row": 10, "col": 12}]},
    ).json()

    assert cli_body["mask"] == srv_body["mask"]  # byte-identical RLE
    assert cli_body["shape"] == srv_body["shape"]
    assert cli_body["instance_count"] == srv_body["instance_count"]


def test_cli_predict_rejects_malformed_point(tiny_checkpoint, tmp_path, capsys):
    png_path = tmp_path / "img.png"
    Image.fromarray(np.zeros((16, 16), dtype=np.uint8), mode="L").save(png_path)
    rc = main([
        "predict", "--checkpoint", str(tiny_checkpoint),
        "--image", str(png_path), "--point", "oops",
    ])
    assert rc == 1
    assert "error" in json.loads(capsys.readouterr().err)


def test_cli_gradcheck_passes(capsys):
    assert main(["gradcheck", "--seeds", "1"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["max_relative_error"] < body["tolerance"]
