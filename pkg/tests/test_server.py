import base64
import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from facegen.pngcodec import decode_png
from facegen.server import FaceGenService, make_server
from facegen.sessions import SessionStore


@pytest.fixture()
def service(small_model, embedder, toy_generator, tmp_path):
    return FaceGenService(
        small_model, embedder, toy_generator, session_store=SessionStore(tmp_path / "sessions")
    )


@pytest.fixture()
def server(service):
    httpd = make_server(service, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base
    httpd.shutdown()


def _request(base, method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(base + path, data=data, method=method)
    if data is not None:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


def test_health(server):
    status, body = _request(server, "GET", "/api/health")
    assert status == 200
    assert body["status"] == "ok"
    assert body["embedder"]["dimension"] == 64
    assert body["embedder"]["deterministic"] is True


def test_lexicon_endpoint(server):
    status, body = _request(server, "GET", "/api/lexicon")
    assert status == 200
    assert {c["name"] for c in body["channels"]} >= {"gender", "hair_color", "expression"}
    assert any(e["phrase"] == "old man" for e in body["entries"])


def test_generate_endpoint(server):
    status, body = _request(server, "POST", "/api/generate", {"text": "a sad old woman with long white hair"})
    assert status == 200
    assert set(body) == {"latent_id", "latent", "image_png_b64", "attributes", "match"}
    assert len(body["latent"]) == 512
    img = decode_png(base64.b64decode(body["image_png_b64"]))
    assert (img.width, img.height) == (64, 64)


def test_generate_empty_description(server):
    status, body = _request(server, "POST", "/api/generate", {"text": "the of and"})
    assert status == 400
    assert body["error"] == "empty-description"


def test_variants_endpoint_with_latent_id(server):
    _, gen = _request(server, "POST", "/api/generate", {"text": "a boy with short dark hair"})
    status, body = _request(
        server, "POST", "/api/variants",
        {"latent_id": gen["latent_id"], "k": 3, "sigma": 0.05, "noise_seed": 8},
    )
    assert status == 200
    assert len(body["variants"]) == 3
    base = np.array(gen["latent"])
    for v in body["variants"]:
        assert len(v["latent"]) == 512
        assert not np.array_equal(np.array(v["latent"]), base)


def test_variants_endpoint_invalid(server):
    status, body = _request(server, "POST", "/api/variants", {"latent": [0.0] * 512, "k": 0})
    assert status == 400 and body["error"] == "invalid-request"
    status, body = _request(server, "POST", "/api/variants", {"latent_id": "bogus", "k": 2})
    assert status == 400 and body["error"] == "invalid-request"
    status, body = _request(server, "POST", "/api/variants", {"k": 2})
    assert status == 400 and body["error"] == "invalid-request"


def test_session_lifecycle(server):
    status, created = _request(server, "POST", "/api/sessions")
    assert status == 201
    sid = created["session_id"]

    status, step = _request(
        server, "POST", f"/api/sessions/{sid}/steps",
        {"text": "a young man with short dark hair", "k": 4, "sigma": 0.1, "noise_seed": 5},
    )
    assert status == 201
    assert step["index"] == 0
    assert len(step["variants"]) == 4
    assert len(step["variant_images"]) == 4

    status, sel = _request(server, "POST", f"/api/sessions/{sid}/steps/0/select", {"variant_index": 2})
    assert status == 200 and sel["selected"] == 2

    status, state = _request(server, "GET", f"/api/sessions/{sid}")
    assert status == 200
    assert state["steps"][0]["selected"] == 2
    assert state["status"] == "active"

    # refine: blend toward the new description with alpha 0.5
    status, step2 = _request(
        server, "POST", f"/api/sessions/{sid}/steps",
        {"text": "an old man with short grey hair", "alpha": 0.5, "k": 2, "sigma": 0.1, "noise_seed": 6},
    )
    assert status == 201 and step2["index"] == 1 and step2["alpha"] == 0.5

    status, _ = _request(server, "POST", f"/api/sessions/{sid}/close")
    assert status == 200
    status, body = _request(server, "POST", f"/api/sessions/{sid}/steps", {"text": "a boy"})
    assert status == 400 and body["error"] == "session-closed"


def test_session_errors(server):
    status, body = _request(server, "GET", "/api/sessions/doesnotexist")
    assert status == 404 and body["error"] == "not-found"

    _, created = _request(server, "POST", "/api/sessions")
    sid = created["session_id"]
    _request(server, "POST", f"/api/sessions/{sid}/steps", {"text": "a girl with blonde hair", "k": 2})
    status, body = _request(server, "POST", f"/api/sessions/{sid}/steps/0/select", {"variant_index": 9})
    assert status == 400 and body["error"] == "invalid-selection"
    status, body = _request(server, "POST", f"/api/sessions/{sid}/steps", {"text": "of the and"})
    assert status == 400 and body["error"] == "empty-description"


def test_session_first_step_alpha_forced_to_one(server):
    _, created = _request(server, "POST", "/api/sessions")
    sid = created["session_id"]
    _, gen = _request(server, "POST", "/api/generate", {"text": "a girl with blonde hair"})
    _, step = _request(
        server, "POST", f"/api/sessions/{sid}/steps",
        {"text": "a girl with blonde hair", "alpha": 0.25, "k": 2, "sigma": 0.0, "noise_seed": 1},
    )
    assert step["alpha"] == 1.0  # no prior selection to blend with
    assert np.allclose(step["base"], gen["latent"])


def test_replay_after_restart(small_model, embedder, toy_generator, tmp_path):
    sessions_dir = tmp_path / "sessions"
    service = FaceGenService(small_model, embedder, toy_generator, SessionStore(sessions_dir))
    httpd = make_server(service, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    _, created = _request(base, "POST", "/api/sessions")
    sid = created["session_id"]
    _request(base, "POST", f"/api/sessions/{sid}/steps", {"text": "a boy with short dark hair", "k": 2, "noise_seed": 3})
    _request(base, "POST", f"/api/sessions/{sid}/steps/0/select", {"variant_index": 1})
    _, before = _request(base, "GET", f"/api/sessions/{sid}")
    httpd.shutdown()

    # restart: fresh service over the same sessions directory
    service2 = FaceGenService(small_model, embedder, toy_generator, SessionStore(sessions_dir))
    httpd2 = make_server(service2, port=0)
    thread2 = threading.Thread(target=httpd2.serve_forever, daemon=True)
    thread2.start()
    base2 = f"http://127.0.0.1:{httpd2.server_address[1]}"
    _, after = _request(base2, "GET", f"/api/sessions/{sid}")
    httpd2.shutdown()
    assert before == after


def test_unknown_route(server):
    status, body = _request(server, "GET", "/api/nope")
    assert status == 404


def test_static_ui_serving(small_model, embedder, toy_generator, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>facegen</body></html>")
    service = FaceGenService(small_model, embedder, toy_generator)
    httpd = make_server(service, port=0, ui_dir=ui)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    with urllib.request.urlopen(base + "/", timeout=10) as resp:
        assert resp.status == 200
        assert b"facegen" in resp.read()
    status, _ = _request(base, "GET", "/api/health")
    assert status == 200
    httpd.shutdown()
