import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cluster_contrast.dataset import dataset_to_bundle, load_bundle
from cluster_contrast.pipeline import AnalysisParams, analyze
from cluster_contrast.service import create_app

from conftest import two_blob_dataset


@pytest.fixture()
def client(fixture_dir):
    return TestClient(create_app(fixture_dir))


def open_blobs(client, seed=31, labeled=True):
    ds = two_blob_dataset(seed=seed)
    if not labeled:
        ds = ds.with_labels(None)
    body = {"bundle": dataset_to_bundle(ds)}
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestSessions:
    def test_health(self, client):
        doc = client.get("/health").json()
        assert doc["status"] == "ok" and "version" in doc

    def test_open_named_wine(self, client):
        doc = client.post("/sessions", json={"dataset": "wine"}).json()
        assert doc["n_points"] == 178
        assert doc["revision"] == 0

    def test_open_without_labels_pending(self, client):
        doc = open_blobs(client, labeled=False)
        assert doc["labels"] is None
        sid = doc["session"]
        resp = client.get("/sessions/%s/heatmap" % sid)
        assert resp.status_code == 409

    def test_distinct_session_ids(self, client):
        a = open_blobs(client)["session"]
        b = open_blobs(client)["session"]
        assert a != b

    def test_unknown_bundle_name(self, client):
        assert client.post("/sessions", json={"dataset": "nope"}).status_code == 404


class TestClustering:
    def test_rerun_same_params_same_labels_new_revision(self, client):
        sid = open_blobs(client, labeled=False)["session"]
        r1 = client.post("/sessions/%s/clustering" % sid,
                         json={"eps": 2.0, "min_pts": 5}).json()
        r2 = client.post("/sessions/%s/clustering" % sid,
                         json={"eps": 2.0, "min_pts": 5}).json()
        assert r1["labels"] == r2["labels"]
        assert r2["revision"] == r1["revision"] + 1

    def test_huge_eps_single_cluster(self, client):
        sid = open_blobs(client, labeled=False)["session"]
        doc = client.post("/sessions/%s/clustering" % sid,
                          json={"eps": 1e9, "min_pts": 2}).json()
        assert set(doc["labels"]) == {0}

    def test_matches_direct_dbscan(self, client):
        from cluster_contrast.clustering import ClusterParams, dbscan

        ds = two_blob_dataset(seed=32)
        body = {"bundle": dataset_to_bundle(ds.with_labels(None))}
        sid = client.post("/sessions", json=body).json()["session"]
        doc = client.post("/sessions/%s/clustering" % sid,
                          json={"eps": 1.8, "min_pts": 4}).json()
        want = dbscan(ds.coords2d, ClusterParams(1.8, 4))
        assert doc["labels"] == want.tolist()

    def test_invalid_params_rejected(self, client):
        sid = open_blobs(client)["session"]
        resp = client.post("/sessions/%s/clustering" % sid,
                           json={"eps": 0.0, "min_pts": 2})
        assert resp.status_code == 422


class TestAddCluster:
    def test_noise_promotion_and_revision(self, client):
        doc = client.post("/sessions", json={"dataset": "wine"}).json()
        sid = doc["session"]
        noise = [i for i, l in enumerate(doc["labels"]) if l == -1][:3]
        before = client.get("/sessions/%s/heatmap" % sid).json()
        resp = client.post("/sessions/%s/clusters" % sid, json={"points": noise}).json()
        assert resp["revision"] == 1
        after = client.get("/sessions/%s/heatmap" % sid).json()
        assert len(after["fc_matrix"]["clusters"]) == \
            len(before["fc_matrix"]["clusters"]) + 1

    def test_empty_selection_rejected(self, client):
        sid = open_blobs(client)["session"]
        assert client.post("/sessions/%s/clusters" % sid,
                           json={"points": []}).status_code == 422


class TestHeatmapAndSummaries:
    def test_wine_heatmap_shape(self, client):
        sid = client.post("/sessions", json={"dataset": "wine"}).json()["session"]
        doc = client.get("/sessions/%s/heatmap" % sid).json()
        assert len(doc["fc_matrix"]["features"]) == 13
        assert len(doc["fc_matrix"]["clusters"]) == 4
        assert doc["fc_matrix"]["clusters"][-1] == -1

    def test_heatmap_bytes_stable_within_revision(self, client):
        sid = open_blobs(client)["session"]
        a = client.get("/sessions/%s/heatmap" % sid)
        b = client.get("/sessions/%s/heatmap" % sid)
        assert a.content == b.content

    def test_crime_aggregated_rows(self, client):
        resp = client.post("/sessions", json={
            "dataset": "crime",
            "params": {"filter_features": 0.8, "filter_points": 1.0},
        })
        sid = resp.json()["session"]
        doc = client.get("/sessions/%s/heatmap" % sid).json()
        assert len(doc["fc_matrix"]["features"]) == 121
        assert len(doc["layout"]["groups"]) == 40

    def test_summary_top_k_and_scores(self, client):
        sid = client.post("/sessions", json={"dataset": "wine"}).json()["session"]
        doc = client.get("/sessions/%s/clusters/1/summary" % sid).json()
        top = [t["feature"] for t in doc["top_features"]]
        assert set(top) == {"Magnesium", "Proline", "Alcohol"}
        assert doc["alpha"] > 0
        assert doc["projection_histogram"]["y_max"] > 0

    def test_summary_all_features_when_k_large(self, client):
        ds = two_blob_dataset(seed=33)
        body = {"bundle": dataset_to_bundle(ds), "params": {"top_k": 5}}
        sid = client.post("/sessions", json=body).json()["session"]
        doc = client.get("/sessions/%s/clusters/0/summary" % sid).json()
        assert len(doc["top_features"]) == 5

    def test_unknown_cluster_404(self, client):
        sid = open_blobs(client)["session"]
        assert client.get("/sessions/%s/clusters/9/summary" % sid).status_code == 404


class TestHistograms:
    def test_relative_frequencies_normalize(self, client):
        ds = two_blob_dataset(seed=34)
        labels = np.zeros(ds.table.n_points, dtype=np.int64)
        labels[-1] = 1  # "others" is a single point
        body = {"bundle": dataset_to_bundle(ds.with_labels(labels))}
        sid = client.post("/sessions", json=body).json()["session"]
        doc = client.get("/sessions/%s/histogram" % sid,
                         params={"feature": "f0", "cluster": 1}).json()
        assert sum(doc["cluster_rel_freq"]) == pytest.approx(1.0)
        assert sum(doc["cluster_counts"]) == 1

    def test_wine_alcohol_green_shifted_right(self, client):
        sid = client.post("/sessions", json={"dataset": "wine"}).json()["session"]
        doc = client.get("/sessions/%s/histogram" % sid,
                         params={"feature": "Alcohol", "cluster": 0}).json()
        start, width = doc["bins"]["start"], doc["bins"]["width"]
        centers = [start + width * (j + 0.5) for j in range(doc["bins"]["count"])]

        def weighted_median(freqs):
            total = sum(freqs)
            acc = 0.0
            for c, f in zip(centers, freqs):
                acc += f
                if acc >= total / 2:
                    return c
            return centers[-1]

        assert weighted_median(doc["cluster_rel_freq"]) > \
            weighted_median(doc["others_rel_freq"])

    def test_matches_independent_binning(self, client):
        import math

        ds = two_blob_dataset(seed=35)
        body = {"bundle": dataset_to_bundle(ds)}
        sid = client.post("/sessions", json=body).json()["session"]
        doc = client.get("/sessions/%s/histogram" % sid,
                         params={"feature": "f2", "cluster": 0}).json()
        start, width, count = (doc["bins"]["start"], doc["bins"]["width"],
                               doc["bins"]["count"])
        values = ds.table.points[:, 2]
        mask = ds.labels == 0
        ref = [0] * count
        for x in values[mask]:
            ref[min(max(math.floor((x - start) / width), 0), count - 1)] += 1
        assert ref == doc["cluster_counts"]
        assert doc["y_max"] == pytest.approx(
            max(max(doc["cluster_rel_freq"]), max(doc["others_rel_freq"])))

    def test_aggregated_group_uses_representative(self, client):
        resp = client.post("/sessions", json={
            "dataset": "crime",
            "params": {"filter_features": 0.8, "filter_points": 1.0},
        })
        sid = resp.json()["session"]
        heat = client.get("/sessions/%s/heatmap" % sid).json()
        multi = [g for g in heat["layout"]["groups"] if len(g["members"]) > 1][0]
        doc = client.get("/sessions/%s/histogram" % sid,
                         params={"feature": multi["label"], "cluster": 0})
        assert doc.status_code == 200
        rep = doc.json()["feature"]
        assert rep in multi["label"]

    def test_unknown_feature_404(self, client):
        sid = open_blobs(client)["session"]
        resp = client.get("/sessions/%s/histogram" % sid,
                          params={"feature": "nope", "cluster": 0})
        assert resp.status_code == 404


@pytest.fixture(scope="module")
def live_server(fixture_dir):
    import socket
    import threading
    import time

    import httpx
    import uvicorn

    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    config = uvicorn.Config(
        create_app(fixture_dir, keepalive=0.2),
        host="127.0.0.1",
        port=port,
        log_level="warning",
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = "http://127.0.0.1:%d" % port
    deadline = time.time() + 20
    while time.time() < deadline:
        try:
            if httpx.get(base + "/health", timeout=1).status_code == 200:
                break
        except httpx.HTTPError:
            time.sleep(0.1)
    else:
        raise RuntimeError("service did not come up")
    yield base
    server.should_exit = True
    thread.join(timeout=10)


class TestEventsAndEquivalence:
    def test_event_stream_pushes_revisions(self, live_server):
        import httpx

        with httpx.Client(base_url=live_server, timeout=10) as http:
            doc = http.post("/sessions", json={"dataset": "wine"}).json()
            sid = doc["session"]
            noise = [i for i, l in enumerate(doc["labels"]) if l == -1][:2]
            with http.stream("GET", "/sessions/%s/events" % sid) as stream:
                assert stream.headers["content-type"].startswith("text/event-stream")
                lines = stream.iter_lines()
                first = next(l for l in lines if l.startswith("data:"))
                assert json.loads(first[5:])["revision"] == 0
                resp = http.post("/sessions/%s/clusters" % sid,
                                 json={"points": noise})
                assert resp.json()["revision"] == 1
                pushed = next(l for l in lines if l.startswith("data:"))
                assert json.loads(pushed[5:])["revision"] == 1

    def test_mutations_push_to_subscribers(self, client):
        import queue

        doc = client.post("/sessions", json={"dataset": "wine"}).json()
        sid = doc["session"]
        app_sessions = client.app.state.sessions
        q = queue.Queue()
        app_sessions[sid].subscribers.append(q)
        noise = [i for i, l in enumerate(doc["labels"]) if l == -1][:2]
        client.post("/sessions/%s/clusters" % sid, json={"points": noise})
        assert q.get(timeout=2) == 1
        client.post("/sessions/%s/params" % sid, json={"top_k": 5})
        assert q.get(timeout=2) == 2

    def test_api_matches_cli_pipeline(self, client, fixture_dir):
        ds = load_bundle(fixture_dir + "/wine.json")
        res = analyze(ds, AnalysisParams())
        want = res.to_json_dict()
        sid = client.post("/sessions", json={"dataset": "wine"}).json()["session"]
        got = client.get("/sessions/%s/heatmap" % sid).json()
        assert got["fc_matrix"] == json.loads(json.dumps(want["fc_matrix"]))
        assert got["layout"]["row_order"] == want["layout"]["row_order"]
        assert got["layout"]["col_order"] == want["layout"]["col_order"]
        assert got["layout"]["groups"] == json.loads(
            json.dumps(want["layout"]["groups"]))
        for cid in res.fc_matrix.cluster_ids:
            summary = client.get(
                "/sessions/%s/clusters/%d/summary" % (sid, cid)).json()
            assert summary["alpha"] == res.scans[cid].chosen_alpha
            assert [t["feature"] for t in summary["top_features"]] == \
                [t["feature"] for t in res.top_features(cid)]
