"""Session-oriented HTTP API powering the interactive explorer.

Each session holds one dataset plus analysis parameters and a monotonically
increasing revision. Mutations (re-clustering, manual clusters, parameter
changes) bump the revision, invalidate cached analysis products, and notify
subscribers on the session's event stream; reads are computed lazily for
the current revision and cached, so repeated fetches are identical.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse

from . import __version__
from .alpha import shared_bins
from .clustering import ClusterParams, add_manual_cluster, dbscan
from .cpca import NumericalError, project
from .dataset import DatasetError, EmbeddedDataset, bundle_to_dataset, load_bundle
from .pipeline import AnalysisParams, analyze_clusters
from ._kernels import bin_counts


@dataclass
class Session:
    id: str
    dataset: EmbeddedDataset
    params: AnalysisParams
    revision: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock)
    cache: dict = field(default_factory=dict)
    subscribers: list = field(default_factory=list)

    def bump(self) -> int:
        self.revision += 1
        self.cache.clear()
        for q in list(self.subscribers):
            q.put(self.revision)
        return self.revision

    def analysis(self):
        """Analysis products for the current revision, computed lazily."""
        key = ("analysis", self.revision)
        if key not in self.cache:
            if self.dataset.labels is None:
                raise HTTPException(409, "no clusters yet; run clustering first")
            try:
                scans, fits, fc, lay = analyze_clusters(self.dataset, self.params)
            except (ValueError, DatasetError) as exc:
                raise HTTPException(409, str(exc))
            except NumericalError as exc:
                raise HTTPException(500, "numerical failure: %s" % exc)
            self.cache[key] = {"scans": scans, "fits": fits, "fc": fc, "layout": lay}
        return self.cache[key]


def _histogram_pair(values: np.ndarray, mask: np.ndarray) -> dict:
    """Shared Scott bins over both groups, per-group relative frequencies."""
    a = np.ascontiguousarray(values[mask])
    b = np.ascontiguousarray(values[~mask])
    start, width, count = shared_bins(a, b)
    ca = bin_counts(a, start, width, count)
    cb = bin_counts(b, start, width, count)
    rel_a = (ca / max(len(a), 1)).tolist()
    rel_b = (cb / max(len(b), 1)).tolist()
    return {
        "bins": {"start": start, "width": width, "count": int(count)},
        "cluster_rel_freq": rel_a,
        "others_rel_freq": rel_b,
        "cluster_counts": ca.tolist(),
        "others_counts": cb.tolist(),
        "y_max": max(max(rel_a), max(rel_b)),
    }


def create_app(data_dir: Optional[str] = None, keepalive: float = 15.0) -> FastAPI:
    app = FastAPI(title="cluster-contrast", version=__version__)
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions

    def get_session(sid: str) -> Session:
        try:
            return sessions[sid]
        except KeyError:
            raise HTTPException(404, "unknown session %r" % sid)

    def params_from(body: dict, base: AnalysisParams) -> AnalysisParams:
        fields = {}
        for name in ("eps", "gamma", "alpha_min", "alpha_max",
                     "filter_features", "filter_points"):
            if body.get(name) is not None:
                fields[name] = float(body[name])
        for name in ("min_pts", "q", "delta", "top_k", "threads"):
            if body.get(name) is not None:
                fields[name] = int(body[name])
        if body.get("agg_mode") is not None:
            if body["agg_mode"] not in ("max_abs", "mean"):
                raise HTTPException(422, "agg_mode must be 'max_abs' or 'mean'")
            fields["agg_mode"] = body["agg_mode"]
        return replace(base, **fields)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/sessions")
    def open_session(body: dict):
        if "bundle" in body:
            try:
                dataset = bundle_to_dataset(body["bundle"])
            except DatasetError as exc:
                raise HTTPException(422, str(exc))
        elif "dataset" in body:
            if data_dir is None:
                raise HTTPException(422, "service started without a dataset directory")
            name = os.path.basename(str(body["dataset"]))
            path = os.path.join(data_dir, name + ".json")
            if not os.path.exists(path):
                raise HTTPException(404, "no bundle named %r" % name)
            dataset = load_bundle(path)
        else:
            raise HTTPException(422, "provide 'bundle' (inline) or 'dataset' (name)")
        params = params_from(body.get("params", {}), AnalysisParams())
        if params.filter_features is not None or params.filter_points is not None:
            from .dataset import filter_dataset

            dataset = filter_dataset(
                dataset,
                1.0 if params.filter_features is None else params.filter_features,
                1.0 if params.filter_points is None else params.filter_points,
            )
        if dataset.table.missing_mask.any():
            dataset = _impute_only(dataset)
        session = Session(id=uuid.uuid4().hex, dataset=dataset, params=params)
        with registry_lock:
            sessions[session.id] = session
        return {
            "session": session.id,
            "revision": session.revision,
            "n_points": dataset.table.n_points,
            "n_features": dataset.table.n_features,
            "features": list(dataset.table.feature_names),
            "labels": None if dataset.labels is None else dataset.labels.tolist(),
            "coords2d": None if dataset.coords2d is None else dataset.coords2d.tolist(),
        }

    @app.post("/sessions/{sid}/clustering")
    def run_clustering(sid: str, body: dict):
        session = get_session(sid)
        with session.lock:
            params = params_from(body, session.params)
            if params.eps is None or params.min_pts is None:
                raise HTTPException(422, "eps and min_pts are required")
            if session.dataset.coords2d is None:
                raise HTTPException(409, "session dataset has no 2D embedding")
            try:
                labels = dbscan(
                    session.dataset.coords2d, ClusterParams(params.eps, params.min_pts)
                )
            except ValueError as exc:
                raise HTTPException(422, str(exc))
            session.params = params
            session.dataset = session.dataset.with_labels(labels)
            revision = session.bump()
            return {"revision": revision, "labels": labels.tolist()}

    @app.post("/sessions/{sid}/params")
    def update_params(sid: str, body: dict):
        session = get_session(sid)
        with session.lock:
            session.params = params_from(body, session.params)
            revision = session.bump()
            return {"revision": revision}

    @app.post("/sessions/{sid}/clusters")
    def add_cluster(sid: str, body: dict):
        session = get_session(sid)
        indices = body.get("points")
        if not indices:
            raise HTTPException(422, "non-empty 'points' list required")
        with session.lock:
            try:
                session.dataset = add_manual_cluster(session.dataset, indices)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
            revision = session.bump()
            return {"revision": revision, "labels": session.dataset.labels.tolist()}

    @app.get("/sessions/{sid}/heatmap")
    def get_heatmap(sid: str):
        session = get_session(sid)
        with session.lock:
            products = session.analysis()
            return {
                "revision": session.revision,
                "fc_matrix": products["fc"].to_json_dict(),
                "layout": products["layout"].to_json_dict(),
            }

    @app.get("/sessions/{sid}/histogram")
    def get_histogram(sid: str, feature: str, cluster: int):
        session = get_session(sid)
        with session.lock:
            ds = session.dataset
            if ds.labels is None or not (ds.labels == cluster).any():
                raise HTTPException(404, "unknown cluster %r" % cluster)
            names = ds.table.feature_names
            if feature in names:
                j = names.index(feature)
            else:
                # aggregated rows resolve to their representative feature
                products = session.analysis()
                match = [g for g in products["layout"].groups
                         if g.label == feature or names[g.representative] == feature]
                if not match:
                    raise HTTPException(404, "unknown feature %r" % feature)
                j = match[0].representative
            pair = _histogram_pair(ds.table.points[:, j], ds.labels == cluster)
            pair["revision"] = session.revision
            pair["feature"] = names[j]
            pair["cluster"] = cluster
            return pair

    @app.get("/sessions/{sid}/clusters/{cid}/summary")
    def get_summary(sid: str, cid: int):
        session = get_session(sid)
        with session.lock:
            ds = session.dataset
            products = session.analysis()
            fc = products["fc"]
            if cid not in fc.cluster_ids:
                raise HTTPException(404, "unknown cluster %r" % cid)
            col = fc.cluster_ids.index(cid)
            values = fc.values[:, col]
            k = session.params.top_k
            order = sorted(range(len(values)), key=lambda j: (-abs(values[j]), j))
            scan = products["scans"][cid]
            fit = products["fits"][cid]
            proj = project(
                ds.table.points, fit.components[:1], ds.table.points.mean(axis=0)
            )[:, 0]
            pair = _histogram_pair(proj, ds.labels == cid)
            return {
                "revision": session.revision,
                "cluster": cid,
                "alpha": scan.chosen_alpha,
                "D": ("inf" if np.isinf(scan.chosen.discrepancy)
                      else scan.chosen.discrepancy),
                "V": scan.chosen.variance,
                "fallback": scan.fallback,
                "projection_histogram": pair,
                "top_features": [
                    {"feature": fc.feature_names[j], "index": j, "fc": float(values[j])}
                    for j in order[:k]
                ],
            }

    @app.get("/sessions/{sid}/events")
    def events(sid: str):
        session = get_session(sid)

        def stream():
            q: queue.Queue = queue.Queue()
            with session.lock:
                session.subscribers.append(q)
                current = session.revision
            try:
                yield "data: %s\n\n" % json.dumps({"revision": current})
                while True:
                    try:
                        revision = q.get(timeout=keepalive)
                        yield "data: %s\n\n" % json.dumps({"revision": revision})
                    except queue.Empty:
                        yield ": keepalive\n\n"
            finally:
                with session.lock:
                    if q in session.subscribers:
                        session.subscribers.remove(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def _impute_only(dataset: EmbeddedDataset) -> EmbeddedDataset:
    from .dataset import impute_mean

    return EmbeddedDataset(
        impute_mean(dataset.table), dataset.coords2d, dataset.labels
    )
