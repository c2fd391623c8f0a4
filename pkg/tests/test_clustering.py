import numpy as np
import pytest

from cluster_contrast.clustering import ClusterParams, add_manual_cluster, dbscan

from conftest import make_dataset


def naive_dbscan(coords, eps, min_pts):
    """Literal reference: ascending-index seeds, push-time labeling."""
    coords = np.asarray(coords, float)
    n = len(coords)
    eps2 = eps * eps

    def region(p):
        out = []
        for j in range(n):
            diff = coords[p] - coords[j]
            if float(diff @ diff) <= eps2:
                out.append(j)
        return out

    labels = [None] * n
    cid = 0
    for seed in range(n):
        if labels[seed] is not None:
            continue
        hood = region(seed)
        if len(hood) < min_pts:
            labels[seed] = -1
            continue
        labels[seed] = cid
        queue = []
        for u in hood:
            if labels[u] is None:
                labels[u] = cid
                queue.append(u)
            elif labels[u] == -1:
                labels[u] = cid
        head = 0
        while head < len(queue):
            p = queue[head]
            head += 1
            hood = region(p)
            if len(hood) < min_pts:
                continue
            for u in hood:
                if labels[u] is None:
                    labels[u] = cid
                    queue.append(u)
                elif labels[u] == -1:
                    labels[u] = cid
        cid += 1
    return np.array(labels)


def random_config(rng):
    n_blobs = int(rng.integers(1, 5))
    chunks = []
    for _ in range(n_blobs):
        size = int(rng.integers(20, 120))
        center = rng.uniform(-20, 20, size=2)
        chunks.append(center + rng.normal(0, rng.uniform(0.3, 1.2), size=(size, 2)))
    chunks.append(rng.uniform(-25, 25, size=(int(rng.integers(3, 15)), 2)))
    coords = np.vstack(chunks)
    rng.shuffle(coords)
    eps = float(rng.uniform(0.5, 2.5))
    min_pts = int(rng.integers(2, 10))
    return coords, eps, min_pts


def partition_of(labels):
    groups = {}
    for i, l in enumerate(labels.tolist()):
        groups.setdefault(l, set()).add(i)
    noise = groups.pop(-1, set())
    return noise, sorted(map(frozenset, groups.values()), key=sorted)


class TestDbscan:
    def test_identical_points_single_cluster(self):
        coords = np.zeros((6, 2))
        labels = dbscan(coords, ClusterParams(0.5, 3))
        assert set(labels.tolist()) == {0}

    def test_isolated_point_is_noise(self):
        labels = dbscan(np.array([[0.0, 0.0]]), ClusterParams(1.0, 2))
        assert labels.tolist() == [-1]

    def test_two_blobs_with_outliers(self):
        rng = np.random.default_rng(0)
        coords = np.vstack([
            rng.normal(0, 0.5, size=(60, 2)),
            rng.normal(10, 0.5, size=(60, 2)),
            rng.uniform(-30, 40, size=(5, 2)),
        ])
        params = ClusterParams(1.5, 5)
        labels = dbscan(coords, params)
        assert labels.max() == 1
        assert np.array_equal(labels, naive_dbscan(coords, 1.5, 5))

    def test_matches_reference_on_random_configs(self):
        rng = np.random.default_rng(1)
        for _ in range(15):
            coords, eps, min_pts = random_config(rng)
            got = dbscan(coords, ClusterParams(eps, min_pts))
            want = naive_dbscan(coords, eps, min_pts)
            assert np.array_equal(got, want)

    def test_reorder_invariance_up_to_relabeling(self):
        rng = np.random.default_rng(2)
        coords, eps, min_pts = random_config(rng)
        perm = rng.permutation(len(coords))
        a = dbscan(coords, ClusterParams(eps, min_pts))
        b = dbscan(coords[perm], ClusterParams(eps, min_pts))
        b_unperm = np.empty_like(b)
        b_unperm[perm] = b
        assert partition_of(a) == partition_of(b_unperm)

    def test_every_cluster_has_core_point(self):
        rng = np.random.default_rng(3)
        coords, eps, min_pts = random_config(rng)
        labels = dbscan(coords, ClusterParams(eps, min_pts))
        d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1)
        core = (d2 <= eps * eps).sum(1) >= min_pts
        for cid in range(labels.max() + 1):
            assert core[labels == cid].any()

    def test_param_validation(self):
        with pytest.raises(ValueError):
            ClusterParams(0.0, 3)
        with pytest.raises(ValueError):
            ClusterParams(1.0, 0)


class TestAddManualCluster:
    def base(self):
        rng = np.random.default_rng(4)
        return make_dataset(
            rng.normal(size=(10, 3)),
            labels=[-1, -1, -1, 0, 0, 0, 1, 1, 1, 1],
            coords=rng.normal(size=(10, 2)),
        )

    def test_promote_noise_points(self):
        ds = add_manual_cluster(self.base(), [0, 1, 2])
        assert (ds.labels == 2).sum() == 3
        assert (ds.labels == -1).sum() == 0

    def test_split_existing_clusters(self):
        ds = add_manual_cluster(self.base(), [3, 6])
        assert ds.labels[3] == ds.labels[6] == 2
        assert (ds.labels == 0).sum() == 2
        assert (ds.labels == 1).sum() == 3

    def test_emptied_cluster_compacts_labels(self):
        ds = add_manual_cluster(self.base(), [3, 4, 5, 6])
        # old cluster 0 is gone; labels must stay gapless
        assert sorted(set(ds.labels.tolist())) == [-1, 0, 1]

    def test_preserves_points_and_embedding(self):
        base = self.base()
        ds = add_manual_cluster(base, [0])
        assert np.array_equal(ds.table.points, base.table.points)
        assert np.array_equal(ds.coords2d, base.coords2d)

    def test_empty_selection_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            add_manual_cluster(self.base(), [])
