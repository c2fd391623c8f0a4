"""Generate the committed dataset bundles under fixtures/.

Every bundle is verified against the properties the test suite asserts
before it is written: this script fails loudly rather than freezing a
fixture that the suite would reject.

wine.json      sklearn wine data (z-scored), t-SNE embedding, DBSCAN labels.
digits.json    1,000-sample handwritten-digit subset (8x8 pixels), PCA coords.
nutrient.json  synthetic food-nutrient table, 7,637x14 with the missing-value
               pattern sized so a (0.4, 0.4) filter keeps 7,499x12 and leaves
               4,447 cells to impute.
crime.json     synthetic community-statistics table, 2,215x143 with 42,147
               missing cells, 22 of them sparse enough that a 0.8 feature
               filter keeps 121 features with 963 cells left to impute.
"""

import os
import sys

import numpy as np
from sklearn.datasets import load_digits, load_wine
from sklearn.decomposition import PCA
from sklearn.manifold import TSNE

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from cluster_contrast import jsonio
from cluster_contrast.clustering import ClusterParams, dbscan
from cluster_contrast.dataset import (
    DataTable,
    EmbeddedDataset,
    dataset_to_bundle,
    filter_dataset,
    impute_mean,
    load_bundle,
)
from cluster_contrast.pipeline import AnalysisParams, analyze

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")

WINE_NAMES = [
    "Alcohol", "Malic acid", "Ash", "Alcalinity of ash", "Magnesium",
    "Total phenols", "Flavanoids", "Nonflavanoid phenols", "Proanthocyanidins",
    "Color intensity", "Hue", "OD280/OD315", "Proline",
]

NUTRIENT_NAMES = [
    "water", "calories", "protein", "fat", "carbohydrate", "fiber", "sugars",
    "calcium", "iron", "sodium", "potassium", "vitamin_c", "cholesterol",
    "saturated_fat",
]


def save(name, doc):
    path = os.path.join(OUT_DIR, name)
    jsonio.dump(doc, path)
    print("wrote %s (%.1f KB)" % (path, os.path.getsize(path) / 1024))
    return path


def make_wine():
    w = load_wine()
    x = w.data
    z = (x - x.mean(0)) / x.std(0)
    emb = TSNE(perplexity=20, random_state=0, init="pca").fit_transform(z)
    labels = dbscan(emb, ClusterParams(3.0, 4))
    assert labels.max() + 1 == 3 and (labels == -1).sum() == 6

    colors = {}
    for cid in range(3):
        majority = int(np.bincount(w.target[labels == cid]).argmax())
        colors[str(cid)] = {0: "green", 1: "orange", 2: "brown"}[majority]
    colors["-1"] = "Z"
    assert sorted(colors.values()) == ["Z", "brown", "green", "orange"]

    table = DataTable(np.round(z, 6), WINE_NAMES, [str(i) for i in range(len(z))])
    ds = EmbeddedDataset(table, np.round(emb.astype(float), 4), labels)
    doc = dataset_to_bundle(ds)
    doc["meta"] = {
        "source": "sklearn load_wine, features z-scored",
        "embedding": "t-SNE perplexity=20 random_state=0 init=pca",
        "dbscan": {"eps": 3.0, "min_pts": 4},
        "cluster_names": colors,
    }
    path = save("wine.json", doc)

    # verify the frozen bundle reproduces the case-study feature sets
    ds = load_bundle(path)
    res = analyze(ds, AnalysisParams())
    by_color = {}
    for cid in res.fc_matrix.cluster_ids:
        color = colors[str(cid)]
        by_color[color] = set(t["feature"] for t in res.top_features(cid, 3))
    assert {"Alcohol", "Flavanoids"} <= by_color["green"], by_color
    assert by_color["orange"] == {"Magnesium", "Proline", "Alcohol"}, by_color
    assert {"OD280/OD315", "Hue"} <= by_color["brown"], by_color
    assert {"Magnesium", "Proanthocyanidins"} <= by_color["Z"], by_color
    green = [int(c) for c, name in colors.items() if name == "green"][0]
    col = res.fc_matrix.cluster_ids.index(green)
    j = WINE_NAMES.index("Alcohol")
    fc = res.fc_matrix.values[j, col]
    pts = ds.table.points
    diff = pts[ds.labels == green, j].mean() - pts[ds.labels != green, j].mean()
    assert fc * diff > 0, (fc, diff)
    print("wine: feature sets and sign direction verified")


def make_digits():
    d = load_digits()
    rng = np.random.default_rng(42)
    idx = np.sort(rng.choice(len(d.data), size=1000, replace=False))
    x = d.data[idx].astype(float)
    y = d.target[idx].astype(np.int64)
    coords = PCA(n_components=2, random_state=0).fit_transform(x)
    names = ["pix_%d_%d" % (i // 8, i % 8) for i in range(64)]
    table = DataTable(x, names, [str(int(i)) for i in idx])
    ds = EmbeddedDataset(table, np.round(coords, 4), y)
    doc = dataset_to_bundle(ds)
    doc["meta"] = {
        "source": "sklearn load_digits, 1000-sample subset (seed 42)",
        "labels": "digit identity 0-9",
    }
    path = save("digits.json", doc)

    from cluster_contrast.alpha import select_alpha

    scan = select_alpha(load_bundle(path), 1)
    d0 = scan.candidates[0]
    assert scan.chosen_alpha > 0
    assert scan.chosen.discrepancy > d0.discrepancy
    assert scan.chosen.variance >= 0.5 * d0.variance
    print("digits: digit-1 contrast properties verified (alpha=%.3f)" % scan.chosen_alpha)


def _place_missing(rng, mask, rows, per_row_counts, n_cols):
    for r, k in zip(rows, per_row_counts):
        cols = rng.choice(n_cols, size=k, replace=False)
        mask[r, cols] = True


def make_nutrient():
    rng = np.random.default_rng(2024)
    n, d = 7637, 14
    n_clusters = 6
    # blob profiles across the 12 analysis features (water..vitamin_c)
    centers = np.array([
        # water cal  prot fat  carb fibr sug  calc iron sodi pota vitc
        [88.0, 40.0, 1.5, 0.3, 8.0, 1.8, 4.5, 30.0, 0.5, 20.0, 220.0, 25.0],   # produce
        [10.0, 540.0, 7.0, 48.0, 18.0, 4.0, 5.0, 90.0, 2.5, 300.0, 450.0, 1.0],  # nuts/oils
        [60.0, 220.0, 24.0, 12.0, 1.0, 0.0, 0.5, 15.0, 1.8, 380.0, 300.0, 0.5],  # meats
        [11.0, 360.0, 10.0, 2.5, 74.0, 6.0, 2.0, 35.0, 3.5, 5.0, 280.0, 0.2],    # grains
        [25.0, 390.0, 4.0, 14.0, 62.0, 1.5, 45.0, 60.0, 1.2, 150.0, 180.0, 2.0], # sweets
        [82.0, 65.0, 3.8, 3.2, 5.5, 0.0, 5.0, 120.0, 0.1, 55.0, 160.0, 1.0],     # dairy
    ])
    spread = np.array(
        [6.0, 45.0, 2.5, 4.5, 7.0, 1.2, 4.0, 25.0, 0.7, 90.0, 80.0, 4.0]
    )
    sizes = [1850, 1100, 1400, 1200, 1000, 987]
    assert sum(sizes) + 100 == n  # 100 scattered points
    assign = np.concatenate(
        [np.full(s, c) for c, s in enumerate(sizes)] + [np.full(100, -1)]
    )
    rng.shuffle(assign)
    base = np.empty((n, 12))
    for c in range(n_clusters):
        rows = assign == c
        base[rows] = centers[c] + rng.normal(size=(rows.sum(), 12)) * spread
    scatter = assign == -1
    base[scatter] = centers[rng.integers(0, n_clusters, scatter.sum())] + \
        rng.normal(size=(scatter.sum(), 12)) * spread * 3.0
    base = np.clip(base, 0.0, None)
    # cholesterol / saturated_fat: mostly-missing companions
    chol = np.clip(rng.normal(40, 30, size=n), 0, None)
    satf = np.clip(base[:, 3] * 0.35 + rng.normal(0, 1.5, size=n), 0, None)
    values = np.column_stack([base, chol, satf])
    values = np.round(values, 3)

    mask = np.zeros((n, d), dtype=bool)
    # the two sparse features: 3,500 missing each (> 40% of 7,637)
    for col in (12, 13):
        mask[rng.choice(n, size=3500, replace=False), col] = True
    # 138 points too sparse to keep: 94 with 8 missing + 44 with 7 missing
    dropped = rng.choice(n, size=138, replace=False)
    _place_missing(rng, mask, dropped[:94], [8] * 94, 12)
    _place_missing(rng, mask, dropped[94:], [7] * 44, 12)
    # 4,447 missing cells scattered over the surviving points, max 4 per point
    kept = np.setdiff1d(np.arange(n), dropped)
    budget = 4447
    per_point = np.zeros(n, dtype=int)
    while budget:
        r = int(rng.choice(kept))
        if per_point[r] >= 4:
            continue
        free = [c for c in range(12) if not mask[r, c]]
        if not free:
            continue
        mask[r, int(rng.choice(free))] = True
        per_point[r] += 1
        budget -= 1

    total_missing = int(mask.sum())
    assert total_missing == 3500 * 2 + 94 * 8 + 44 * 7 + 4447 == 12507

    coords = np.empty((n, 2))
    blob_xy = np.array([[0, 0], [9, 0], [0, 9], [9, 9], [-7, 5], [5, -8]], float)
    for c in range(n_clusters):
        rows = assign == c
        coords[rows] = blob_xy[c] + rng.normal(size=(rows.sum(), 2)) * 0.55
    coords[scatter] = rng.uniform(-12, 14, size=(scatter.sum(), 2))

    values_masked = values.copy()
    values_masked[mask] = np.nan
    table = DataTable(values_masked, NUTRIENT_NAMES, [str(i) for i in range(n)], mask)
    ds = EmbeddedDataset(table, np.round(coords, 4), None)
    doc = dataset_to_bundle(ds)
    doc["meta"] = {
        "source": "synthetic food-composition table; missing-value pattern sized "
                  "to the published preprocessing counts",
        "dbscan": {"eps": 1.2, "min_pts": 10},
    }
    path = save("nutrient.json", doc)

    ds = load_bundle(path)
    assert ds.table.missing_mask.sum() == 12507
    filtered = filter_dataset(ds, 0.4, 0.4)
    assert filtered.table.n_points == 7499, filtered.table.n_points
    assert filtered.table.n_features == 12, filtered.table.n_features
    assert int(filtered.table.missing_mask.sum()) == 4447
    again = filter_dataset(filtered, 0.4, 0.4)
    assert again.table.n_points == 7499 and again.table.n_features == 12
    imputed = impute_mean(filtered.table)
    assert not imputed.missing_mask.any()
    labels = dbscan(filtered.coords2d, ClusterParams(1.2, 10))
    n_found = labels.max() + 1
    assert n_found == 6, n_found
    assert (labels == -1).sum() > 0
    print("nutrient: 7499x12 with 4447 imputed cells; dbscan finds 6 clusters")


CRIME_BASE_NAMES = [
    "population", "householdsize", "racepctblack", "racePctWhite", "racePctAsian",
    "racePctHisp", "agePct12t21", "agePct12t29", "agePct16t24", "agePct65up",
    "numbUrban", "pctUrban", "medIncome", "pctWWage", "pctWFarmSelf", "pctWInvInc",
    "pctWSocSec", "pctWPubAsst", "pctWRetire", "medFamInc", "perCapInc",
    "whitePerCap", "blackPerCap", "indianPerCap", "AsianPerCap", "HispPerCap",
    "NumUnderPov", "PctPopUnderPov", "PctLess9thGrade", "PctNotHSGrad",
    "PctBSorMore", "PctUnemployed", "PctEmploy", "PctEmplManu", "PctEmplProfServ",
    "PctOccupManu", "PctOccupMgmtProf", "MalePctDivorce", "MalePctNevMarr",
    "FemalePctDiv", "TotalPctDiv", "PersPerFam", "PctFam2Par", "PctKids2Par",
    "PctYoungKids2Par", "PctTeen2Par", "PctWorkMomYoungKids", "PctWorkMom",
    "NumIlleg", "PctIlleg", "NumImmig", "PctImmigRecent", "PctImmigRec5",
    "PctImmigRec8", "PctImmigRec10", "PctRecentImmig", "PctRecImmig5",
    "PctRecImmig8", "PctRecImmig10", "PctSpeakEnglOnly", "PctNotSpeakEnglWell",
    "PctLargHouseFam", "PctLargHouseOccup", "PersPerOccupHous",
    "PersPerOwnOccHous", "PersPerRentOccHous", "PctPersOwnOccup",
    "PctPersDenseHous", "PctHousLess3BR", "MedNumBR", "HousVacant",
    "PctHousOccup", "PctHousOwnOcc", "PctVacantBoarded", "PctVacMore6Mos",
    "MedYrHousBuilt", "PctHousNoPhone", "PctWOFullPlumb", "OwnOccLowQuart",
    "OwnOccMedVal", "OwnOccHiQuart", "RentLowQ", "RentMedian", "RentHighQ",
    "MedRent", "MedRentPctHousInc", "MedOwnCostPctInc", "MedOwnCostPctIncNoMtg",
    "NumInShelters", "NumStreet", "PctForeignBorn", "PctBornSameState",
    "PctSameHouse85", "PctSameCity85", "PctSameState85", "LandArea", "PopDens",
    "PctUsePubTrans", "LemasPctOfficDrugUn", "murders", "murdPerPop", "rapes",
    "rapesPerPop", "robberies", "robbbPerPop", "assaults", "assaultPerPop",
    "burglaries", "burglPerPop", "larcenies", "larcPerPop", "autoTheft",
    "autoTheftPerPop", "arsons", "arsonsPerPop", "ViolentCrimesPerPop",
    "nonViolPerPop", "OtherPerCap", "PctImmigRec3", "PctWorkMomNoKids",
    "PctHousWOPhone",
]

CRIME_SPARSE_NAMES = [
    "LemasSwornFT", "LemasSwFTPerPop", "LemasSwFTFieldOps",
    "LemasSwFTFieldPerPop", "LemasTotalReq", "LemasTotReqPerPop",
    "PolicReqPerOffic", "PolicPerPop", "RacialMatchCommPol", "PctPolicWhite",
    "PctPolicBlack", "PctPolicHisp", "PctPolicAsian", "PctPolicMinor",
    "OfficAssgnDrugUnits", "NumKindsDrugsSeiz", "PolicAveOTWorked",
    "PolicCars", "PolicOperBudg", "LemasPctPolicOnPatr", "LemasGangUnitDeploy",
    "PolicBudgPerPop",
]


def make_crime():
    rng = np.random.default_rng(77)
    n = 2215
    dense_names = CRIME_BASE_NAMES
    sparse_names = CRIME_SPARSE_NAMES
    assert len(dense_names) == 121 and len(set(dense_names)) == 121
    assert len(sparse_names) == 22
    names = dense_names + sparse_names

    n_clusters = 7
    sizes = [900, 350, 260, 200, 170, 150, 110]
    assert sum(sizes) + 75 == n
    assign = np.concatenate(
        [np.full(s, c) for c, s in enumerate(sizes)] + [np.full(75, -1)]
    )
    rng.shuffle(assign)

    # latent factors drive correlated blocks of features, so row clustering
    # in the contribution matrix has real structure to find
    n_factors = 10
    factor_load = rng.normal(size=(n_factors, 121)) * 0.12
    cluster_centers = rng.uniform(0.25, 0.75, size=(n_clusters, n_factors))
    informative = rng.choice(121, size=28, replace=False)
    offsets = rng.uniform(-0.35, 0.35, size=(n_clusters, 28))

    factors = np.empty((n, n_factors))
    for c in range(n_clusters):
        rows = assign == c
        factors[rows] = cluster_centers[c] + rng.normal(size=(rows.sum(), n_factors)) * 0.2
    noise_rows = assign == -1
    factors[noise_rows] = rng.uniform(0, 1, size=(noise_rows.sum(), n_factors))

    dense = 0.5 + (factors - 0.5) @ factor_load + rng.normal(size=(n, 121)) * 0.04
    for c in range(n_clusters):
        rows = assign == c
        dense[np.ix_(rows, informative)] += offsets[c]
    dense = np.clip(dense, 0.0, 1.0)
    sparse = np.clip(rng.normal(0.4, 0.2, size=(n, 22)), 0.0, 1.0)
    values = np.round(np.column_stack([dense, sparse]), 4)

    mask = np.zeros((n, 143), dtype=bool)
    for k in range(22):
        col = 121 + k
        mask[rng.choice(n, size=1872, replace=False), col] = True
    # 963 cells scattered across the dense features
    budget = 963
    while budget:
        r = int(rng.integers(0, n))
        c = int(rng.integers(0, 121))
        if not mask[r, c]:
            mask[r, c] = True
            budget -= 1
    assert int(mask.sum()) == 22 * 1872 + 963 == 42147

    coords = np.empty((n, 2))
    blob_xy = np.array(
        [[0, 0], [8, 1], [1, 8], [8, 8], [-6, 4], [4, -6], [-5, -5]], float
    )
    for c in range(n_clusters):
        rows = assign == c
        coords[rows] = blob_xy[c] + rng.normal(size=(rows.sum(), 2)) * 0.6
    coords[noise_rows] = rng.uniform(-10, 12, size=(noise_rows.sum(), 2))

    values_masked = values.copy()
    values_masked[mask] = np.nan
    table = DataTable(values_masked, names, [str(i) for i in range(n)], mask)
    ds = EmbeddedDataset(table, np.round(coords, 4), assign.astype(np.int64))
    doc = dataset_to_bundle(ds)
    doc["meta"] = {
        "source": "synthetic community-statistics table; 22 sparse columns sized "
                  "to the published 0.8 feature filter outcome",
        "labels": "7 blob clusters plus scattered noise",
    }
    path = save("crime.json", doc)

    ds = load_bundle(path)
    assert int(ds.table.missing_mask.sum()) == 42147
    filtered = filter_dataset(ds, 0.8, 1.0)
    assert filtered.table.n_features == 121, filtered.table.n_features
    assert filtered.table.n_points == 2215
    assert int(filtered.table.missing_mask.sum()) == 963
    res = analyze(ds, AnalysisParams(filter_features=0.8, filter_points=1.0))
    assert res.fc_matrix.values.shape == (121, 8), res.fc_matrix.values.shape
    assert len(res.layout.groups) == 40
    multi = [g for g in res.layout.groups if len(g.members) > 1]
    assert multi and all(", " in g.label and g.label.endswith("more") for g in multi)
    print("crime: 121 features after filter, 963 cells to impute, "
          "%d aggregated rows (%d multi-member)" % (len(res.layout.groups), len(multi)))


if __name__ == "__main__":
    os.makedirs(OUT_DIR, exist_ok=True)
    make_wine()
    make_digits()
    make_nutrient()
    make_crime()
    print("all fixtures written and verified")
