"""Regenerates the synthetic fixtures in this directory.

distribution/: manifest + coarse and fine label passes whose per-split marginals
reproduce the published distribution counts, including the places where
the coarse and fine totals disagree.

agreement/: four seeded label files plus oracle.json holding kappas
computed with scikit-learn and statsmodels.

mock/: a 50-meme manifest whose text carries the [meme:ID] marker read by
the mock LLM server.
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent

HATE_ROWS = ["contempt", "dehumanizing", "mocking", "inferiority", "exclusion",
             "inciting_violence", "slurs", "other_hateful"]
SPLITS = {
    # records, coarse hateful, coarse not hateful, propagandistic
    "train": dict(records=2143, hateful=212, not_hateful=1931, prop=857,
                  fine_h=[38, 12, 133, 5, 6, 13, 6, 10], fine_n={"sarcasm": 105, "humor": 1815}),
    "dev": dict(records=320, hateful=32, not_hateful=280, prop=128,
                fine_h=[7, 3, 19, 1, 7, 2, 1, 1], fine_n={"sarcasm": 19, "humor": 260}),
    "test": dict(records=606, hateful=154, not_hateful=452, prop=171,
                 fine_h=[25, 2, 49, 14, 3, 12, 29, 20], fine_n={"sarcasm": 118, "humor": 334}),
}
PREFIX = {"train": "tr", "dev": "dv", "test": "te"}


def distribution():
    out = HERE / "distribution"
    manifest, coarse, fine = [], [], []
    for split, cfg in SPLITS.items():
        ids = [f"{PREFIX[split]}{i:04d}" for i in range(cfg["records"])]
        source = "human" if split == "test" else "sonnet"
        if split == "test":
            # 56 of the 171 propagandistic test memes are hateful: hateful
            # records are ids 0..153, propagandistic ids 98..268.
            prop = set(range(98, 98 + cfg["prop"]))
        else:
            rng = random.Random(split)
            prop = set(rng.sample(range(cfg["records"]), cfg["prop"]))
        for i, mid in enumerate(ids):
            manifest.append({"id": mid, "image_path": f"images/{mid}.jpg",
                             "text": f"synthetic meme {mid}",
                             "propaganda": "propagandistic" if i in prop else "not_propagandistic",
                             "split": split})
            if i < cfg["hateful"]:
                coarse.append({"id": mid, "coarse": "hateful", "source": source})
            elif i < cfg["hateful"] + cfg["not_hateful"]:
                coarse.append({"id": mid, "coarse": "not_hateful", "source": source})
        fine_tokens = []
        for token, n in zip(HATE_ROWS, cfg["fine_h"]):
            fine_tokens += [("hateful", token)] * n
        for token, n in cfg["fine_n"].items():
            fine_tokens += [("not_hateful", token)] * n
        assert len(fine_tokens) == cfg["records"], (split, len(fine_tokens))
        for mid, (c, f) in zip(ids, fine_tokens):
            fine.append({"id": mid, "coarse": c, "fine": f, "source": source})
    for name, rows in [("manifest.jsonl", manifest), ("coarse.jsonl", coarse), ("fine.jsonl", fine)]:
        with open(out / name, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")


def agreement():
    from sklearn.metrics import cohen_kappa_score
    from statsmodels.stats.inter_rater import aggregate_raters, fleiss_kappa

    out = HERE / "agreement"
    rng = random.Random(20240901)
    n = 120
    ids = [f"m{i:03d}" for i in range(n)]
    truth = [rng.random() < 0.3 for _ in ids]
    fine_h = ["mocking", "contempt", "slurs", "dehumanizing"]
    fine_n = ["humor", "sarcasm"]
    noise = {"gpt4o": 0.25, "sonnet": 0.15, "gemini": 0.4, "human": 0.0}
    raters = {}
    for name, p in noise.items():
        labels = []
        for t in truth:
            h = (not t) if rng.random() < p else t
            f = rng.choice(fine_h) if h else rng.choice(fine_n)
            labels.append(("hateful" if h else "not_hateful", f))
        raters[name] = labels
    for name, labels in raters.items():
        with open(out / f"{name}.jsonl", "w") as fh:
            for mid, (c, f) in zip(ids, labels):
                fh.write(json.dumps({"id": mid, "coarse": c, "fine": f, "source": name},
                                    separators=(",", ":")) + "\n")
    names = list(raters)
    oracle = {"coarse": {"pairs": {}}, "fine": {"pairs": {}}}
    for level, idx in [("coarse", 0), ("fine", 1)]:
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                a = [x[idx] for x in raters[names[i]]]
                b = [x[idx] for x in raters[names[j]]]
                oracle[level]["pairs"][f"{names[i]}|{names[j]}"] = cohen_kappa_score(a, b)
        llms = ["gpt4o", "sonnet", "gemini"]
        table = [[raters[r][k][idx] for r in llms] for k in range(n)]
        counts, _ = aggregate_raters(table)
        oracle[level]["fleiss_llms"] = fleiss_kappa(counts, method="fleiss")
    with open(out / "oracle.json", "w") as fh:
        json.dump(oracle, fh, indent=2, sort_keys=True)
        fh.write("\n")


def mock():
    out = HERE / "mock"
    out.mkdir(exist_ok=True)
    with open(out / "manifest.jsonl", "w", encoding="utf-8") as fh:
        for i in range(50):
            row = {"id": f"m{i:03d}", "image_path": f"images/m{i:03d}.png",
                   "text": f"synthetic meme [meme:m{i:03d}]",
                   "propaganda": "propagandistic" if i % 3 == 0 else "not_propagandistic",
                   "split": "test"}
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    distribution()
    agreement()
    mock()
