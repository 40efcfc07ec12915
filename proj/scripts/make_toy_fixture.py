#!/usr/bin/env python3
"""Regenerate data/toy: small alignment/downstream corpora with dim-16 EMB1
matrices, per-token log-probabilities, and a candidate-model manifest.

The EMB1 writer here is written from the format description alone and does
not use the C++ library, so reading these files back doubles as a
cross-implementation check.
"""

import argparse
import json
import struct
from pathlib import Path

import numpy as np

DIM = 16
N_ALIGN = 200
N_DOWN = 50
TEMPLATE = "{instruction}{input}\n{completion}"

TOPICS = ["baking", "tax forms", "chess openings", "bicycle repair", "poetry", "networking",
          "gardening", "linear algebra", "travel plans", "first aid"]


def write_emb1(path, corpus_name, model_id, ids, rows):
    rows = np.ascontiguousarray(rows, dtype="<f4")
    assert rows.shape == (len(ids), DIM)
    meta = json.dumps({"corpus_name": corpus_name, "model_id": model_id, "template": TEMPLATE,
                       "pooling": "last_token"}, separators=(",", ":"), ensure_ascii=False).encode()
    id_bytes = b"".join(struct.pack("<I", len(i.encode())) + i.encode() for i in ids)
    with open(path, "wb") as f:
        f.write(b"EMB1")
        f.write(struct.pack("<IQQ", 1, len(ids), DIM))
        f.write(struct.pack("<I", len(meta)) + meta)
        f.write(struct.pack("<Q", len(id_bytes)) + id_bytes)
        f.write(rows.tobytes())


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "toy"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    (out / "candidates").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    centers = rng.normal(size=(len(TOPICS), DIM))
    align_topic = rng.integers(0, len(TOPICS), size=N_ALIGN)
    align_rows = centers[align_topic] + 0.6 * rng.normal(size=(N_ALIGN, DIM))
    # The downstream task leans on two topics.
    down_topic = rng.choice([0, 4], size=N_DOWN)
    down_rows = centers[down_topic] + 0.6 * rng.normal(size=(N_DOWN, DIM))

    align = []
    for i, t in enumerate(align_topic):
        rec = {"id": f"align-{i:04d}", "instruction": f"Question {i} about {TOPICS[t]}.",
               "output": f"A careful answer about {TOPICS[t]} (item {i})."}
        if i % 7 == 0:
            rec["input"] = f"Context note {i}."
        rec["tags"] = [TOPICS[t]]
        align.append(rec)
    down = [{"id": f"down-{i:04d}", "instruction": f"Task {i}: help with {TOPICS[t]}.",
             "output": f"Here is help with {TOPICS[t]}."} for i, t in enumerate(down_topic)]

    write_jsonl(out / "alignment.jsonl", align)
    write_jsonl(out / "downstream.jsonl", down)
    write_emb1(out / "alignment.emb", "alignment", "toy-uncensored", [r["id"] for r in align], align_rows)
    write_emb1(out / "downstream.emb", "downstream", "toy-uncensored", [r["id"] for r in down], down_rows)

    logprobs = []
    for r in align:
        n_tok = len((r["instruction"] + " " + r["output"]).split())
        logprobs.append({"id": r["id"], "logprobs": [round(float(x), 4) for x in -rng.gamma(2.0, 1.5, size=n_tok)]})
    write_jsonl(out / "alignment_logprobs.jsonl", logprobs)

    manifest = []
    for c, (name, topics) in enumerate([("model-a", [0, 4]), ("model-b", [1, 2, 3]), ("model-c", [5, 6, 7, 8, 9])]):
        rows = centers[rng.choice(topics, size=40)] + 0.6 * rng.normal(size=(40, DIM))
        ids = [f"{name}-{i:03d}" for i in range(40)]
        write_emb1(out / "candidates" / f"{name}.emb", f"{name}-alignment", "toy-uncensored", ids, rows)
        manifest.append({"model_id": name, "matrix": f"{name}.emb", "metadata": {"topics": [TOPICS[t] for t in topics]}})
    with open(out / "candidates" / "manifest.json", "w", encoding="utf-8") as f:
        json.dump({"candidates": manifest}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
