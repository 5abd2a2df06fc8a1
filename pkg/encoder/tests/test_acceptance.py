"""Acceptance for the encoder adapter: EMB1 interop with the core
loader, pooling identities, and byte determinism."""

import json

import numpy as np

from sensekit.embeddings import load_table
from usage_encoder.adapter import EncoderConfig, embed_dataset, embed_tokens
from usage_encoder.dataset import read_dataset


def _ok(name, detail):
    print(f"ACCEPTANCE PASS: {name} ({detail})")


def test_encoder_adapter_acceptance(tiny_model, dataset_file, tmp_path):
    cfg = EncoderConfig(model=tiny_model)

    # EMB1 files round-trip through the core loader
    out_a = tmp_path / "run_a"
    manifest = embed_dataset(dataset_file, cfg, out_a)
    words = load_table(out_a / "words.emb")
    usages = load_table(out_a / "usages.emb")
    glosses = load_table(out_a / "glosses.emb")
    assert words.dim == usages.dim == glosses.dim == manifest["dim"]
    rows = read_dataset(dataset_file)
    assert sorted(usages.ids()) == sorted(r.usage_id for r in rows)

    # usage vector equals the mean of the dumped token vectors (+- 1e-5)
    dump = tmp_path / "tokens.jsonl"
    ordered = sorted(rows, key=lambda r: r.usage_id)
    embed_tokens([r.text for r in ordered], cfg, dump)
    lines = [json.loads(line) for line in dump.read_text().splitlines()]
    for row, record in zip(ordered, lines):
        token_mean = np.mean(np.asarray(record["vecs"]), axis=0)
        np.testing.assert_allclose(usages.vector(row.usage_id), token_mean, atol=1e-5)

    # two runs produce byte-identical files
    out_b = tmp_path / "run_b"
    embed_dataset(dataset_file, cfg, out_b)
    for name in ("words.emb", "usages.emb", "glosses.emb", "manifest.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    # a word occurring in several usages carries the occurrence mean
    occurrences = []
    for record in lines:
        for token, vec in zip(record["tokens"], record["vecs"]):
            if token == "shore":
                occurrences.append(np.asarray(vec))
    assert len(occurrences) == 4
    np.testing.assert_allclose(
        words.vector("shore"), np.mean(np.stack(occurrences), axis=0), atol=1e-5
    )

    _ok(
        "encoder-adapter",
        f"round-trip dim {manifest['dim']}; usage==token-mean at 1e-5; "
        f"byte-identical reruns; occurrence mean verified",
    )
