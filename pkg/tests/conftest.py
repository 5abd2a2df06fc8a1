import numpy as np
import pytest

from sensekit.embeddings import EmbeddingTable, Kind, save_table

DATASET_COLUMNS = ("usage_id", "word", "text", "period", "gloss_id", "definition", "span")


def write_dataset_tsv(path, rows):
    """rows: dicts with any of the canonical dataset columns."""
    lines = ["\t".join(DATASET_COLUMNS)]
    for row in rows:
        lines.append("\t".join(str(row.get(col, "")) for col in DATASET_COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def unit_noise(rng, dim, scale=0.01):
    return rng.normal(0.0, scale, size=dim)


def make_blob_fixture(n_blobs=3, per_blob=10, dim=16, words_per_blob=6, seed=7):
    """Well-separated blobs on orthogonal axes with disjoint vocabularies.

    Usage vectors of blob b hug the b-th basis vector, and so do the
    blob's vocabulary words, so the k-NN sets of any two within-blob
    centroids coincide while the sets of different blobs are disjoint.
    """
    assert dim >= n_blobs
    rng = np.random.default_rng(seed)
    usage_vecs = {}
    labels = {}
    vocab_entries = {}
    for blob in range(n_blobs):
        axis = np.zeros(dim)
        axis[blob] = 1.0
        for i in range(per_blob):
            uid = f"u{blob}_{i:02d}"
            usage_vecs[uid] = axis + unit_noise(rng, dim)
            labels[uid] = blob
        for j in range(words_per_blob):
            vocab_entries[f"blob{blob}_w{j}"] = axis + unit_noise(rng, dim)
    vocab = EmbeddingTable(vocab_entries, kind=Kind.WORD)
    return usage_vecs, labels, vocab


@pytest.fixture
def blob_fixture():
    return make_blob_fixture()


def build_two_sense_fixture(tmp_path, seed=11, dim=8, language="en"):
    """One lemma, two planted senses; one matches the only gloss, one does not.

    By construction the matched cluster's centroid-gloss cosine is close
    to 1 (> 0.5) and the novel cluster's close to 0 (< 0.5). Returns all
    file paths plus the raw pieces for direct checks.
    """
    rng = np.random.default_rng(seed)
    axis_a = np.zeros(dim)
    axis_a[0] = 1.0
    axis_b = np.zeros(dim)
    axis_b[1] = 1.0

    usage_vecs = {
        "u01": axis_a + unit_noise(rng, dim),
        "u02": axis_a + unit_noise(rng, dim),
        "u03": axis_a + unit_noise(rng, dim),
        "u04": axis_a + unit_noise(rng, dim),
        "u05": axis_b + unit_noise(rng, dim),
        "u06": axis_b + unit_noise(rng, dim),
    }
    vocab_entries = {}
    for j in range(6):
        vocab_entries[f"river_{j}"] = axis_a + unit_noise(rng, dim)
        vocab_entries[f"ledge_{j}"] = axis_b + unit_noise(rng, dim)
    gloss_entries = {"g1": axis_a + unit_noise(rng, dim)}

    rows = [
        {"usage_id": "u01", "word": "bank", "text": "old usage one of bank", "period": "old",
         "gloss_id": "g1", "definition": "sloping land beside water."},
        {"usage_id": "u02", "word": "bank", "text": "old usage two of bank", "period": "old",
         "gloss_id": "g1", "definition": "sloping land beside water."},
        {"usage_id": "u03", "word": "bank", "text": "new usage river bank water", "period": "new",
         "gloss_id": "g1"},
        {"usage_id": "u04", "word": "bank", "text": "new usage river bank shore", "period": "new",
         "gloss_id": "g1"},
        {"usage_id": "u05", "word": "bank", "text": "new usage ledge bank row", "period": "new",
         "gloss_id": "g_new", "definition": "a raised shelf or tier."},
        {"usage_id": "u06", "word": "bank", "text": "new usage ledge bank tier", "period": "new",
         "gloss_id": "g_new", "definition": "a raised shelf or tier."},
    ]

    dataset = write_dataset_tsv(tmp_path / "dataset.tsv", rows)
    usage_path = tmp_path / "usages.emb"
    vocab_path = tmp_path / "vocab.emb"
    gloss_path = tmp_path / "glosses.emb"
    save_table(EmbeddingTable(usage_vecs, kind=Kind.USAGE), usage_path)
    save_table(EmbeddingTable(vocab_entries, kind=Kind.WORD), vocab_path)
    save_table(EmbeddingTable(gloss_entries, kind=Kind.GLOSS), gloss_path)

    return {
        "dataset": dataset,
        "usage_embeddings": usage_path,
        "word_embeddings": vocab_path,
        "gloss_embeddings": gloss_path,
        "usage_vecs": usage_vecs,
        "vocab_entries": vocab_entries,
        "gloss_entries": gloss_entries,
        "language": language,
        "matched_usages": ("u03", "u04"),
        "novel_usages": ("u05", "u06"),
        "lemma": "bank",
    }


@pytest.fixture
def two_sense_fixture(tmp_path):
    return build_two_sense_fixture(tmp_path)
