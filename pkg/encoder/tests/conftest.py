import pytest
import torch
from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
from tokenizers.models import WordPiece
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "usage", "one", "two", "old", "new",
    "water", "metal", "coin", "shore", "money", "piece",
    "run", "##ning",
]

DATASET_ROWS = [
    ("u1", "coin", "old metal coin shore", "old", "g1", "metal money piece"),
    ("u2", "coin", "new coin water shore", "new", "", ""),
    ("u3", "coin", "running water shore", "new", "", ""),
    ("u4", "water", "water one two", "old", "g2", "one water two"),
    ("u5", "water", "water shore running", "new", "", ""),
]


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory):
    """A small randomly initialized BERT saved locally: offline and stable."""
    path = tmp_path_factory.mktemp("tiny-bert")
    vocab = {word: i for i, word in enumerate(VOCAB)}
    backend = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    backend.normalizer = normalizers.BertNormalizer(lowercase=False)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
        model_max_length=64,
    )
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.eval()
    tokenizer.save_pretrained(path)
    model.save_pretrained(path)
    return str(path)


@pytest.fixture
def dataset_file(tmp_path):
    header = "usage_id\tword\ttext\tperiod\tgloss_id\tdefinition"
    lines = [header] + ["\t".join(row) for row in DATASET_ROWS]
    path = tmp_path / "dataset.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
