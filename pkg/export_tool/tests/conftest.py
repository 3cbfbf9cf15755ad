import pytest
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "gulf",
    "cup",
    "2010",
    "doha",
    "summit",
    "##s",
    "of",
    "battle",
    "aden",
    "2019",
    "the",
]


def _build_tokenizer() -> PreTrainedTokenizerFast:
    vocab_map = {token: i for i, token in enumerate(VOCAB)}
    core = Tokenizer(models.WordPiece(vocab_map, unk_token="[UNK]"))
    core.normalizer = normalizers.BertNormalizer(lowercase=True)
    core.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    core.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab_map["[CLS]"]), ("[SEP]", vocab_map["[SEP]"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=core,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )


def _save_model(path, layers: int) -> None:
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=layers,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=32,
    )
    BertModel(config).save_pretrained(path)
    _build_tokenizer().save_pretrained(path)


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny-lm")
    _save_model(path, layers=4)
    return path


@pytest.fixture(scope="session")
def shallow_model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny-lm-2layer")
    _save_model(path, layers=2)
    return path
