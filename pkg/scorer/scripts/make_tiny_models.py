#!/usr/bin/env python3
"""Build the tiny pinned test models under tests/models/.

The hub is not reachable from CI, so the test suite pins two locally
generated models: a 2-layer BERT-style masked LM over a character-level
WordPiece vocabulary and a 2-layer GPT-2-style causal LM over a byte-level
BPE trained on the shipped treebank text. Weights are randomly initialized
with fixed seeds; the models know nothing, but they expose exactly the
tokenization and probability surfaces real checkpoints do. File hashes are
recorded in models.lock.

Usage: python3 scorer/scripts/make_tiny_models.py
"""
from __future__ import annotations

import hashlib
import json
import sys
import unicodedata
from pathlib import Path

import torch
from tokenizers import ByteLevelBPETokenizer, Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import (
    BertConfig,
    BertForMaskedLM,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

SCORER_DIR = Path(__file__).resolve().parent.parent
REPO_DIR = SCORER_DIR.parent
MODELS_DIR = SCORER_DIR / "tests" / "models"

MKHEDRULI = [chr(cp) for cp in range(0x10D0, 0x10F1)]
ASCII = [chr(cp) for cp in range(0x21, 0x7F)]


def corpus_lines() -> list[str]:
    treebank = REPO_DIR / "data" / "treebank-synthetic.conllu"
    lines = []
    if treebank.is_file():
        for raw in treebank.read_text(encoding="utf-8").splitlines():
            if raw.startswith("# text = "):
                lines.append(unicodedata.normalize("NFC", raw[len("# text = "):]))
    if not lines:  # fallback so the script works standalone
        lines = ["ბავშვი ხატავს სურათს.", "მამამ სახლი ააშენა.", "დედას წიგნი წაუკითხავს."]
    return lines


def build_masked(out_dir: Path) -> None:
    # character-level WordPiece: every Mkhedruli and printable ASCII char
    # plus its ##-continuation, so no input ever hits [UNK]
    vocab_list = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    chars = MKHEDRULI + ASCII
    vocab_list += chars
    vocab_list += [f"##{c}" for c in chars]
    vocab = {token: i for i, token in enumerate(vocab_list)}

    wordpiece = Tokenizer(models.WordPiece(vocab=vocab, unk_token="[UNK]",
                                           max_input_chars_per_word=200))
    wordpiece.normalizer = normalizers.BertNormalizer(lowercase=False)
    wordpiece.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    wordpiece.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=wordpiece,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    tokenizer.save_pretrained(out_dir)

    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(vocab_list),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=256,
        pad_token_id=0,
    )
    model = BertForMaskedLM(config)
    model.save_pretrained(out_dir)
    print(f"{out_dir}: vocab {len(vocab_list)}, params {sum(p.numel() for p in model.parameters())}")


def build_causal(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    bpe = ByteLevelBPETokenizer()
    bpe.train_from_iterator(
        corpus_lines(), vocab_size=384, min_frequency=2,
        special_tokens=["<|endoftext|>"],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=bpe._tokenizer,
        bos_token="<|endoftext|>",
        eos_token="<|endoftext|>",
        unk_token="<|endoftext|>",
    )
    tokenizer.save_pretrained(out_dir)

    torch.manual_seed(4321)
    config = GPT2Config(
        vocab_size=tokenizer.vocab_size,
        n_embd=32,
        n_layer=2,
        n_head=2,
        n_positions=256,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    model = GPT2LMHeadModel(config)
    model.save_pretrained(out_dir)
    print(f"{out_dir}: vocab {tokenizer.vocab_size}, params {sum(p.numel() for p in model.parameters())}")


def write_lock() -> None:
    entries = {}
    for path in sorted(MODELS_DIR.rglob("*")):
        if path.is_file():
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            entries[str(path.relative_to(SCORER_DIR))] = digest
    lock_path = SCORER_DIR / "models.lock"
    lock_path.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    print(f"{lock_path}: {len(entries)} files pinned")


def main() -> int:
    build_masked(MODELS_DIR / "tiny-masked")
    build_causal(MODELS_DIR / "tiny-causal")
    write_lock()
    return 0


if __name__ == "__main__":
    sys.exit(main())
