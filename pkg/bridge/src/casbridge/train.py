"""Optional fine-tuning of a causal LM on concept-sequence dataset files.

Trains a small model whose token space covers one token per concept label, so
the resulting checkpoint satisfies NeuralSequenceScorer's single-token
requirement. The engine's acceptance suite never requires this script; the
hyperparameter defaults here are independent choices, documented rather than
reproduced from any reference checkpoint.

Usage:
    python3 -m casbridge.train DATASET_FILE --vocab VOCAB --base gpt2 --out OUT_DIR
"""

from __future__ import annotations

import click

from casengine.datasets import load_dataset
from casengine.vocab import Vocabulary


@click.command()
@click.argument("dataset_file", type=click.Path(exists=True))
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--base", default="gpt2", help="Base causal LM to fine-tune.")
@click.option("--epochs", default=3, type=int)
@click.option("--batch-size", default=32, type=int)
@click.option("--lr", default=5e-5, type=float)
@click.option("--device", default="cpu")
@click.option("--out", required=True, type=click.Path())
def main(dataset_file, vocab_file, base, epochs, batch_size, lr, device, out) -> None:
    import torch
    from torch.utils.data import DataLoader
    from transformers import AutoModelForCausalLM, AutoTokenizer

    vocabulary = Vocabulary.load(vocab_file)
    dataset = load_dataset(dataset_file, vocabulary)

    tokenizer = AutoTokenizer.from_pretrained(base)
    # One dedicated token per concept label keeps scoring a single forward pass.
    added = tokenizer.add_tokens([" " + c.label for c in vocabulary.concepts])
    model = AutoModelForCausalLM.from_pretrained(base)
    if added:
        model.resize_token_embeddings(len(tokenizer))
    model = model.to(device).train()

    token_ids = [
        tokenizer.encode(" " + c.label, add_special_tokens=False)[0]
        for c in vocabulary.concepts
    ]
    bos = tokenizer.bos_token_id or tokenizer.eos_token_id
    rows = [
        torch.tensor([bos] + [token_ids[t] for t in seq.tokens]) for seq in dataset.sequences
    ]

    def collate(batch):
        length = max(len(r) for r in batch)
        pad = tokenizer.eos_token_id
        input_ids = torch.full((len(batch), length), pad, dtype=torch.long)
        labels = torch.full((len(batch), length), -100, dtype=torch.long)
        for i, row in enumerate(batch):
            input_ids[i, : len(row)] = row
            labels[i, 1 : len(row)] = row[1:]
        return input_ids.to(device), labels.to(device)

    loader = DataLoader(rows, batch_size=batch_size, shuffle=True, collate_fn=collate)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    for epoch in range(epochs):
        total = 0.0
        for input_ids, labels in loader:
            loss = model(input_ids=input_ids, labels=labels).loss
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total += float(loss)
        click.echo(f"epoch {epoch + 1}/{epochs} mean loss {total / max(len(loader), 1):.4f}")

    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    click.echo(f"saved fine-tuned scorer to {out}")


if __name__ == "__main__":
    main()
