#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under data/fixtures."""

import argparse
import json
import random
from pathlib import Path

SYLLABLES = ["ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu", "na", "pe", "ri", "so", "tu", "va", "we", "xi", "yo", "ze"]
RELATIONS = ["syn", "hype", "hypo", "cohyp"]


def word_factory(rng):
    seen = set()

    def make():
        while True:
            w = "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 4)))
            if w not in seen:
                seen.add(w)
                return w

    return make


def dump_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")


def sentence_around(rng, filler, word, length):
    tokens = [rng.choice(filler) for _ in range(length)]
    pos = rng.randrange(length)
    tokens[pos] = word
    return tokens, pos


def make_probe(out, rng, new_word, filler):
    lexicon, sentences, neighbors = [], [], []
    for k in range(20):
        key = new_word()
        senses = [f"{key}.n.0{i + 1}" for i in range(1 + k % 2)]
        wordnet = set()
        for sense in senses:
            for rel in RELATIONS:
                for _ in range(rng.randint(1, 12)):
                    t = new_word()
                    wordnet.add(t)
                    lexicon.append({"key": key, "sense": sense, "relation": rel, "target": t})
            for i in range(3):
                tokens, pos = sentence_around(rng, filler, key, rng.randint(8, 20))
                sentences.append({"id": f"{sense}#{i}", "tokens": tokens, "key": key, "key_index": pos, "sense": sense})
        if k % 4 == 3:
            # dist targets come from the static neighbor file for these keys
            pool = sorted(wordnet)[:3] + [new_word() for _ in range(12)]
            scores = sorted((round(rng.uniform(0.2, 0.9), 4) for _ in pool), reverse=True)
            neighbors.append({"key": key, "neighbors": [{"word": w, "score": s} for w, s in zip(pool, scores)]})
        else:
            for _ in range(rng.randint(3, 10)):
                lexicon.append({"key": key, "sense": None, "relation": "dist", "target": new_word()})
    dump_jsonl(out / "probe_lexicon.jsonl", lexicon)
    dump_jsonl(out / "probe_sentences.jsonl", sentences)
    dump_jsonl(out / "probe_neighbors.jsonl", neighbors)


def make_rerank(out, rng, new_word, filler):
    neighbors, gold, freqs = [], [], []
    vocabulary = []
    for k in range(30):
        key = new_word()
        size = rng.randint(8, 20)
        words = [new_word() for _ in range(size)]
        scores = sorted((round(rng.uniform(0.3, 0.85), 4) for _ in words), reverse=True)
        neighbors.append({"key": key, "neighbors": [{"word": w, "score": s} for w, s in zip(words, scores)]})
        for w in words:
            if rng.random() < 0.35:
                gold.append({"key": key, "relation": rng.choice(RELATIONS), "word": w})
        freqs.append({"key": key, "count": rng.randint(50, 500000)})
        vocabulary.append(key)
        vocabulary.extend(words)
    lines = []
    for w in vocabulary:
        for _ in range(rng.randint(0, 14)):
            tokens, _ = sentence_around(rng, filler, w, rng.randint(6, 30))
            lines.append(" ".join(tokens))
    rng.shuffle(lines)
    dump_jsonl(out / "rerank_neighbors.jsonl", neighbors)
    dump_jsonl(out / "rerank_gold.jsonl", gold)
    dump_jsonl(out / "rerank_frequencies.jsonl", freqs)
    (out / "rerank_corpus.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "fixtures"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    new_word = word_factory(rng)
    filler = [new_word() for _ in range(300)] + ["the", "of", "and", "a", "in", "to", "was", "it"]
    make_probe(out, rng, new_word, filler)
    make_rerank(out, rng, new_word, filler)


if __name__ == "__main__":
    main()
