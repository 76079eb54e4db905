#!/usr/bin/env python3
"""Regenerates the frozen oracle fixtures under tests/fixtures/.

Values are produced by independent public implementations:
  * BLEU, chrF   -> sacrebleu (tokenize='none', smooth_method='none')
  * WER          -> jiwer (per-sentence edit operations)
  * NIST, GLEU   -> nltk.translate
  * CIDEr-D      -> pycocoevalcap CiderScorer

The C++ test-suite only reads the committed outputs; this script is not run
during the build. Re-run it only when the fixture corpus itself must change:

    pip install sacrebleu jiwer nltk pycocoevalcap
    python3 tools/oracles/make_oracle_fixtures.py
"""

import json
import pathlib
import random
import sys

import jiwer
import nltk
import pycocoevalcap
import sacrebleu
from nltk.translate.gleu_score import sentence_gleu
from nltk.translate.nist_score import corpus_nist
from pycocoevalcap.cider.cider_scorer import CiderScorer
from sacrebleu.metrics import BLEU, CHRF

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "tests" / "fixtures"
SEED = 20191103


def make_vocab(rng, size):
    letters = "abcdefghijklmnopqrstuvwxyz"
    words = set()
    while len(words) < size:
        words.add("".join(rng.choice(letters) for _ in range(rng.randint(2, 8))))
    return sorted(words)


def zipf_pick(rng, vocab):
    # rank-frequency skew so that common n-grams recur across the corpus
    idx = int(len(vocab) * (rng.random() ** 2.5))
    return vocab[min(idx, len(vocab) - 1)]


def perturb(rng, words, vocab, sub, drop, ins):
    out = []
    for w in words:
        r = rng.random()
        if r < drop:
            continue
        if r < drop + sub:
            out.append(zipf_pick(rng, vocab))
        else:
            out.append(w)
        if rng.random() < ins:
            out.append(zipf_pick(rng, vocab))
    if len(out) > 3 and rng.random() < 0.15:
        i = rng.randrange(len(out) - 2)
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


def synthetic_corpus(n):
    rng = random.Random(SEED)
    vocab = make_vocab(rng, 400)
    hyps, ref0, ref1 = [], [], []
    for _ in range(n):
        base = [zipf_pick(rng, vocab) for _ in range(rng.randint(5, 25))]
        ref0.append(" ".join(base))
        ref1.append(" ".join(perturb(rng, base, vocab, 0.15, 0.05, 0.05) or base))
        hyp = perturb(rng, base, vocab, 0.20, 0.10, 0.10)
        hyps.append(" ".join(hyp))
    return hyps, ref0, ref1


def multi_ref_wer(hyps, streams):
    edits = 0
    ref_words = 0
    for i, h in enumerate(hyps):
        best = None
        for s in streams:
            r = s[i]
            out = jiwer.process_words(r, h) if h else None
            n_ref = len(r.split())
            e = (out.substitutions + out.deletions + out.insertions) if out else n_ref
            if best is None or e / n_ref < best[0] / best[1]:
                best = (e, n_ref)
        edits += best[0]
        ref_words += best[1]
    return 100.0 * edits / ref_words


def external_oracle():
    hyps, ref0, ref1 = synthetic_corpus(1000)
    d = OUT / "external_oracle"
    d.mkdir(parents=True, exist_ok=True)
    for name, lines in (("hypothesis.txt", hyps), ("reference_0.txt", ref0),
                        ("reference_1.txt", ref1)):
        (d / name).write_text("".join(l + "\n" for l in lines), encoding="utf-8")

    bleu = BLEU(tokenize="none", smooth_method="none", force=True)
    chrf = CHRF()
    values = {
        "bleu_two_refs": bleu.corpus_score(hyps, [ref0, ref1]).score,
        "bleu_ref0": bleu.corpus_score(hyps, [ref0]).score,
        "chrf_two_refs": chrf.corpus_score(hyps, [ref0, ref1]).score,
        "chrf_ref0": chrf.corpus_score(hyps, [ref0]).score,
        "wer_ref0": 100.0 * jiwer.wer(ref0, hyps),
        "wer_two_refs": multi_ref_wer(hyps, [ref0, ref1]),
    }
    doc = {
        "provenance": {
            "generator": "tools/oracles/make_oracle_fixtures.py",
            "seed": SEED,
            "sacrebleu": sacrebleu.__version__,
            "jiwer": getattr(jiwer, "__version__", "unknown"),
            "bleu": "sacrebleu BLEU(tokenize='none', smooth_method='none')",
            "chrf": "sacrebleu CHRF() defaults: char_order=6, word_order=0, beta=2, whitespace stripped",
            "wer_ref0": "jiwer.wer over reference_0 only",
            "wer_two_refs": "jiwer per-sentence edits, reference with the lowest rate per sentence, summed",
        },
        "values": values,
    }
    (d / "expected.json").write_text(json.dumps(doc, indent=2) + "\n")
    return values


def toy_oracles():
    # NIST: single reference per example so that nltk's reference selection
    # and mteval's max-count clipping coincide.
    nist_hyps = ["the cat sat on the mat today",
                 "a quick brown dog jumps",
                 "it is raining in the city"]
    nist_refs = ["the cat sat on the mat",
                 "the quick brown fox jumps over the dog",
                 "it rains in the city tonight"]
    nist = corpus_nist([[r.split()] for r in nist_refs],
                       [h.split() for h in nist_hyps], n=5)

    cider_hyps = ["a man riding a horse on a beach",
                  "two dogs play with a red ball",
                  "a plate of food with broccoli"]
    cider_refs = [["a man rides a horse along the beach",
                   "a person riding a brown horse on sand"],
                  ["two dogs playing with a ball in the grass",
                   "a pair of dogs chase a red ball"],
                  ["a plate with broccoli and rice",
                   "food on a white plate with vegetables"]]
    scorer = CiderScorer(n=4, sigma=6.0)
    for h, refs in zip(cider_hyps, cider_refs):
        scorer += (h, refs)
    cider_corpus, cider_sentences = scorer.compute_score()

    gleu = 100.0 * sentence_gleu([["a", "b", "x", "d"]], ["a", "b", "c", "d"])

    doc = {
        "provenance": {
            "nltk": nltk.__version__,
            "pycocoevalcap": getattr(pycocoevalcap, "__version__", "unknown"),
            "nist": "nltk.translate.nist_score.corpus_nist(n=5)",
            "cider": "pycocoevalcap CiderScorer(n=4, sigma=6.0)",
            "gleu": "nltk.translate.gleu_score.sentence_gleu x 100",
        },
        "nist": {"hypotheses": nist_hyps, "references": nist_refs, "corpus": nist},
        "cider": {"hypotheses": cider_hyps, "references": cider_refs,
                  "corpus": float(cider_corpus),
                  "sentences": [float(s) for s in cider_sentences]},
        "gleu": {"hypothesis": "a b c d", "reference": "a b x d", "sentence": gleu},
    }
    (OUT / "offline_oracles.json").write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def main():
    print(json.dumps(external_oracle(), indent=2))
    toy = toy_oracles()
    print(json.dumps({k: toy[k] for k in ("nist", "cider", "gleu")}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
