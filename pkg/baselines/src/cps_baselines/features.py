"""Bag-of-words featurization with a pluggable tokenizer.

The default tokenizer lowercases and splits on whitespace; runs of CJK
characters (which carry no whitespace) fall back to single-character
tokens. Vocabulary order is the sorted term list, so featurization is
deterministic for a fixed corpus and settings.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import sparse


class EmptyCorpus(ValueError):
    pass


_CJK = re.compile(r"[㐀-䶿一-鿿豈-﫿]")


def default_tokenizer(text: str) -> list[str]:
    tokens: list[str] = []
    for chunk in text.lower().split():
        if _CJK.search(chunk):
            tokens.extend(ch for ch in chunk if not ch.isspace())
        else:
            tokens.append(chunk)
    return tokens


def featurize(
    texts: Sequence[str],
    min_df: int = 1,
    use_idf: bool = False,
    tokenizer: Optional[Callable[[str], list[str]]] = None,
):
    """Term-frequency vectors over a deterministic sorted vocabulary.

    Returns (matrix, vocabulary) where matrix is CSR of shape
    (len(texts), len(vocabulary)). Terms appearing in fewer than
    ``min_df`` documents are dropped; ``use_idf`` rescales counts by
    log(n_docs / doc_freq) + 1.
    """
    if len(texts) == 0:
        raise EmptyCorpus("no texts to featurize")
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    tokenize = tokenizer or default_tokenizer

    tokenized = [tokenize(t) for t in texts]
    doc_freq: dict[str, int] = {}
    for tokens in tokenized:
        for term in set(tokens):
            doc_freq[term] = doc_freq.get(term, 0) + 1
    vocabulary = sorted(term for term, df in doc_freq.items() if df >= min_df)
    index = {term: i for i, term in enumerate(vocabulary)}

    rows, cols, data = [], [], []
    for r, tokens in enumerate(tokenized):
        counts: dict[int, int] = {}
        for term in tokens:
            c = index.get(term)
            if c is not None:
                counts[c] = counts.get(c, 0) + 1
        for c, v in counts.items():
            rows.append(r)
            cols.append(c)
            data.append(float(v))
    matrix = sparse.csr_matrix(
        (data, (rows, cols)), shape=(len(texts), len(vocabulary)), dtype=np.float64
    )
    if use_idf and vocabulary:
        idf = np.array([math.log(len(texts) / doc_freq[t]) + 1.0 for t in vocabulary])
        matrix = matrix.multiply(idf).tocsr()
    return matrix, vocabulary
