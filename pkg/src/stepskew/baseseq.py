"""Symbolic base: finite windows of the k-fold Bernoulli base, crafted
sequences with planted words, zero-run and occurrence scans, and file IO.

A base sequence is an (L, k) uint8 array of letters; letter t drives step
t + origin of the skew product.  A word is any (m, k) letter block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BaseSequence",
    "CraftSpec",
    "sample_base",
    "craft_base",
    "find_zero_runs",
    "word_occurrences",
    "word_from_text",
    "word_to_text",
    "read_base_text",
    "write_base_text",
    "read_base_packed",
    "write_base_packed",
]


def _as_letters(arr, k: int | None = None) -> np.ndarray:
    a = np.asarray(arr, dtype=np.uint8)
    if a.ndim != 2:
        raise ValueError(f"letters must be a 2-D array, got shape {a.shape}")
    if k is not None and a.shape[1] != k:
        raise ValueError(f"letters have {a.shape[1]} coordinates, expected {k}")
    if a.size and a.max() > 1:
        raise ValueError("letters must be 0/1")
    return a


@dataclass
class BaseSequence:
    """A finite window of the base, starting at absolute time `origin`."""

    letters: np.ndarray  # (L, k) uint8
    origin: int = 0

    def __post_init__(self):
        self.letters = _as_letters(self.letters)

    @property
    def length(self) -> int:
        return self.letters.shape[0]

    @property
    def k(self) -> int:
        return self.letters.shape[1]

    def slice(self, start: int, stop: int) -> "BaseSequence":
        """Window by absolute time: [start, stop)."""
        i = start - self.origin
        j = stop - self.origin
        if i < 0 or j > self.length or i > j:
            raise IndexError(f"[{start}, {stop}) outside window")
        return BaseSequence(self.letters[i:j].copy(), origin=start)


def sample_base(k: int, length: int, seed) -> BaseSequence:
    """I.i.d. fair letters from a fixed, version-stable generator.

    `seed` may be an int or a numpy SeedSequence; the stream is PCG64,
    whose output for a given seed is part of numpy's compatibility
    guarantee, so sampled bases reproduce bit-for-bit.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    bits = rng.integers(0, 2, size=(length, k), dtype=np.uint8)
    return BaseSequence(bits, origin=0)


@dataclass
class CraftSpec:
    """Recipe for a deterministic base with planted words.

    background is 'all-zero', 'all-one', or 'random' (with `seed`);
    insertions is a list of (position, word) pairs, each word an (m, k)
    block written over the background starting at that position.
    Overlapping insertions are rejected.
    """

    k: int
    length: int
    background: str = "all-zero"
    seed: int = 0
    insertions: list[tuple[int, np.ndarray]] = field(default_factory=list)


def craft_base(spec: CraftSpec) -> BaseSequence:
    if spec.background == "all-zero":
        letters = np.zeros((spec.length, spec.k), dtype=np.uint8)
    elif spec.background == "all-one":
        letters = np.ones((spec.length, spec.k), dtype=np.uint8)
    elif spec.background == "random":
        letters = sample_base(spec.k, spec.length, spec.seed).letters
    else:
        raise ValueError(f"unknown background {spec.background!r}")

    claimed: list[tuple[int, int]] = []
    for pos, word in sorted(spec.insertions, key=lambda pw: pw[0]):
        w = _as_letters(word, spec.k)
        end = pos + w.shape[0]
        if pos < 0 or end > spec.length:
            raise ValueError(
                f"insertion [{pos}, {end}) outside base of length {spec.length}"
            )
        for a, b in claimed:
            if pos < b and a < end:
                raise ValueError(
                    f"insertion [{pos}, {end}) overlaps [{a}, {b})"
                )
        claimed.append((pos, end))
        letters[pos:end] = w
    return BaseSequence(letters, origin=0)


def find_zero_runs(base: BaseSequence, coord: int, runlen: int) -> np.ndarray:
    """End positions e (window-relative) with coord zero on [e-runlen, e).

    Runs shorter than `runlen` do not qualify; e ranges over runlen..L, so
    e == L is reported when the window ends inside a long run.
    """
    if runlen < 1:
        raise ValueError("runlen must be >= 1")
    col = base.letters[:, coord]
    L = col.shape[0]
    if L < runlen:
        return np.empty(0, dtype=np.int64)
    csum = np.concatenate([[0], np.cumsum(col, dtype=np.int64)])
    window = csum[runlen:] - csum[:-runlen]  # ones in [e-runlen, e)
    return np.nonzero(window == 0)[0] + runlen


def word_occurrences(base: BaseSequence, word: np.ndarray) -> np.ndarray:
    """Start positions (window-relative) where the word occurs."""
    w = _as_letters(word, base.k)
    m = w.shape[0]
    L = base.length
    if m == 0:
        raise ValueError("word must be nonempty")
    if m > L:
        return np.empty(0, dtype=np.int64)
    acc = np.ones(L - m + 1, dtype=bool)
    for j in range(m):
        acc &= np.all(base.letters[j : L - m + 1 + j] == w[j], axis=1)
    return np.nonzero(acc)[0].astype(np.int64)


# ---------------------------------------------------------------------------
# text and packed IO
# ---------------------------------------------------------------------------


def word_from_text(text: str, k: int) -> np.ndarray:
    """Parse letters like '10 01 11' or multi-line '10\\n01'."""
    tokens = text.split()
    rows = []
    for tok in tokens:
        if len(tok) != k or any(ch not in "01" for ch in tok):
            raise ValueError(f"bad letter {tok!r} for k = {k}")
        rows.append([int(ch) for ch in tok])
    if not rows:
        raise ValueError("empty word")
    return np.array(rows, dtype=np.uint8)


def word_to_text(word: np.ndarray) -> str:
    w = _as_letters(word)
    return "\n".join("".join(str(int(b)) for b in row) for row in w)


def write_base_text(path, base: BaseSequence) -> None:
    with open(path, "w") as fh:
        fh.write(word_to_text(base.letters))
        fh.write("\n")


def read_base_text(path, k: int) -> BaseSequence:
    with open(path) as fh:
        text = fh.read()
    return BaseSequence(word_from_text(text, k), origin=0)


def write_base_packed(path, base: BaseSequence) -> None:
    """Little-endian bit packing: letter t, coordinate j at bit t*k + j."""
    flat = base.letters.reshape(-1)
    packed = np.packbits(flat, bitorder="little")
    header = np.array([base.length, base.k], dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(b"SKB1")
        fh.write(header.tobytes())
        fh.write(packed.tobytes())


def read_base_packed(path) -> BaseSequence:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"SKB1":
            raise ValueError(f"not a packed base file (magic {magic!r})")
        header = np.frombuffer(fh.read(16), dtype="<i8")
        length, k = int(header[0]), int(header[1])
        packed = np.frombuffer(fh.read(), dtype=np.uint8)
    bits = np.unpackbits(packed, bitorder="little")
    need = length * k
    if bits.shape[0] < need:
        raise ValueError("packed base file truncated")
    letters = bits[:need].reshape(length, k)
    return BaseSequence(letters.astype(np.uint8), origin=0)
