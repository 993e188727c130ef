"""Corpus data model: recordings carrying bags of embeddings and
recording-level speaker name sets.

The on-disk corpus format is UTF-8 JSON lines, one recording per line:

    {"recording_id": "...", "labels": ["name", ...],
     "embeddings": [[f, ...], ...], "truth": ["name", ...]}

``truth`` is optional and, when present, names the generating speaker of
each embedding (only available for synthetic or hand-annotated data).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

#: Reserved output class absorbing speakers that are not in the target
#: vocabulary. Also used as the open-set "don't know" decision.
UNK_LABEL = "<unk>"

#: Truth marker for embeddings whose generating speaker is not a target
#: (e.g. background speakers injected by the synthetic generator).
NONE_OF_TARGETS = "<none>"


class CorpusError(ValueError):
    """Base class for corpus content errors."""


class CorpusFormatError(CorpusError):
    """A corpus file or recording violates the format contract."""


@dataclass(eq=False)
class Recording:
    """One recording: a bag of embeddings plus its annotated name set.

    ``embeddings`` is an (M, D) float64 array; ``labels`` is the
    duplicate-free, lexicographically sorted tuple of annotated names;
    ``truth``, when present, aligns one name per embedding.
    """

    recording_id: str
    embeddings: np.ndarray
    labels: tuple[str, ...]
    truth: tuple[str, ...] | None = None

    def __post_init__(self):
        emb = np.ascontiguousarray(np.asarray(self.embeddings, dtype=np.float64))
        if emb.ndim != 2 or emb.shape[0] < 1 or emb.shape[1] < 1:
            raise CorpusFormatError(
                f"recording {self.recording_id!r}: embeddings must form a "
                f"non-empty (M, D) matrix, got shape {emb.shape}"
            )
        if not np.isfinite(emb).all():
            raise CorpusFormatError(
                f"recording {self.recording_id!r}: embeddings contain NaN/Inf"
            )
        self.embeddings = emb

        labels = tuple(sorted(self.labels))
        if len(set(labels)) != len(labels):
            raise CorpusFormatError(
                f"recording {self.recording_id!r}: duplicate labels in {labels}"
            )
        if UNK_LABEL in labels:
            raise CorpusFormatError(
                f"recording {self.recording_id!r}: reserved label "
                f"{UNK_LABEL!r} may not appear in the annotation"
            )
        self.labels = labels

        if self.truth is not None:
            truth = tuple(self.truth)
            if len(truth) != emb.shape[0]:
                raise CorpusFormatError(
                    f"recording {self.recording_id!r}: truth has "
                    f"{len(truth)} entries for {emb.shape[0]} embeddings"
                )
            self.truth = truth

    @property
    def bag_size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.recording_id == other.recording_id
            and self.labels == other.labels
            and self.truth == other.truth
            and np.array_equal(self.embeddings, other.embeddings)
        )


class LabelVocabulary:
    """Ordered target label set; the final output index is ``<unk>``.

    Indices 0..C-1 map to the target labels in lexicographic order,
    index C is always the reserved unknown class.
    """

    __slots__ = ("_labels", "_index")

    def __init__(self, labels):
        labels = tuple(labels)
        if UNK_LABEL in labels:
            raise CorpusError(f"{UNK_LABEL!r} may not be listed as a target label")
        if len(set(labels)) != len(labels):
            raise CorpusError("vocabulary labels must be distinct")
        if not labels:
            raise CorpusError("vocabulary must contain at least one target label")
        self._labels = labels
        self._index = {label: i for i, label in enumerate(labels)}

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def num_targets(self) -> int:
        return len(self._labels)

    @property
    def num_outputs(self) -> int:
        """Target labels plus the unknown class."""
        return len(self._labels) + 1

    @property
    def unk_index(self) -> int:
        return len(self._labels)

    def index_of(self, label: str) -> int:
        if label == UNK_LABEL:
            return self.unk_index
        return self._index[label]

    def label_of(self, index: int) -> str:
        if index == self.unk_index:
            return UNK_LABEL
        return self._labels[index]

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self):
        return iter(self._labels)

    def __eq__(self, other):
        if not isinstance(other, LabelVocabulary):
            return NotImplemented
        return self._labels == other._labels

    def __repr__(self):
        return f"LabelVocabulary({self.num_targets} targets + {UNK_LABEL!r})"

    def save(self, path) -> None:
        """One target label per line; ``<unk>`` is implicit and never written."""
        with open(path, "w", encoding="utf-8") as f:
            for label in self._labels:
                f.write(label + "\n")

    @classmethod
    def load(cls, path) -> "LabelVocabulary":
        with open(path, encoding="utf-8") as f:
            labels = [line.rstrip("\n") for line in f if line.strip()]
        return cls(labels)


def _parse_record(obj, line_no: int, path) -> Recording:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{path}:{line_no}: expected a JSON object")
    try:
        recording_id = obj["recording_id"]
        labels = obj["labels"]
        embeddings = obj["embeddings"]
    except KeyError as exc:
        raise CorpusFormatError(f"{path}:{line_no}: missing field {exc}") from None
    if not isinstance(recording_id, str):
        raise CorpusFormatError(f"{path}:{line_no}: recording_id must be a string")
    if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
        raise CorpusFormatError(f"{path}:{line_no}: labels must be a list of strings")
    if not isinstance(embeddings, list) or not embeddings:
        raise CorpusFormatError(f"{path}:{line_no}: embeddings must be a non-empty list")
    dims = set()
    for vec in embeddings:
        if not isinstance(vec, list) or not all(
            isinstance(v, (int, float)) and math.isfinite(v) for v in vec
        ):
            raise CorpusFormatError(
                f"{path}:{line_no}: embeddings must be lists of finite numbers"
            )
        dims.add(len(vec))
    if len(dims) != 1 or 0 in dims:
        raise CorpusFormatError(
            f"{path}:{line_no}: inconsistent embedding dimensions {sorted(dims)}"
        )
    truth = obj.get("truth")
    if truth is not None and (
        not isinstance(truth, list) or not all(isinstance(t, str) for t in truth)
    ):
        raise CorpusFormatError(f"{path}:{line_no}: truth must be a list of strings")
    try:
        return Recording(
            recording_id=recording_id,
            embeddings=embeddings,
            labels=tuple(labels),
            truth=tuple(truth) if truth is not None else None,
        )
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"{path}:{line_no}: {exc}") from None


def load_corpus(path) -> list[Recording]:
    """Load a JSON-lines corpus file.

    Raises CorpusFormatError naming the offending line on malformed
    records, duplicate recording ids, or embedding dimension mismatches.
    """
    recordings: list[Recording] = []
    seen_ids: set[str] = set()
    dim: int | None = None
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            rec = _parse_record(obj, line_no, path)
            if rec.recording_id in seen_ids:
                raise CorpusFormatError(
                    f"{path}:{line_no}: duplicate recording_id {rec.recording_id!r}"
                )
            seen_ids.add(rec.recording_id)
            if dim is None:
                dim = rec.dim
            elif rec.dim != dim:
                raise CorpusFormatError(
                    f"{path}:{line_no}: embedding dimension {rec.dim} does not "
                    f"match corpus dimension {dim}"
                )
            recordings.append(rec)
    return recordings


def save_corpus(recordings, path) -> None:
    """Write recordings as JSON lines. Floats round-trip exactly."""
    with open(path, "w", encoding="utf-8") as f:
        for rec in recordings:
            obj = {
                "recording_id": rec.recording_id,
                "labels": list(rec.labels),
                "embeddings": rec.embeddings.tolist(),
            }
            if rec.truth is not None:
                obj["truth"] = list(rec.truth)
            f.write(json.dumps(obj) + "\n")


def build_vocabulary(corpus, min_occurrences: int = 1) -> LabelVocabulary:
    """Build the target vocabulary from recording-level name sets.

    A label is retained iff it appears in at least ``min_occurrences``
    distinct recordings. Order is lexicographic, so the result does not
    depend on recording order.
    """
    if min_occurrences < 1:
        raise ValueError("min_occurrences must be >= 1")
    if not corpus:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts = Counter()
    for rec in corpus:
        counts.update(set(rec.labels))
    kept = sorted(l for l, c in counts.items() if c >= min_occurrences)
    if not kept:
        raise CorpusError(
            f"no label occurs in at least {min_occurrences} recordings"
        )
    return LabelVocabulary(kept)


def filter_recordings(corpus, vocab: LabelVocabulary) -> tuple[list[Recording], int]:
    """Intersect each recording's label set with the vocabulary targets.

    Recordings whose label set becomes empty are dropped. Returns the
    kept recordings and the number dropped.
    """
    kept: list[Recording] = []
    dropped = 0
    for rec in corpus:
        labels = tuple(l for l in rec.labels if l in vocab)
        if not labels:
            dropped += 1
            continue
        if labels == rec.labels:
            kept.append(rec)
        else:
            kept.append(
                Recording(
                    recording_id=rec.recording_id,
                    embeddings=rec.embeddings,
                    labels=labels,
                    truth=rec.truth,
                )
            )
    return kept, dropped
