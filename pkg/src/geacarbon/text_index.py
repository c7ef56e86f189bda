"""Environmental-attention index from government work reports.

The index for one document is the number of dictionary keyword hits divided
by the number of word tokens (times 100), or the raw hit count for the
``count`` variant.  Keyword hits are literal, non-overlapping, left-to-right
substring matches where the longest keyword starting at a position wins.
"""

from __future__ import annotations

import csv
import re
import unicodedata
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import DataError

DEFAULT_FILENAME_PATTERN = r"^(?P<region>.+)_(?P<year>\d{4})\.txt$"
VARIANTS = ("percent", "count")
INDEX_CSV_HEADER = ("region_id", "year", "gea", "variant", "total_tokens")


@dataclass(frozen=True)
class Document:
    region_id: str
    year: int
    text: str

    def __post_init__(self):
        if not self.region_id:
            raise DataError("document region_id must be non-empty")
        if not self.text:
            raise DataError(f"document {self.region_id}/{self.year} has empty text")


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...] = ()

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def get(self, region_id: str, year: int) -> Document:
        for doc in self.documents:
            if doc.region_id == region_id and doc.year == year:
                return doc
        raise KeyError((region_id, year))


def _is_latin(keyword: str) -> bool:
    return any(ch.isascii() and ch.isalpha() for ch in keyword)


def _fold(keyword: str) -> str:
    return keyword.casefold() if _is_latin(keyword) else keyword


@dataclass(frozen=True)
class KeywordDictionary:
    """Ordered mapping of dimension name to its keywords."""

    dimensions: tuple[tuple[str, tuple[str, ...]], ...]
    _pattern: re.Pattern = field(init=False, repr=False, compare=False)
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dims = tuple((str(name), tuple(kws)) for name, kws in self.dimensions)
        object.__setattr__(self, "dimensions", dims)
        if not dims:
            raise DataError("keyword dictionary has no dimensions")
        seen: dict[str, str] = {}
        names = set()
        for name, kws in dims:
            if name in names:
                raise DataError(f"duplicate dimension {name!r}")
            names.add(name)
            if not kws:
                raise DataError(f"dimension {name!r} has no keywords")
            for kw in kws:
                if not kw or kw.strip() != kw:
                    raise DataError(f"invalid keyword {kw!r} in dimension {name!r}")
                key = _fold(kw)
                if key in seen:
                    raise DataError(
                        f"keyword {kw!r} appears in both {seen[key]!r} and {name!r}"
                    )
                seen[key] = name
        # Alternation is tried in order, so longest-first gives longest match.
        ordered = sorted(self.keywords, key=lambda k: (-len(k), k))
        parts = [
            f"(?i:{re.escape(kw)})" if _is_latin(kw) else re.escape(kw) for kw in ordered
        ]
        object.__setattr__(self, "_pattern", re.compile("|".join(parts)))
        object.__setattr__(self, "_lookup", {_fold(kw): kw for kw in self.keywords})

    @property
    def keywords(self) -> list[str]:
        return [kw for _, kws in self.dimensions for kw in kws]

    def dimension_of(self, keyword: str) -> str:
        for name, kws in self.dimensions:
            if keyword in kws:
                return name
        raise KeyError(keyword)

    def with_keyword(self, dimension: str, keyword: str) -> "KeywordDictionary":
        dims = [(n, kws + (keyword,) if n == dimension else kws) for n, kws in self.dimensions]
        if dimension not in dict(self.dimensions):
            dims.append((dimension, (keyword,)))
        return KeywordDictionary(tuple(dims))

    @classmethod
    def from_mapping(cls, mapping: dict[str, Sequence[str]]) -> "KeywordDictionary":
        return cls(tuple((name, tuple(kws)) for name, kws in mapping.items()))

    @classmethod
    def parse(cls, text: str) -> "KeywordDictionary":
        dims: list[tuple[str, list[str]]] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                dims.append((line[1:-1].strip(), []))
            elif not dims:
                raise DataError(f"line {lineno}: keyword {line!r} before any [dimension] header")
            else:
                dims[-1][1].append(line)
        return cls(tuple((name, tuple(kws)) for name, kws in dims))

    @classmethod
    def load(cls, path: str | Path) -> "KeywordDictionary":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot read dictionary {path}: {exc}") from exc
        return cls.parse(text)

    @classmethod
    def default(cls) -> "KeywordDictionary":
        text = resources.files("geacarbon").joinpath("data/default_dictionary.txt").read_text(
            encoding="utf-8"
        )
        return cls.parse(text)

    def dumps(self) -> str:
        blocks = []
        for name, kws in self.dimensions:
            blocks.append("\n".join([f"[{name}]", *kws]))
        return "\n\n".join(blocks) + "\n"


@dataclass(frozen=True)
class KeywordCounts:
    per_keyword: dict[str, int]
    per_dimension: dict[str, int]
    total_hits: int


@dataclass(frozen=True)
class AttentionIndex:
    region_id: str
    year: int
    gea: float
    variant: str
    total_tokens: int


# ---------------------------------------------------------------------------
# segmenters


def _is_filler(token: str) -> bool:
    return all(ch.isspace() or unicodedata.category(ch).startswith("P") for ch in token)


class Segmenter:
    """Splits text into word tokens."""

    name = "base"

    def tokens(self, text: str) -> list[str]:
        raise NotImplementedError


class WhitespaceSegmenter(Segmenter):
    name = "whitespace"

    def tokens(self, text):
        return text.split()


class WindowSegmenter(Segmenter):
    """Chops each run of non-space, non-punctuation characters into fixed windows.

    A deterministic stand-in for a dictionary-based CJK word segmenter.
    """

    name = "window"

    def __init__(self, window: int = 2):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window

    def tokens(self, text):
        out = []
        run: list[str] = []
        for ch in text + " ":
            if ch.isspace() or unicodedata.category(ch).startswith("P"):
                if run:
                    s = "".join(run)
                    out.extend(s[i : i + self.window] for i in range(0, len(s), self.window))
                    run = []
            else:
                run.append(ch)
        return out


class PresegmentedSegmenter(Segmenter):
    """Adapter for text already segmented by an external tool, one token per line."""

    name = "presegmented"

    def tokens(self, text):
        return [line.strip() for line in text.splitlines() if line.strip()]


def make_segmenter(name: str, window: int = 2) -> Segmenter:
    if name == "whitespace":
        return WhitespaceSegmenter()
    if name == "window":
        return WindowSegmenter(window)
    if name == "presegmented":
        return PresegmentedSegmenter()
    raise ValueError(f"unknown segmenter {name!r}")


# ---------------------------------------------------------------------------
# operations


def load_corpus(
    directory_path: str | Path,
    filename_pattern: str = DEFAULT_FILENAME_PATTERN,
    years: tuple[int, int] | None = None,
) -> Corpus:
    """Read every ``*.txt`` file in *directory_path* into a :class:`Corpus`.

    *filename_pattern* is a regular expression with named groups ``region``
    and ``year``; ``years`` optionally bounds the accepted calendar years.
    """
    directory = Path(directory_path)
    if not directory.is_dir():
        raise DataError(f"corpus directory {directory} does not exist")
    rx = re.compile(filename_pattern)
    docs: dict[tuple[str, int], Document] = {}
    for path in sorted(directory.glob("*.txt")):
        m = rx.match(path.name)
        if m is None:
            raise DataError(f"{path.name}: filename does not match {filename_pattern!r}")
        region, year = m.group("region"), int(m.group("year"))
        if years is not None and not years[0] <= year <= years[1]:
            raise DataError(f"{path.name}: year {year} outside {years[0]}-{years[1]}")
        if (region, year) in docs:
            raise DataError(f"{path.name}: duplicate document for ({region}, {year})")
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
        docs[(region, year)] = Document(region, year, text)
    if not docs:
        warnings.warn(f"corpus directory {directory} contains no documents", stacklevel=2)
    return Corpus(tuple(docs[key] for key in sorted(docs)))


def count_keywords(
    doc: Document | str,
    dictionary: KeywordDictionary,
    mode: str = "substring",
    segmenter: Segmenter | None = None,
) -> KeywordCounts:
    """Count keyword hits in a document.

    ``mode="substring"`` (default) scans the raw text; ``mode="token"`` counts
    segmenter tokens that equal a keyword exactly.
    """
    text = doc.text if isinstance(doc, Document) else doc
    per_keyword = dict.fromkeys(dictionary.keywords, 0)
    lookup = dictionary._lookup
    if mode == "substring":
        for m in dictionary._pattern.finditer(text):
            per_keyword[lookup[_fold(m.group())]] += 1
    elif mode == "token":
        if segmenter is None:
            raise ValueError("token mode needs a segmenter")
        for tok in segmenter.tokens(text):
            kw = lookup.get(_fold(tok))
            if kw is not None:
                per_keyword[kw] += 1
    else:
        raise ValueError(f"unknown match mode {mode!r}")
    per_dimension = {name: sum(per_keyword[k] for k in kws) for name, kws in dictionary.dimensions}
    return KeywordCounts(per_keyword, per_dimension, sum(per_keyword.values()))


def total_tokens(doc: Document | str, segmenter: Segmenter) -> int:
    text = doc.text if isinstance(doc, Document) else doc
    n = sum(1 for tok in segmenter.tokens(text) if not _is_filler(tok))
    if n == 0:
        raise DataError("document has no word tokens")
    return n


def gea_index(
    counts: KeywordCounts,
    total: int,
    variant: str = "percent",
    region_id: str = "",
    year: int = 0,
) -> AttentionIndex:
    if total <= 0:
        raise DataError("total token count must be positive")
    if variant == "percent":
        value = counts.total_hits / total * 100.0
    elif variant == "count":
        value = float(counts.total_hits)
    else:
        raise ValueError(f"unknown index variant {variant!r}")
    return AttentionIndex(region_id, year, value, variant, int(total))


def index_corpus(
    corpus: Iterable[Document],
    dictionary: KeywordDictionary,
    segmenter: Segmenter,
    variant: str = "percent",
    mode: str = "substring",
) -> list[AttentionIndex]:
    out = []
    for doc in corpus:
        counts = count_keywords(doc, dictionary, mode=mode, segmenter=segmenter)
        out.append(gea_index(counts, total_tokens(doc, segmenter), variant, doc.region_id, doc.year))
    return out


def aggregate_index(indices: Sequence[AttentionIndex], group_by: str) -> list[tuple]:
    """Mean index per year or per region, sorted by key."""
    if not indices:
        raise DataError("no indices to aggregate")
    if len({ix.variant for ix in indices}) > 1:
        raise DataError("cannot aggregate indices of mixed variants")
    if group_by not in ("year", "region"):
        raise ValueError("group_by must be 'year' or 'region'")
    groups: dict = defaultdict(list)
    for ix in indices:
        groups[ix.year if group_by == "year" else ix.region_id].append(ix.gea)
    return [(key, sum(v) / len(v)) for key, v in sorted(groups.items())]


def write_index_csv(indices: Iterable[AttentionIndex], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_CSV_HEADER)
        for ix in indices:
            w.writerow([ix.region_id, ix.year, repr(ix.gea), ix.variant, ix.total_tokens])


def read_index_csv(path: str | Path) -> list[AttentionIndex]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != INDEX_CSV_HEADER:
            raise DataError(f"{path}: expected header {','.join(INDEX_CSV_HEADER)}")
        return [
            AttentionIndex(r["region_id"], int(r["year"]), float(r["gea"]), r["variant"],
                           int(r["total_tokens"]))
            for r in reader
        ]


def write_series_csv(series: Iterable[tuple], path: str | Path, header: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for key, value in series:
            w.writerow([key, repr(float(value))])
