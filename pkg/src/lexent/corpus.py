"""Document model, paragraph/sentence segmentation and language filtering."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import DataError

KINDS = ("case", "article", "question")

_MARKER = re.compile(r"^\s*\[\d+\]")
_BLANK = re.compile(r"^\s*$")
# Latin terminators need a following space (or end) to split; CJK ones do not.
_TERMINATOR = re.compile(r"[.?!]+[\"'’”)\]]*(?=\s|$)|[。！？][」』)]*")


@dataclass(frozen=True)
class Paragraph:
    parent_id: str
    index: int
    text: str
    sentences: tuple[str, ...] = ()


@dataclass(frozen=True)
class Document:
    id: str
    kind: str
    paragraphs: tuple[Paragraph, ...] = ()
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown document kind {self.kind!r}")
        for i, p in enumerate(self.paragraphs):
            if p.index != i:
                raise DataError(f"{self.id}: paragraph indices must be consecutive from 0")

    @property
    def text(self) -> str:
        return "\n\n".join(p.text for p in self.paragraphs)

    def sentences(self) -> list[str]:
        return [s for p in self.paragraphs for s in p.sentences]


def _data_lines(name: str) -> list[str]:
    text = resources.files("lexent").joinpath("data", name).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    return frozenset(_data_lines("abbreviations.txt"))


@lru_cache(maxsize=None)
def default_stopwords(language: str) -> frozenset[str]:
    files = {"english": "stopwords_en.txt", "french": "stopwords_fr.txt"}
    if language not in files:
        raise DataError(f"no stopword list for {language!r}")
    return frozenset(w.lower() for w in _data_lines(files[language]))


def load_word_list(path: str | Path) -> frozenset[str]:
    """One entry per line, UTF-8; blank lines ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip() for line in lines if line.strip())


def segment_paragraphs(raw: str, parent_id: str = "") -> list[Paragraph]:
    """Split on blank lines and on ``[<digits>]`` markers at line start.

    Markers stay in the paragraph text; empty segments are dropped.
    """
    segments: list[list[str]] = []
    current: list[str] = []
    for line in raw.splitlines():
        if _BLANK.match(line):
            if current:
                segments.append(current)
            current = []
            continue
        if _MARKER.match(line) and current:
            segments.append(current)
            current = []
        current.append(line)
    if current:
        segments.append(current)
    texts = ["\n".join(seg).strip() for seg in segments]
    return [Paragraph(parent_id, i, t) for i, t in enumerate(t for t in texts if t)]


def _sentence_spans(text: str, abbreviations: frozenset[str]) -> list[str]:
    out = []
    start = 0
    for m in _TERMINATOR.finditer(text):
        end = m.end()
        if m.group().startswith("."):
            # the whitespace-delimited word ending at this terminator
            word = text[:m.start() + 1].rsplit(None, 1)[-1]
            word = word.lstrip("(\"'“‘[")
            if word in abbreviations:
                continue
        piece = text[start:end].strip()
        if piece:
            out.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def split_sentences(p: Paragraph, abbreviations: Iterable[str] | None = None) -> Paragraph:
    abbrevs = default_abbreviations() if abbreviations is None else frozenset(abbreviations)
    return replace(p, sentences=tuple(_sentence_spans(p.text, abbrevs)))


def _words(text: str) -> list[str]:
    return re.findall(r"[^\W_]+", text.lower())


def stopword_ratios(text: str, english=None, french=None) -> tuple[float, float]:
    """Fraction of tokens that are English-only / French-only stopwords.

    Tokens on both lists (``a``, ``on``...) carry no language signal and are
    counted for neither.
    """
    en = default_stopwords("english") if english is None else english
    fr = default_stopwords("french") if french is None else french
    toks = _words(text)
    if not toks:
        return 0.0, 0.0
    n_en = sum(1 for t in toks if t in en and t not in fr)
    n_fr = sum(1 for t in toks if t in fr and t not in en)
    return n_en / len(toks), n_fr / len(toks)


def filter_language(paragraphs: list[Paragraph], keep: str = "english",
                    threshold: float = 0.05, english=None, french=None) -> list[Paragraph]:
    if keep != "english":
        raise DataError(f"unsupported language filter {keep!r}")
    kept = []
    for p in paragraphs:
        en, fr = stopword_ratios(p.text, english, french)
        if en < threshold and fr > en:
            continue
        kept.append(p)
    return kept


def build_document(doc_id: str, kind: str, raw: str, title: str | None = None,
                   abbreviations=None) -> Document:
    paras = [split_sentences(p, abbreviations) for p in segment_paragraphs(raw, doc_id)]
    return Document(doc_id, kind, tuple(paras), title)


def reindex(doc: Document, paragraphs: list[Paragraph]) -> Document:
    """Rebuild ``doc`` over a subset of its paragraphs, renumbering from 0."""
    paras = tuple(replace(p, index=i) for i, p in enumerate(paragraphs))
    return replace(doc, paragraphs=paras)


def ingest_collection(path: str | Path, kind: str, abbreviations=None) -> list[Document]:
    """Load a directory of UTF-8 text files (id = file stem) or a JSON-lines corpus."""
    path = Path(path)
    if kind not in KINDS:
        raise DataError(f"unknown document kind {kind!r}")
    if not path.exists():
        raise DataError(f"{path}: no such file or directory")
    if path.is_file():
        return read_corpus_jsonl(path, default_kind=kind, abbreviations=abbreviations)
    docs: dict[str, Document] = {}
    for f in sorted(path.iterdir()):
        if not f.is_file() or f.name.startswith("."):
            continue
        try:
            raw = f.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise DataError(f"{f.name}: not valid UTF-8 ({e.reason})") from None
        except OSError as e:
            raise DataError(f"{f.name}: unreadable ({e.strerror})") from None
        doc_id = f.stem
        if doc_id in docs:
            raise DataError(f"{f.name}: duplicate document id {doc_id!r}")
        docs[doc_id] = build_document(doc_id, kind, raw, abbreviations=abbreviations)
    return [docs[k] for k in sorted(docs)]


def read_corpus_jsonl(path: str | Path, default_kind: str = "case",
                      abbreviations=None) -> list[Document]:
    path = Path(path)
    docs: dict[str, Document] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as e:
        raise DataError(f"{path.name}: not valid UTF-8 ({e.reason})") from None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            doc_id = str(rec["id"])
            text = rec["text"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f"{path.name}:{lineno}: bad corpus record ({e})") from None
        if doc_id in docs:
            raise DataError(f"{path.name}:{lineno}: duplicate document id {doc_id!r}")
        docs[doc_id] = build_document(doc_id, rec.get("kind", default_kind), text,
                                      rec.get("title"), abbreviations)
    return [docs[k] for k in sorted(docs)]


def write_corpus_jsonl(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in docs:
            rec = {"id": d.id, "kind": d.kind, "text": d.text}
            if d.title is not None:
                rec["title"] = d.title
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
