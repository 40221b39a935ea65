"""Fragment-based paper store: living documents assembled from revisioned
fragments linked into a rooted DAG, with revision-pinned anchors.

Whole-store export/import (zip of blobs plus a JSON manifest of papers,
revisions, links and anchors) supports desk-scale corpus tests.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Union

from . import errors
from .errors import PanvasError

ROOT = "ROOT"


class PaperStatus(str, Enum):
    DRAFT = "DRAFT"
    LIVING = "LIVING"
    FROZEN = "FROZEN"


class FragmentKind(str, Enum):
    PARAGRAPH = "PARAGRAPH"
    SECTION = "SECTION"
    FIGURE = "FIGURE"
    CHART = "CHART"
    TABLE = "TABLE"


@dataclass
class Paper:
    paper_id: str
    title: str
    author_ids: tuple[str, ...]
    status: PaperStatus
    created_at: int


@dataclass(frozen=True)
class FragmentRevision:
    revision: int            # dense from 1
    text: Optional[str]      # inline for textual content
    blob_digest: Optional[str]  # content-addressed for binary content


@dataclass
class Fragment:
    fragment_id: str
    paper_id: str
    kind: FragmentKind
    revisions: list[FragmentRevision] = field(default_factory=list)

    @property
    def revision(self) -> int:
        return len(self.revisions)

    def at(self, revision: int) -> FragmentRevision:
        if not 1 <= revision <= len(self.revisions):
            raise PanvasError(errors.OUT_OF_RANGE, f"no revision {revision}")
        return self.revisions[revision - 1]


@dataclass(frozen=True)
class FragmentLink:
    parent: str              # fragment id or ROOT
    child: str
    order_index: int


@dataclass(frozen=True)
class Anchor:
    anchor_id: str
    fragment_id: str
    revision: int
    span: Optional[tuple[int, int]]


class PaperStore:
    def __init__(self, max_fragment_bytes: int = 10 * 1024 * 1024, clock: Callable[[], int] = lambda: 0):
        self.max_fragment_bytes = max_fragment_bytes
        self._clock = clock
        self.papers: dict[str, Paper] = {}
        self.fragments: dict[str, Fragment] = {}
        self.links: dict[str, list[FragmentLink]] = {}   # paper -> edges
        self.anchors: dict[str, Anchor] = {}
        self.blobs: dict[str, bytes] = {}
        self._next_paper = 1
        self._next_fragment = 1
        self._next_anchor = 1

    # -- papers -------------------------------------------------------------

    def submit_paper(self, title: str, authors: list[str]) -> Paper:
        if not title or not title.strip():
            raise PanvasError(errors.VALIDATION, "title must be non-empty")
        if not authors:
            raise PanvasError(errors.VALIDATION, "a paper needs at least one author")
        paper = Paper(f"p{self._next_paper}", title, tuple(authors), PaperStatus.LIVING, self._clock())
        self._next_paper += 1
        self.papers[paper.paper_id] = paper
        self.links[paper.paper_id] = []
        return paper

    def paper(self, paper_id: str) -> Paper:
        paper = self.papers.get(paper_id)
        if paper is None:
            raise PanvasError(errors.UNKNOWN_PAPER, f"no paper {paper_id}")
        return paper

    def freeze_paper(self, paper_id: str) -> Paper:
        paper = self.paper(paper_id)
        paper.status = PaperStatus.FROZEN
        return paper

    # -- fragments ----------------------------------------------------------

    def _store_content(self, content: Union[str, bytes], revision: int) -> FragmentRevision:
        if isinstance(content, bytes):
            if not content:
                raise PanvasError(errors.EMPTY_CONTENT, "fragment content must be non-empty")
            if len(content) > self.max_fragment_bytes:
                raise PanvasError(errors.CONTENT_TOO_LARGE, f"fragment exceeds {self.max_fragment_bytes} bytes")
            digest = hashlib.sha256(content).hexdigest()
            self.blobs[digest] = content
            return FragmentRevision(revision, None, digest)
        if not content:
            raise PanvasError(errors.EMPTY_CONTENT, "fragment content must be non-empty")
        if len(content.encode()) > self.max_fragment_bytes:
            raise PanvasError(errors.CONTENT_TOO_LARGE, f"fragment exceeds {self.max_fragment_bytes} bytes")
        return FragmentRevision(revision, content, None)

    def add_fragment(self, paper_id: str, kind: FragmentKind, content: Union[str, bytes]) -> Fragment:
        paper = self.paper(paper_id)
        if paper.status is not PaperStatus.LIVING:
            raise PanvasError(errors.PAPER_FROZEN, f"paper {paper_id} does not accept fragments")
        fragment = Fragment(f"f{self._next_fragment}", paper_id, kind)
        self._next_fragment += 1
        fragment.revisions.append(self._store_content(content, 1))
        self.fragments[fragment.fragment_id] = fragment
        return fragment

    def fragment(self, fragment_id: str) -> Fragment:
        fragment = self.fragments.get(fragment_id)
        if fragment is None:
            raise PanvasError(errors.UNKNOWN_FRAGMENT, f"no fragment {fragment_id}")
        return fragment

    def revise_fragment(self, fragment_id: str, content: Union[str, bytes]) -> Fragment:
        fragment = self.fragment(fragment_id)
        paper = self.paper(fragment.paper_id)
        if paper.status is not PaperStatus.LIVING:
            raise PanvasError(errors.PAPER_FROZEN, f"paper {paper.paper_id} does not accept revisions")
        fragment.revisions.append(self._store_content(content, fragment.revision + 1))
        return fragment

    def content_bytes(self, fragment_id: str, revision: int) -> bytes:
        rev = self.fragment(fragment_id).at(revision)
        if rev.blob_digest is not None:
            return self.blobs[rev.blob_digest]
        return rev.text.encode()

    # -- links ------------------------------------------------------------------

    def _children(self, paper_id: str, parent: str) -> list[FragmentLink]:
        return [l for l in self.links[paper_id] if l.parent == parent]

    def _reachable(self, paper_id: str, start: str, goal: str) -> bool:
        stack = [start]
        seen = set()
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(l.child for l in self._children(paper_id, node))
        return False

    def link_fragment(self, parent: Optional[str], child: str, order_index: int) -> FragmentLink:
        child_frag = self.fragment(child)
        paper_id = child_frag.paper_id
        if parent is None or parent == ROOT:
            parent = ROOT
        else:
            parent_frag = self.fragment(parent)
            if parent_frag.paper_id != paper_id:
                raise PanvasError(errors.CROSS_PAPER_LINK, "parent and child belong to different papers")
        if any(l.parent == parent and l.child == child for l in self.links[paper_id]):
            raise PanvasError(errors.DUPLICATE_LINK, f"edge {parent}->{child} already exists")
        if parent != ROOT and (parent == child or self._reachable(paper_id, child, parent)):
            raise PanvasError(errors.CYCLE_DETECTED, f"edge {parent}->{child} would close a cycle")
        link = FragmentLink(parent, child, order_index)
        self.links[paper_id].append(link)
        return link

    def assemble_document(self, paper_id: str) -> list[tuple[Fragment, int]]:
        """Deterministic depth-first assembly from the root; children ordered
        by (order_index, fragment_id); shared fragments appear once, at their
        first visit."""
        self.paper(paper_id)
        out: list[tuple[Fragment, int]] = []
        seen: set[str] = set()

        def visit(parent: str) -> None:
            children = sorted(self._children(paper_id, parent), key=lambda l: (l.order_index, l.child))
            for link in children:
                if link.child in seen:
                    continue
                seen.add(link.child)
                fragment = self.fragments[link.child]
                out.append((fragment, fragment.revision))
                visit(link.child)

        visit(ROOT)
        return out

    # -- anchors ----------------------------------------------------------------

    def create_anchor(self, fragment_id: str, revision: int, span: Optional[tuple[int, int]] = None) -> Anchor:
        fragment = self.fragment(fragment_id)
        rev = fragment.at(revision)
        if span is not None:
            start, end = span
            length = len(rev.text) if rev.text is not None else len(self.blobs[rev.blob_digest])
            if not (0 <= start <= end <= length):
                raise PanvasError(errors.OUT_OF_RANGE, f"span {span} outside content of length {length}")
            span = (start, end)
        anchor = Anchor(f"anc{self._next_anchor}", fragment_id, revision, span)
        self._next_anchor += 1
        self.anchors[anchor.anchor_id] = anchor
        return anchor

    def resolve_anchor(self, anchor_id: str) -> tuple[Fragment, int, Optional[str]]:
        """Anchors never float: always the exact revision they were created on."""
        anchor = self.anchors.get(anchor_id)
        if anchor is None:
            raise PanvasError(errors.UNKNOWN_ANCHOR, f"no anchor {anchor_id}")
        fragment = self.fragment(anchor.fragment_id)
        rev = fragment.at(anchor.revision)
        span_text = None
        if anchor.span is not None and rev.text is not None:
            start, end = anchor.span
            span_text = rev.text[start:end]
        return fragment, anchor.revision, span_text

    # -- archive export/import ----------------------------------------------------

    def export_archive(self) -> bytes:
        """Zip of all binary blobs plus manifest.json covering papers,
        fragment revisions, links and anchors."""
        manifest = {
            "papers": [{
                "paper_id": p.paper_id, "title": p.title,
                "authors": list(p.author_ids), "status": p.status.value,
                "created_at": p.created_at,
            } for p in self.papers.values()],
            "fragments": [{
                "fragment_id": f.fragment_id, "paper_id": f.paper_id,
                "kind": f.kind.value,
                "revisions": [{
                    "revision": r.revision, "text": r.text, "blob_digest": r.blob_digest,
                } for r in f.revisions],
            } for f in self.fragments.values()],
            "links": [{
                "paper_id": paper_id, "parent": link.parent, "child": link.child,
                "order_index": link.order_index,
            } for paper_id, links in self.links.items() for link in links],
            "anchors": [{
                "anchor_id": a.anchor_id, "fragment_id": a.fragment_id,
                "revision": a.revision, "span": list(a.span) if a.span else None,
            } for a in self.anchors.values()],
        }
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.writestr("manifest.json", json.dumps(manifest, sort_keys=True, indent=1))
            for digest, blob in sorted(self.blobs.items()):
                archive.writestr(f"blobs/{digest}", blob)
        return buffer.getvalue()

    def import_archive(self, data: bytes) -> None:
        """Load an exported archive into this (empty) store, preserving ids."""
        if self.papers:
            raise PanvasError(errors.VALIDATION, "import requires an empty store")
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as archive:
                manifest = json.loads(archive.read("manifest.json"))
                for name in archive.namelist():
                    if name.startswith("blobs/"):
                        blob = archive.read(name)
                        digest = name.removeprefix("blobs/")
                        if hashlib.sha256(blob).hexdigest() != digest:
                            raise PanvasError(errors.VALIDATION, f"blob {digest} corrupt")
                        self.blobs[digest] = blob
        except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
            raise PanvasError(errors.VALIDATION, f"unreadable archive: {exc}")
        for entry in manifest["papers"]:
            paper = Paper(entry["paper_id"], entry["title"], tuple(entry["authors"]),
                          PaperStatus(entry["status"]), entry["created_at"])
            self.papers[paper.paper_id] = paper
            self.links[paper.paper_id] = []
        for entry in manifest["fragments"]:
            fragment = Fragment(entry["fragment_id"], entry["paper_id"],
                                FragmentKind(entry["kind"]))
            for rev in entry["revisions"]:
                fragment.revisions.append(FragmentRevision(
                    rev["revision"], rev["text"], rev["blob_digest"]))
            self.fragments[fragment.fragment_id] = fragment
        for entry in manifest["links"]:
            self.links[entry["paper_id"]].append(FragmentLink(
                entry["parent"], entry["child"], entry["order_index"]))
        for entry in manifest["anchors"]:
            span = tuple(entry["span"]) if entry["span"] else None
            self.anchors[entry["anchor_id"]] = Anchor(
                entry["anchor_id"], entry["fragment_id"], entry["revision"], span)
        self._next_paper = 1 + max(
            (int(p[1:]) for p in self.papers if p[1:].isdigit()), default=0)
        self._next_fragment = 1 + max(
            (int(f[1:]) for f in self.fragments if f[1:].isdigit()), default=0)
        self._next_anchor = 1 + max(
            (int(a[3:]) for a in self.anchors if a[3:].isdigit()), default=0)
