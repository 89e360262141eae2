import json

import pytest

from citegraph.corpus import Corpus, Document


def make_doc(doc_id, title="", abstract="", authors=("anon",), venue="V",
             year=2005, references=()):
    return Document(id=doc_id, title=title, abstract=abstract, authors=tuple(authors),
                    venue=venue, year=year, references=tuple(references))


def text_corpus(texts, **kwargs):
    """Corpus of documents d000, d001, ... whose title holds the given text."""
    return Corpus([make_doc(f"d{i:03d}", title=text, **kwargs) for i, text in enumerate(texts)])


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def corpus_record(doc_id, title="t", abstract="a", authors=("anon",), venue="V",
                  year=2005, references=()):
    return {"id": doc_id, "title": title, "abstract": abstract, "authors": list(authors),
            "venue": venue, "year": year, "references": list(references)}


@pytest.fixture
def three_doc_corpus():
    """The hand-worked scoring fixture: documents 'a b', 'a c', 'a d'."""
    return text_corpus(["a b", "a c", "a d"])


@pytest.fixture
def chain_corpus():
    """A -> B -> C -> D -> E citation chain."""
    docs = []
    ids = ["A", "B", "C", "D", "E"]
    for i, doc_id in enumerate(ids):
        refs = (ids[i + 1],) if i + 1 < len(ids) else ()
        docs.append(make_doc(doc_id, title=f"doc {doc_id}", references=refs))
    return Corpus(docs)
