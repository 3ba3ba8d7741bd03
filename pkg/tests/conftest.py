"""Shared corpus fixtures: a miniature train/test split with annotations."""

from __future__ import annotations

import json

import pytest

from odqagen.data import (
    AnnotationBundle,
    ArgSpan,
    EntityLink,
    Question,
    SrlFrame,
)
from odqagen.decompose import derive_atoms


def q(qid, text, answers, split="train"):
    return Question(id=qid, text=text, answers=tuple(answers), split=split)


def link(text, surface, title=None):
    """EntityLink over the first occurrence of surface in text."""
    start = text.lower().index(surface.lower())
    return EntityLink(start=start, end=start + len(surface), title=title or surface)


def arg(text, fragment, role="ARG1"):
    start = text.lower().index(fragment.lower())
    return ArgSpan(role=role, start=start, end=start + len(fragment))


def bundle(qid, text, verb_args=(), entities=()):
    """verb_args: iterable of (verb, [fragments]); entities: iterable of surface or (surface, title)."""
    frames = tuple(
        SrlFrame(verb=verb, args=tuple(arg(text, frag) for frag in frags))
        for verb, frags in verb_args
    )
    links = []
    for e in entities:
        surface, title = e if isinstance(e, tuple) else (e, None)
        links.append(link(text, surface, title))
    return AnnotationBundle(question_id=qid, frames=frames, entity_links=tuple(links))


TRAIN_SPECS = [
    # (id, text, answers, [(verb, [arg fragments])], [entity surfaces])
    ("t1", "who won the first nobel prize in physics", ["Wilhelm Rontgen"],
     [("won", ["the first nobel prize in physics"])], ["first nobel prize in physics"]),
    ("t2", "who plays the doctor in sons of anarchy", ["Kim Coates"],
     [("plays", ["the doctor", "in sons of anarchy"])], [("sons of anarchy", "Sons of Anarchy")]),
    ("t3", "who plays the mum in gavin and stacey", ["Alison Steadman"],
     [("plays", ["the mum", "in gavin and stacey"])], [("gavin and stacey", "Gavin & Stacey")]),
    ("t4", "when did the philadelphia eagles last win the super bowl", ["2018"],
     [("win", ["the philadelphia eagles", "the super bowl"])],
     [("philadelphia eagles", "Philadelphia Eagles"), ("super bowl", "Super Bowl")]),
    ("t5", "who sang guilty of love in the first degree", ["Bellamy Brothers"],
     [("sang", ["guilty of love in the first degree"])], [("guilty of love", "Guilty of Love")]),
    ("t6", "when is next fairy tail episode coming out", ["October 2018"],
     [("coming", ["next fairy tail episode"])], [("fairy tail", "Fairy Tail")]),
    ("t7", "who sings too much time on my hands", ["Styx"],
     [("sings", ["too much time on my hands"])], [("too much time on my hands", "Too Much Time on My Hands")]),
    ("t8", "what is the rate of corporation tax in the uk", ["19 percent", "19%"],
     [("is", ["the rate", "of corporation tax", "in the uk"])], [("uk", "United Kingdom")]),
]

TEST_SPECS = [
    # paraphrase of t1: shared answer, same entity, high character overlap
    ("s1", "who got the first nobel prize in physics", ["Wilhelm Rontgen"],
     [("got", ["the first nobel prize in physics"])], ["first nobel prize in physics"]),
    # recombination: all atoms seen across t2/t6, never together
    ("s2", "when is the next sons of anarchy episode coming out", ["September 2014"],
     [("coming", ["the next sons of anarchy episode"])], [("sons of anarchy", "Sons of Anarchy")]),
    # novel entity: "glory of love" unseen in train
    ("s3", "who wrote the song the glory of love", ["Billy Hill"],
     [("wrote", ["the song the glory of love"])], [("the glory of love", "The Glory of Love")]),
    # no category: unseen verb atom but familiar entity
    ("s4", "who directed sons of anarchy", ["Paris Barclay"],
     [("directed", ["sons of anarchy"])], [("sons of anarchy", "Sons of Anarchy")]),
]


def _materialize(specs, split):
    questions, bundles, atoms = [], {}, {}
    for qid, text, answers, verb_args, entities in specs:
        question = q(qid, text, answers, split)
        b = bundle(qid, text, verb_args, entities)
        questions.append(question)
        bundles[qid] = b
        atoms[qid] = derive_atoms(question, b)
    return questions, bundles, atoms


@pytest.fixture(scope="session")
def corpus():
    train_questions, train_bundles, train_atoms = _materialize(TRAIN_SPECS, "train")
    test_questions, test_bundles, test_atoms = _materialize(TEST_SPECS, "test")
    return {
        "train_questions": train_questions,
        "train_bundles": train_bundles,
        "train_atoms": train_atoms,
        "test_questions": test_questions,
        "test_bundles": test_bundles,
        "test_atoms": test_atoms,
    }


def write_questions_jsonl(path, questions):
    with open(path, "w", encoding="utf-8") as f:
        for question in questions:
            f.write(
                json.dumps(
                    {
                        "id": question.id,
                        "question": question.text,
                        "answers": list(question.answers),
                        "split": question.split,
                    }
                )
                + "\n"
            )


def write_annotations_jsonl(path, bundles):
    with open(path, "w", encoding="utf-8") as f:
        for b in bundles.values():
            f.write(
                json.dumps(
                    {
                        "id": b.question_id,
                        "srl": [
                            {
                                "verb": frame.verb,
                                "args": [{"role": a.role, "start": a.start, "end": a.end} for a in frame.args],
                            }
                            for frame in b.frames
                        ],
                        "entities": [
                            {"start": l.start, "end": l.end, "title": l.title} for l in b.entity_links
                        ],
                    }
                )
                + "\n"
            )
