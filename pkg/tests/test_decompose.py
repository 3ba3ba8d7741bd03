import pytest
from hypothesis import given
from hypothesis import strategies as st

from odqagen.data import AnnotationBundle, ArgSpan, EntityLink, Question, SrlFrame
from odqagen.decompose import (
    AtomSet,
    QuestionDecomposer,
    derive_atoms,
    extract_question_word,
    filter_other_args,
)

from conftest import arg, bundle, q


class TestQuestionWord:
    def test_no_wh_word(self):
        assert extract_question_word("Cast of Law & Order Special Victim Unit?") is None

    def test_who(self):
        assert extract_question_word("who sings every light in the house is on") == "who"

    def test_leftmost_only(self):
        assert extract_question_word("Where are the Winter Olympics and when do they start?") == "where"

    def test_how_many_collapses(self):
        assert extract_question_word("How many farmers are there in the USA") == "how"


class TestFilterOtherArgs:
    def test_entity_covered_arg_removed(self):
        text = "who is the owner of Reading Football Club"
        frames = (
            SrlFrame(verb="is", args=(arg(text, "the owner"), arg(text, "of Reading Football Club"))),
        )
        start = text.index("Reading")
        survivors = filter_other_args(frames, [(start, start + len("Reading Football Club"))], text)
        assert survivors == frozenset({"owner"})

    def test_all_args_covered(self):
        text = "who wrote Dune"
        frames = (SrlFrame(verb="wrote", args=(arg(text, "Dune"),)),)
        start = text.index("Dune")
        assert filter_other_args(frames, [(start, start + 4)], text) == frozenset()

    def test_unlinked_phrase_kept_whole(self):
        text = "who sings every light in the house is on"
        frames = (SrlFrame(verb="sings", args=(arg(text, "every light in the house is on"),)),)
        assert filter_other_args(frames, [], text) == frozenset({"every light in the house is on"})

    def test_split_fragment_needs_two_content_tokens(self):
        text = "who is the main character in Green eggs and ham"
        frames = (SrlFrame(verb="is", args=(arg(text, "the main character in Green eggs and ham"),)),)
        start = text.index("Green")
        survivors = filter_other_args(frames, [(start, len(text))], text)
        assert survivors == frozenset({"main character"})


class TestDeriveAtoms:
    def test_figure_style_decomposition(self):
        text = "Who is the main character in Green eggs and ham?"
        question = q("q1", text, ["Sam I Am"], "test")
        b = bundle(
            "q1",
            text,
            verb_args=[("is", ["the main character", "in Green eggs and ham"])],
            entities=[("Green eggs and ham", "Green Eggs and Ham")],
        )
        atoms = derive_atoms(question, b)
        assert atoms.question_word == "who"
        assert atoms.verbs == frozenset({"is"})
        assert atoms.entity_atoms == frozenset({"green eggs and ham"})
        assert atoms.other_args == frozenset({"main character"})

    def test_empty_annotations(self):
        question = q("q1", "when did it happen", ["now"], "test")
        atoms = derive_atoms(question, AnnotationBundle(question_id="q1", frames=(), entity_links=()))
        assert atoms.question_word == "when"
        assert atoms.verbs == frozenset()
        assert atoms.entity_atoms == frozenset()
        assert atoms.other_args == frozenset()

    def test_two_entity_question(self):
        text = "When did United States enter World War I"
        question = q("q4", text, ["1917"], "test")
        b = bundle(
            "q4",
            text,
            verb_args=[("enter", ["United States", "World War I"])],
            entities=[("United States", "United States"), ("World War I", "World War I")],
        )
        atoms = derive_atoms(question, b)
        assert atoms.question_word == "when"
        assert atoms.verbs == frozenset({"enter"})
        assert atoms.entity_atoms == frozenset({"united states", "world war i"})
        assert atoms.other_args == frozenset()

    def test_span_out_of_bounds_identifies_span(self):
        question = q("q1", "short", ["a"], "test")
        b = AnnotationBundle(
            question_id="q1",
            frames=(SrlFrame(verb="is", args=(ArgSpan(role="ARG1", start=2, end=40),)),),
            entity_links=(),
        )
        with pytest.raises(ValueError) as err:
            derive_atoms(question, b)
        assert "[2, 40)" in str(err.value)

    def test_determinism(self):
        text = "Who is the main character in Green eggs and ham?"
        question = q("q1", text, ["Sam"], "test")
        b = bundle("q1", text, [("is", ["the main character"])], ["Green eggs and ham"])
        assert derive_atoms(question, b) == derive_atoms(question, b)

    def test_entity_spans_never_in_other_args(self):
        # exclusivity: adding a link over an arg removes/splits it
        text = "who was the king of the north in game of thrones"
        question = q("q1", text, ["Jon Snow"], "test")
        without = derive_atoms(
            question, bundle("q1", text, [("was", ["the king", "of the north", "in game of thrones"])], [])
        )
        with_link = derive_atoms(
            question,
            bundle(
                "q1",
                text,
                [("was", ["the king", "of the north", "in game of thrones"])],
                [("game of thrones", "Game of Thrones")],
            ),
        )
        assert "game of thrones" in with_link.entity_atoms
        assert all("game of thrones" not in other for other in with_link.other_args)
        # coverage monotonicity: the link can only shrink other_args
        assert with_link.other_args <= without.other_args


@given(st.integers(0, 30), st.integers(1, 12))
def test_adding_entity_link_never_grows_other_args(start, width):
    text = "who sings every light in the house is on tonight"
    question = q("q1", text, ["somebody"], "test")
    frames = [("sings", ["every light in the house is on tonight"])]
    base = derive_atoms(question, bundle("q1", text, frames, []))
    end = min(start + width, len(text))
    if end <= start:
        return
    link = EntityLink(start=start, end=end, title="X")
    linked = derive_atoms(
        question,
        AnnotationBundle(
            question_id="q1",
            frames=bundle("q1", text, frames, []).frames,
            entity_links=(link,),
        ),
    )
    joined_base = " ".join(sorted(base.other_args))
    for other in linked.other_args:
        # every surviving fragment is drawn from the original argument text
        assert all(token in joined_base for token in other.split())


def test_transformer_wrapper(corpus):
    pairs = [
        (next(q for q in corpus["test_questions"] if q.id == qid), corpus["test_bundles"][qid])
        for qid in ("s1", "s2")
    ]
    decomposer = QuestionDecomposer()
    atom_sets = decomposer.fit(pairs).transform(pairs)
    assert [a.question_id for a in atom_sets] == ["s1", "s2"]
    assert decomposer.get_params() == {}


def test_atom_set_typed_atoms():
    atoms = AtomSet.build("q", "who", ["sing"], [("E1", "E1")], ["house"])
    assert ("qw", "who") in atoms.atoms()
    assert ("verb", "sing") in atoms.atoms()
    assert ("entity", "e1") in atoms.atoms()
    assert ("other", "house") in atoms.atoms()
