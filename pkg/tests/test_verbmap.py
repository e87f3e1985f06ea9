import io

import pytest

from framelm.frames import make_frame
from framelm.verbmap import VerbMap, build_verb_map, parse_lexicon


def test_funds_lexicon_entry():
    lexicon = parse_lexicon(["funds\tfunds,fund,funding,funded\n"])
    frames = [
        make_frame("funds", [("money", "A1")]),
        make_frame("fund", [("it", "A1")]),
        make_frame("funding", [("x", "A1")]),
        make_frame("funded", [("y", "A1")]),
    ]
    verb_map = build_verb_map(lexicon, frames)
    assert verb_map.verbs("funds") == {"funds", "fund", "funding", "funded"}
    assert verb_map.seen_verbs("funds") == {"funds", "fund", "funding", "funded"}


def test_unseen_forms_flagged():
    lexicon = {"sale": frozenset({"sell", "vend"})}
    frames = [make_frame("sell", [("art", "A1")])]
    verb_map = build_verb_map(lexicon, frames)
    assert verb_map.verbs("sale") == {"sell", "vend"}
    assert verb_map.seen_verbs("sale") == {"sell"}
    assert not verb_map.all_unseen("sale")
    ghost = build_verb_map({"loss": frozenset({"lose"})}, frames)
    assert ghost.all_unseen("loss")


def test_missing_nominal_yields_empty_entry():
    verb_map = build_verb_map({"sale": frozenset({"sell"})})
    assert verb_map.verbs("nothere") == frozenset()
    assert verb_map.seen_verbs("nothere") == frozenset()


def test_shared_verbs_stay_independent():
    lexicon = {"sale": frozenset({"sell"}), "selling": frozenset({"sell"})}
    verb_map = build_verb_map(lexicon, [make_frame("sell", [])])
    assert verb_map.verbs("sale") == {"sell"}
    assert verb_map.verbs("selling") == {"sell"}


def test_save_load_round_trip():
    frames = [make_frame("sell", [])]
    verb_map = build_verb_map({"sale": frozenset({"sell", "vend"})}, frames)
    buf = io.StringIO()
    verb_map.save(buf)
    loaded = VerbMap.load(io.StringIO(buf.getvalue()))
    assert loaded.forms == verb_map.forms
    assert loaded.seen == verb_map.seen


def test_parse_lexicon_errors():
    with pytest.raises(ValueError):
        parse_lexicon(["no tab separated fields"])
    assert parse_lexicon(["# comment", "", "a\tb"]) == {"a": frozenset({"b"})}
