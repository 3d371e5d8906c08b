"""Chat round management: request ordering, truncation, atomicity."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import refimpl
from avatarkit.backends import Backend, BackendDescriptor
from avatarkit.conversation import (
    ConversationSession,
    Round,
    build_request,
    converse_round,
)
from avatarkit.errors import BackendProtocolError, InvariantViolation
from avatarkit.media import TextDoc


def session_with(pairs: list[tuple[str, str]], cap: int = 16) -> ConversationSession:
    session = ConversationSession(max_history=cap)
    for i, (user, reply) in enumerate(pairs, start=1):
        session.rounds.append(Round(index=i, user_text=TextDoc(user), reply_text=TextDoc(reply)))
    return session


def llm_backend(suite) -> Backend:
    return Backend(BackendDescriptor(name="llm"), mock_suite=suite)


def test_first_round_body_is_just_the_message():
    body = build_request(ConversationSession(), TextDoc("hello"))
    assert body == {"messages": [{"role": "user", "text": "hello"}]}


def test_history_is_newest_first():
    session = session_with([("w1", "r1"), ("w2", "r2"), ("w3", "r3")])
    body = build_request(session, TextDoc("w4"))
    assert body["messages"] == [
        {"role": "user", "text": "w4"},
        {"role": "pair", "user": "w3", "reply": "r3"},
        {"role": "pair", "user": "w2", "reply": "r2"},
        {"role": "pair", "user": "w1", "reply": "r1"},
    ]


def test_history_truncates_to_max_history():
    session = session_with([(f"w{i}", f"r{i}") for i in range(1, 6)], cap=2)
    body = build_request(session, TextDoc("w6"))
    assert [m["user"] for m in body["messages"][1:]] == ["w5", "w4"]
    assert len(body["messages"]) == 3


@settings(max_examples=60)
@given(
    st.integers(0, 20),
    st.integers(1, 16),
    st.text(alphabet="abcxyz ", min_size=1, max_size=8).filter(str.strip),
)
def test_history_ordering_property(rounds, cap, new_text):
    pairs = [(f"u{i}", f"a{i}") for i in range(1, rounds + 1)]
    body = build_request(session_with(pairs, cap=cap), TextDoc(new_text))
    assert body["messages"] == refimpl.history_reference(pairs, new_text, cap)
    assert len(body["messages"]) == 1 + min(rounds, cap)


def test_empty_and_whitespace_messages_rejected():
    session = ConversationSession()
    with pytest.raises(InvariantViolation):
        build_request(session, TextDoc(""))
    with pytest.raises(InvariantViolation):
        build_request(session, TextDoc("   \n\t"))


def test_round_indices_start_at_one():
    with pytest.raises(InvariantViolation):
        Round(index=0, user_text=TextDoc("a"), reply_text=TextDoc("b"))


def test_successful_rounds_grow_transcript_by_one(suite):
    session = ConversationSession()
    backend = llm_backend(suite)
    for n in range(1, 4):
        reply = converse_round(session, TextDoc(f"msg {n}"), backend)
        assert reply.text == f"echo[{n}]: msg {n}"
        assert [r.index for r in session.rounds] == list(range(1, n + 1))


def test_failed_round_leaves_transcript_unchanged(suite):
    session = ConversationSession()
    converse_round(session, TextDoc("seed"), llm_backend(suite))
    before = session.transcript()

    def erroring(desc, body):
        return {"status": "error", "request_id": body["request_id"], "error_code": "down"}

    broken = Backend(BackendDescriptor(name="llm", endpoint="http://llm.test"), transport=erroring)
    with pytest.raises(BackendProtocolError):
        converse_round(session, TextDoc("lost"), broken)
    assert session.transcript() == before


def test_non_string_reply_is_a_protocol_error_and_atomic():
    session = ConversationSession()

    def numeric_reply(desc, body):
        return {"status": "ok", "request_id": body["request_id"], "values": {"reply": 7}}

    backend = Backend(BackendDescriptor(name="llm", endpoint="http://llm.test"), transport=numeric_reply)
    with pytest.raises(BackendProtocolError):
        converse_round(session, TextDoc("hi"), backend)
    assert session.rounds == []


def test_transcript_shape():
    session = session_with([("q", "a")])
    assert session.transcript() == [{"index": 1, "user": "q", "reply": "a"}]
    assert session.next_index == 2
