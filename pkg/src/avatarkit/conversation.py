"""Round-based chat with a language-model backend.

The transcript is stored oldest-first, but the request body is built
newest-first: the pending user message leads, followed by completed
rounds from most recent back to round 1, truncated to ``max_history``.
A failed round never mutates the transcript.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backends import Backend
from .errors import BackendProtocolError, InvariantViolation
from .media import TextDoc


@dataclass(frozen=True)
class Round:
    """One completed user/reply exchange; indices count from 1."""

    index: int
    user_text: TextDoc
    reply_text: TextDoc

    def __post_init__(self) -> None:
        if self.index < 1:
            raise InvariantViolation("round index must be >= 1")


@dataclass
class ConversationSession:
    rounds: list[Round] = field(default_factory=list)
    max_history: int = 16

    @property
    def next_index(self) -> int:
        return len(self.rounds) + 1

    def transcript(self) -> list[dict]:
        return [
            {"index": r.index, "user": r.user_text.text, "reply": r.reply_text.text}
            for r in self.rounds
        ]


def build_request(session: ConversationSession, user_text: TextDoc) -> dict:
    """JSON body for the next round: pending message, then history newest-first."""
    if not user_text.text.strip():
        raise InvariantViolation("user message must be nonempty")
    messages: list[dict] = [{"role": "user", "text": user_text.text}]
    recent = session.rounds[-session.max_history:]
    for completed in reversed(recent):
        messages.append(
            {
                "role": "pair",
                "user": completed.user_text.text,
                "reply": completed.reply_text.text,
            }
        )
    return {"messages": messages}


def converse_round(
    session: ConversationSession, user_text: TextDoc, backend: Backend
) -> TextDoc:
    """Run one round; the transcript grows by exactly one on success."""
    body = build_request(session, user_text)
    response = backend.invoke("llm", params=body)
    reply = response.values.get("reply")
    if not isinstance(reply, str) or not reply:
        raise BackendProtocolError("llm response must carry a nonempty string reply")
    reply_doc = TextDoc(text=reply)
    session.rounds.append(
        Round(index=session.next_index, user_text=user_text, reply_text=reply_doc)
    )
    return reply_doc
