"""Rule-based recognizer separating time expressions from the rest of a name.

Recognized forms, in priority order:

1. full dates ``yyyy-mm-dd``
2. year-months ``yyyy-mm``
3. ``MonthName d, yyyy`` and ``d MonthName yyyy`` (English month names)
4. year ranges ``yyyy-yy`` and ``yyyy-yyyy`` (hyphen, en dash, or slash)
5. standalone years 1000-2999

A match must cover a whole token: it may not touch a letter, digit, or a
joining character (hyphen, dash, slash, apostrophe) on either side, so the
"23" in "U-23" is never a year.  Overlaps resolve leftmost-longest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_MONTH = (
    "january|february|march|april|may|june|july|august|september|october|november|december"
)
_YEAR = r"[12]\d{3}"
_MM = r"(?:0[1-9]|1[0-2])"
_DD = r"(?:0[1-9]|[12]\d|3[01])"
_JOIN = r"\w'’\-–—/"

_TIME_RE = re.compile(
    rf"(?<![{_JOIN}])"
    rf"(?:"
    rf"{_YEAR}-{_MM}-{_DD}"  # full date
    rf"|{_YEAR}-{_MM}"  # year-month
    rf"|(?:{_MONTH})\s+\d{{1,2}},\s*{_YEAR}"  # May 14, 2010
    rf"|\d{{1,2}}\s+(?:{_MONTH})\s+{_YEAR}"  # 14 May 2010
    rf"|{_YEAR}[-–/](?:{_YEAR}|\d{{2}})"  # year range
    rf"|{_YEAR}"  # standalone year
    rf")"
    rf"(?![{_JOIN}])",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class TimeSplit:
    time: str
    remainder: str


def split_time(name: str) -> TimeSplit:
    """Split a name into its time expressions and everything else.

    All recognized expressions are concatenated with single spaces in order of
    appearance; the remainder is the input with those spans removed and
    whitespace collapsed.
    """
    pieces = []
    rest = []
    last = 0
    for match in _TIME_RE.finditer(name):
        pieces.append(match.group(0))
        rest.append(name[last : match.start()])
        last = match.end()
    rest.append(name[last:])
    remainder = " ".join(" ".join(rest).split())
    return TimeSplit(time=" ".join(pieces), remainder=remainder)
