"""Pattern-matching utilities for run records and JSON reports"""

import dataclasses
import math
import re
from typing import Any, Dict, Mapping, Optional, Tuple, Union


class Operator:
    """Used as wildcards and operators when matching record values
    (see assertRecordMatch and match_dict)"""

    def __init__(self) -> None:
        pass


class _AnyStr(Operator):
    """Wildcard matching any string"""

    def __repr__(self) -> str:
        return "ANYSTR"


class _AnyInt(Operator):
    """Wildcard matching any integer (but not bools)"""

    def __repr__(self) -> str:
        return "ANYINT"


class _AnyFloat(Operator):
    """Wildcard matching any finite real number"""

    def __repr__(self) -> str:
        return "ANYFLOAT"


@dataclasses.dataclass(frozen=True)
class StrRe(Operator):
    regexp: str

    def __repr__(self) -> str:
        return f"StrRe(r'{self.regexp}')"


@dataclasses.dataclass(frozen=True)
class Approx(Operator):
    """Number within ``rel`` (relative) or ``abs`` (absolute) of ``value``"""

    value: float
    rel: float = 1e-9
    abs: float = 0.0

    def __repr__(self) -> str:
        return f"Approx({self.value!r}, rel={self.rel!r}, abs={self.abs!r})"


@dataclasses.dataclass(frozen=True)
class Between(Operator):
    """Number in the closed interval [low, high]"""

    low: float
    high: float

    def __repr__(self) -> str:
        return f"Between({self.low!r}, {self.high!r})"


@dataclasses.dataclass(frozen=True)
class Either(Operator):
    options: Tuple[Any, ...]

    def __init__(self, *options: Any):
        object.__setattr__(self, "options", options)

    def __repr__(self) -> str:
        return f"Either({', '.join(map(repr, self.options))})"


@dataclasses.dataclass(frozen=True)
class RemainingKeys(Operator):
    """Used in a dict pattern to match all remaining keys.
    May only be present once."""

    key: Any

    def __repr__(self) -> str:
        return f"RemainingKeys({self.key!r})"


class _Anything(Operator):
    def __repr__(self) -> str:
        return "ANYTHING"


ANYSTR = _AnyStr()
"""Singleton, spares two characters"""

ANYINT = _AnyInt()

ANYFLOAT = _AnyFloat()

ANYTHING = _Anything()
"""Matches any value, including None"""

ANYDICT = {RemainingKeys(ANYSTR): ANYTHING}
"""Matches any dictionary remainder, eg.
`match_dict(record, {"method": "ARBK", **ANYDICT})`"""


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def match_value(got: Any, expected: Union[Any, Operator]) -> bool:
    """Returns True iff ``got`` matches ``expected``, which is a plain value or an
    operator; nested mappings are compared with :func:`match_dict`."""
    if isinstance(expected, _Anything):
        return True
    elif isinstance(expected, _AnyStr):
        return isinstance(got, str)
    elif isinstance(expected, _AnyInt):
        return isinstance(got, int) and not isinstance(got, bool)
    elif isinstance(expected, _AnyFloat):
        return _is_number(got) and math.isfinite(got)
    elif isinstance(expected, StrRe):
        return isinstance(got, str) and bool(re.match(expected.regexp + "$", got))
    elif isinstance(expected, Approx):
        return _is_number(got) and math.isclose(
            got, expected.value, rel_tol=expected.rel, abs_tol=expected.abs
        )
    elif isinstance(expected, Between):
        return _is_number(got) and expected.low <= got <= expected.high
    elif isinstance(expected, Either):
        return any(match_value(got, option) for option in expected.options)
    elif isinstance(expected, Operator):
        raise NotImplementedError(f"Unsupported operator: {expected}")
    elif isinstance(expected, Mapping):
        return isinstance(got, Mapping) and match_dict(got, expected)
    else:
        return bool(got == expected)


def match_dict(got: Mapping[str, Any], expected: Mapping[Any, Any]) -> bool:
    """Returns True iff the dicts are equal.

    Values on the 'expected' side may be operators; keys may be plain strings,
    StrRe, or one RemainingKeys(...) matching every key not otherwise listed."""
    remaining: Dict[str, Any] = dict(got)  # shallow copy, as we will remove keys

    # Set to not-None if we find a RemainingKeys() operator in the dict keys
    remaining_keys_wildcard: Optional[Tuple[Any, Any]] = None

    for (expected_key, expected_value) in expected.items():
        if isinstance(expected_key, RemainingKeys):
            remaining_keys_wildcard = (expected_key.key, expected_value)
            continue
        for key in remaining:
            if match_value(key, expected_key) and match_value(
                remaining[key], expected_value
            ):
                remaining.pop(key)
                break
        else:
            # Found no (key, value) pair matching the request
            return False

    if remaining_keys_wildcard:
        (expected_key, expected_value) = remaining_keys_wildcard
        return all(
            match_value(key, expected_key) and match_value(value, expected_value)
            for (key, value) in remaining.items()
        )
    else:
        # There should be nothing left unmatched in the dict
        return remaining == {}
