"""Shift catalogs shipped with the package.

The default ward catalog has five AM shifts, six PM shifts and a single night
shift, with lengths between 6 and 12 hours. Clock times are representative
defaults; any catalog can be supplied through the instance file instead.
"""

from __future__ import annotations

from .types import Shift, ShiftCatalog, Slot


def _hm(text: str) -> int:
    h, m = text.split(":")
    return int(h) * 60 + int(m)


_DEFAULT = [
    ("A1", Slot.AM, "07:00", "15:00"),
    ("A2", Slot.AM, "07:00", "13:00"),
    ("A3", Slot.AM, "07:00", "19:00"),
    ("A4", Slot.AM, "08:00", "16:00"),
    ("A5", Slot.AM, "09:00", "17:00"),
    ("P1", Slot.PM, "13:00", "21:00"),
    ("P2", Slot.PM, "14:00", "22:00"),
    ("P3", Slot.PM, "12:00", "20:00"),
    ("P4", Slot.PM, "15:00", "23:00"),
    ("P5", Slot.PM, "16:00", "22:00"),
    ("P6", Slot.PM, "11:00", "23:00"),
    ("N1", Slot.N, "21:00", "07:00"),
]


def _build(rows) -> ShiftCatalog:
    shifts = []
    for sid, slot, start, end in rows:
        shift = Shift(sid, slot, _hm(start), _hm(end), 1.0)
        shifts.append(Shift(sid, slot, shift.start, shift.end, shift.duration_hours))
    return ShiftCatalog(tuple(shifts))


def default_catalog() -> ShiftCatalog:
    return _build(_DEFAULT)


def toy_catalog() -> ShiftCatalog:
    """One 8-hour shift per slot; used for enumerable test instances."""
    return _build([
        ("AM", Slot.AM, "07:00", "15:00"),
        ("PM", Slot.PM, "15:00", "23:00"),
        ("N", Slot.N, "23:00", "07:00"),
    ])
