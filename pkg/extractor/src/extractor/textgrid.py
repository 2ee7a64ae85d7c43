"""Minimal TextGrid interval-tier reader for forced-aligner output.

Supports the common long ("ooTextFile") format. Tiers named like
"phones"/"phone" and "words"/"word" are mapped onto the toolkit's two
alignment tiers; empty and silence labels are dropped.
"""

import re

SILENCE_LABELS = {"", "sil", "sp", "spn", "<eps>", ""}

_NUM = re.compile(r"(xmin|xmax)\s*=\s*([0-9.eE+-]+)")
_TEXT = re.compile(r'text\s*=\s*"(.*)"')
_NAME = re.compile(r'name\s*=\s*"(.*)"')


def read_textgrid(path):
    """Returns {tier_name: [(label, xmin, xmax), ...]}."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    tiers = {}
    name = None
    xmin = xmax = None
    for line in lines:
        m = _NAME.search(line)
        if m:
            name = m.group(1)
            tiers[name] = []
            xmin = xmax = None
            continue
        m = _NUM.search(line)
        if m:
            if m.group(1) == "xmin":
                xmin = float(m.group(2))
            else:
                xmax = float(m.group(2))
            continue
        m = _TEXT.search(line)
        if m and name is not None:
            if xmin is None or xmax is None:
                raise ValueError(
                    "%s: interval text before its bounds" % path)
            tiers[name].append((m.group(1), xmin, xmax))
            xmin = xmax = None
    return tiers


def to_tiers(textgrid_tiers):
    """Map raw TextGrid tiers to (phones, words) segment lists."""
    phones, words = [], []
    for name, segs in textgrid_tiers.items():
        key = name.strip().lower()
        if key in ("phone", "phones"):
            out = phones
        elif key in ("word", "words"):
            out = words
        else:
            continue
        for label, start, end in segs:
            if label.strip().lower() in SILENCE_LABELS:
                continue
            out.append((label.strip(), start, end))
    phones.sort(key=lambda s: s[1])
    words.sort(key=lambda s: s[1])
    return phones, words
