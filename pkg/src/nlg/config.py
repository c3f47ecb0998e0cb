"""Flat key=value configuration for the experiment runner.

A config is a plain text file (or literal text containing newlines) of
``key = value`` lines.  ``#`` starts a comment, blank lines are skipped.
Values are whitespace/comma separated tokens; parentheses are ignored, so
``box = (0, 1)`` and ``box = 0 1`` read the same.  Numeric tokens accept
plain decimals, fractions like ``1/16`` (kept exact in binary since both
parts parse as floats), and ``inf``.

Every key must be globally known (see KNOWN_KEYS) and may appear at most
once; the experiment runners then restrict to their own subset so that a
key landing in the wrong experiment is reported with its line number
rather than silently ignored.
"""

import math
import os


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


#: every key any experiment understands; parse-time vocabulary.
KNOWN_KEYS = frozenset({
    "experiment",       # optional; must match the subcommand when present
    "kernel",           # kernel spec tokens, e.g.  box 0.5 1
    "family",           # integrand family name
    "levels", "phase",  # periodic-coefficient data
    "d", "m",           # dimensions
    "box", "h", "h_factor",
    "eps", "T", "T_max",
    "datum", "L", "zeta", "nu", "x",
    "r", "s", "eps_factors", "schedule",
    "restarts", "tau", "samples", "seed",
})


def parse_scalar(token):
    """One numeric token: decimal, a/b fraction, or inf."""
    t = str(token).strip()
    if t.lower() in ("inf", "+inf"):
        return math.inf
    if "/" in t:
        num, _, den = t.partition("/")
        try:
            num = float(num)
            den = float(den)
        except ValueError:
            raise ConfigError("bad fraction %r" % token)
        if den == 0.0:
            raise ConfigError("zero denominator in %r" % token)
        return num / den
    try:
        return float(t)
    except ValueError:
        raise ConfigError("expected a number, got %r" % token)


def _tokens(raw):
    cleaned = raw.replace("(", " ").replace(")", " ").replace(",", " ")
    return [t for t in cleaned.split() if t]


def parse_config(source):
    """Parse a config file path, or literal config text.

    Text is recognised by containing a newline or, failing that, an ``=``
    when no file of that name exists.  Returns an ExperimentConfig.
    """
    if source is None or source == "":
        text = ""
    elif "\n" in source:
        text = source
    elif os.path.exists(source):
        with open(source, "r") as fh:
            text = fh.read()
    elif "=" in source:
        text = source
    else:
        raise ConfigError("no such config file: %r" % source)

    entries = {}
    lines = {}
    for ln, rawline in enumerate(text.splitlines(), 1):
        stripped = rawline.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("line %d: expected key = value, got %r"
                              % (ln, stripped))
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError("line %d: unknown key %r" % (ln, key))
        if key in entries:
            raise ConfigError("line %d: duplicate key %r (first set on "
                              "line %d)" % (ln, key, lines[key]))
        if not value:
            raise ConfigError("line %d: empty value for %r" % (ln, key))
        entries[key] = value
        lines[key] = ln
    return ExperimentConfig(entries, lines)


class ExperimentConfig:
    """Parsed key=value entries with per-key line numbers for messages."""

    def __init__(self, entries=None, lines=None):
        self.entries = dict(entries or {})
        self.lines = dict(lines or {})

    def has(self, key):
        return key in self.entries

    def line(self, key):
        return self.lines.get(key, 0)

    def _fail(self, key, msg):
        ln = self.line(key)
        if ln:
            raise ConfigError("line %d: key %r: %s" % (ln, key, msg))
        raise ConfigError("key %r: %s" % (key, msg))

    # -- typed getters ----------------------------------------------------

    def get_str(self, key, default=None, choices=None):
        if key not in self.entries:
            return default
        value = self.entries[key]
        if choices is not None and value not in choices:
            self._fail(key, "got %r, expected one of %s"
                       % (value, ", ".join(sorted(choices))))
        return value

    def get_scalar(self, key, default=None):
        if key not in self.entries:
            return default
        toks = _tokens(self.entries[key])
        if len(toks) != 1:
            self._fail(key, "expected a single number, got %r"
                       % self.entries[key])
        try:
            return parse_scalar(toks[0])
        except ConfigError as exc:
            self._fail(key, str(exc))

    def get_int(self, key, default=None):
        value = self.get_scalar(key, None)
        if value is None:
            return default
        if not math.isfinite(value) or value != int(value):
            self._fail(key, "expected an integer, got %r" % self.entries[key])
        return int(value)

    def get_tuple(self, key, default=()):
        if key not in self.entries:
            return tuple(default)
        toks = _tokens(self.entries[key])
        if not toks:
            self._fail(key, "expected numbers")
        try:
            return tuple(parse_scalar(t) for t in toks)
        except ConfigError as exc:
            self._fail(key, str(exc))

    # -- schema and geometry helpers --------------------------------------

    def restrict(self, allowed, experiment):
        """Reject keys that this experiment does not understand."""
        allowed = set(allowed) | {"experiment", "seed"}
        for key in self.entries:
            if key not in allowed:
                self._fail(key, "not understood by experiment %r" % experiment)

    def grid_box(self, d, default=None):
        """The 'box' key as ((a, b), ...) with one interval per axis."""
        if "box" not in self.entries:
            return default
        vals = self.get_tuple("box")
        if len(vals) != 2 * d:
            self._fail("box", "expected %d numbers for d=%d, got %d"
                       % (2 * d, d, len(vals)))
        box = tuple((vals[2 * i], vals[2 * i + 1]) for i in range(d))
        for a, b in box:
            if not b > a:
                self._fail("box", "empty side [%r, %r]" % (a, b))
        return box

    def check_spacing(self, box, h, key="h"):
        """Every side of `box` must be an integer number of cells of size h."""
        if not (h > 0) or not math.isfinite(h):
            self._fail(key, "spacing must be positive and finite, got %r" % h)
        for a, b in box:
            ratio = (b - a) / h
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                self._fail(key, "spacing does not divide side: h=%r on "
                           "[%r, %r]" % (h, a, b))
        return h

    def get_kernel_spec(self, default):
        """The 'kernel' key as a (name, param, ...) tuple."""
        if "kernel" not in self.entries:
            return tuple(default)
        toks = _tokens(self.entries["kernel"])
        if not toks:
            self._fail("kernel", "expected a kernel name")
        name = toks[0]
        try:
            params = tuple(parse_scalar(t) for t in toks[1:])
        except ConfigError as exc:
            self._fail("kernel", str(exc))
        return (name,) + params
