"""Run configuration: a small sectioned key=value file format.

Example::

    [semigroup]
    label = pair
    generator = exp(0.25*z)
    generator = iter(exp(0.25*z), 2)

    [grid]          # window and resolution
    re_min = -4
    re_max = 4
    im_min = -4
    im_max = 4
    nx = 256
    ny = 256

Repeating the generator key appends; '#' starts a comment outside
quotes; values may be double-quoted to keep spaces.  Binding values are
constant expressions in the map DSL ("2*pi", "0.5i"), so config files
never need a separate complex-number syntax.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from . import expr as ex
from .escape import GridSpec
from .numerics import EvalOverflow, OrbitParams, compile_tape, run_tape
from .semigroup import DEFAULT_WORD_CAP, Semigroup
from .singular import DEFAULT_CLOUD_DEPTH, DEFAULT_SEPARATION_PIXELS

DEFAULT_GRID = GridSpec(-4.0, 4.0, -4.0, 4.0, 512, 512)
DEFAULT_MAX_WORD_LENGTH = 3

_KNOWN_KEYS = {
    "semigroup": {"label", "generator"},
    "bindings": None,  # free-form
    "grid": {"re_min", "re_max", "im_min", "im_max", "nx", "ny"},
    "orbit": {"max_iter", "escape_radius", "confirm_count"},
    "words": {"max_length", "cap"},
    "cloud": {"depth"},
    "hyperbolicity": {"separation_pixels"},
    "output": {"report", "image"},
    "experiment": None,  # free-form, consumed by individual experiments
}


class ConfigError(ValueError):
    """Malformed configuration file or values out of contract."""


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    for ch in line:
        if ch == '"':
            in_quote = not in_quote
        if ch == "#" and not in_quote:
            break
        out.append(ch)
    return "".join(out)


def parse_config_text(text: str) -> dict[str, list[tuple[str, str]]]:
    """Sections to ordered (key, value) pairs; repeated keys are kept."""
    sections: dict[str, list[tuple[str, str]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError(f"line {lineno}: empty section name")
            sections.setdefault(current, [])
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if value.startswith('"') and value.endswith('"') and len(value) >= 2:
            value = value[1:-1]
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        sections[current].append((key, value))
    return sections


@dataclass
class RunConfig:
    label: str = "S"
    generator_sources: list[str] = field(default_factory=list)
    bindings: dict[str, complex] = field(default_factory=dict)
    grid: GridSpec = DEFAULT_GRID
    orbit: OrbitParams = OrbitParams()
    max_word_length: int = DEFAULT_MAX_WORD_LENGTH
    word_cap: int = DEFAULT_WORD_CAP
    cloud_depth: int = DEFAULT_CLOUD_DEPTH
    separation_pixels: float = DEFAULT_SEPARATION_PIXELS
    report_path: str | None = None
    image_path: str | None = None
    experiment_options: dict[str, str] = field(default_factory=dict)

    def semigroup(self) -> Semigroup:
        if not self.generator_sources:
            raise ConfigError("no generators configured")
        gens = []
        for src in self.generator_sources:
            try:
                gens.append(ex.parse(src, self.bindings))
            except ex.ExprError as err:
                raise ConfigError(f"generator {src!r}: {err}") from err
        try:
            return Semigroup(tuple(gens), label=self.label)
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def effective_dict(self) -> dict:
        """Full config echo with every default explicit, for reports."""
        return {
            "label": self.label,
            "generators": list(self.generator_sources),
            "bindings": {
                name: {"re": v.real, "im": v.imag}
                for name, v in sorted(self.bindings.items())
            },
            "grid": self.grid.to_dict(),
            "orbit": {
                "max_iter": self.orbit.max_iter,
                "escape_radius": self.orbit.escape_radius,
                "confirm_count": self.orbit.confirm_count,
            },
            "words": {"max_length": self.max_word_length, "cap": self.word_cap},
            "cloud": {"depth": self.cloud_depth},
            "hyperbolicity": {"separation_pixels": self.separation_pixels},
            "approximation": {
                "escaping_definition": (
                    "pixel escapes only if every word of length <= max_length "
                    "escapes; escape needs confirm_count further iterates above "
                    "escape_radius with nondecreasing modulus; float overflow "
                    "counts as escape"
                ),
                "max_word_length": self.max_word_length,
                "max_iter": self.orbit.max_iter,
                "escape_radius": self.orbit.escape_radius,
                "confirm_count": self.orbit.confirm_count,
            },
        }


def _constant_from_dsl(source: str, where: str) -> complex:
    try:
        tree = ex.parse(source)
    except ex.ExprError as err:
        raise ConfigError(f"{where}: {err}") from err
    if ex.contains_variable(tree):
        raise ConfigError(f"{where}: value must not mention z")
    try:
        return run_tape(compile_tape(ex.normalize(tree)), 0j)
    except EvalOverflow:
        raise ConfigError(f"{where}: constant overflows") from None


def _to_int(value: str, where: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {value!r}") from None


def _to_float(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None


def config_from_sections(sections: dict[str, list[tuple[str, str]]]) -> RunConfig:
    for name, pairs in sections.items():
        if name not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{name}]")
        allowed = _KNOWN_KEYS[name]
        if allowed is None:
            continue
        for key, _ in pairs:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
        if name != "semigroup":
            seen = set()
            for key, _ in pairs:
                if key in seen:
                    raise ConfigError(f"repeated key {key!r} in [{name}]")
                seen.add(key)

    cfg = RunConfig()

    def scalar(section: str, key: str) -> str | None:
        for k, v in sections.get(section, []):
            if k == key:
                return v
        return None

    if "semigroup" in sections:
        label = scalar("semigroup", "label")
        if label is not None:
            cfg.label = label
        cfg.generator_sources = [v for k, v in sections["semigroup"] if k == "generator"]
    if "bindings" in sections:
        bindings = {}
        for key, value in sections["bindings"]:
            if key in bindings:
                raise ConfigError(f"repeated binding {key!r}")
            bindings[key] = _constant_from_dsl(value, f"binding {key}")
        try:
            cfg.bindings = ex.validate_bindings(bindings)
        except ex.ExprError as err:
            raise ConfigError(str(err)) from err
    if "grid" in sections:
        g = {k: v for k, v in sections["grid"]}
        grid_kwargs = {
            "re_min": _to_float(g.get("re_min", "-4"), "grid.re_min"),
            "re_max": _to_float(g.get("re_max", "4"), "grid.re_max"),
            "im_min": _to_float(g.get("im_min", "-4"), "grid.im_min"),
            "im_max": _to_float(g.get("im_max", "4"), "grid.im_max"),
            "nx": _to_int(g.get("nx", "512"), "grid.nx"),
            "ny": _to_int(g.get("ny", "512"), "grid.ny"),
        }
        try:
            cfg.grid = GridSpec(**grid_kwargs)
        except ValueError as err:
            raise ConfigError(f"grid: {err}") from err
    if "orbit" in sections:
        o = {k: v for k, v in sections["orbit"]}
        try:
            cfg.orbit = OrbitParams(
                max_iter=_to_int(o.get("max_iter", "200"), "orbit.max_iter"),
                escape_radius=_to_float(o.get("escape_radius", "1e12"), "orbit.escape_radius"),
                confirm_count=_to_int(o.get("confirm_count", "3"), "orbit.confirm_count"),
            )
        except ValueError as err:
            raise ConfigError(f"orbit: {err}") from err
    if "words" in sections:
        w = {k: v for k, v in sections["words"]}
        if "max_length" in w:
            cfg.max_word_length = _to_int(w["max_length"], "words.max_length")
        if "cap" in w:
            cfg.word_cap = _to_int(w["cap"], "words.cap")
        if cfg.max_word_length < 1 or cfg.word_cap < 1:
            raise ConfigError("words: max_length and cap must be >= 1")
    if "cloud" in sections:
        c = {k: v for k, v in sections["cloud"]}
        if "depth" in c:
            cfg.cloud_depth = _to_int(c["depth"], "cloud.depth")
            if cfg.cloud_depth < 1:
                raise ConfigError("cloud.depth must be >= 1")
    if "hyperbolicity" in sections:
        h = {k: v for k, v in sections["hyperbolicity"]}
        if "separation_pixels" in h:
            cfg.separation_pixels = _to_float(h["separation_pixels"],
                                              "hyperbolicity.separation_pixels")
            if cfg.separation_pixels < 0:
                raise ConfigError("hyperbolicity.separation_pixels must be >= 0")
    if "output" in sections:
        cfg.report_path = scalar("output", "report")
        cfg.image_path = scalar("output", "image")
    if "experiment" in sections:
        cfg.experiment_options = {k: v for k, v in sections["experiment"]}
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return config_from_sections(parse_config_text(text))


def with_grid(cfg: RunConfig, nx: int, ny: int | None = None) -> RunConfig:
    """Copy of cfg at a different resolution (same window)."""
    return replace(cfg, grid=replace(cfg.grid, nx=nx, ny=ny if ny is not None else nx))
