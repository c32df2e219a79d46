"""Language profiles: the per-language knobs that control extraction."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

DEFAULT_TERMINATORS = frozenset(".!?")

BUILTIN_PROFILE_NAMES = ("en", "fr", "pt")


@dataclass(frozen=True)
class LanguageProfile:
    """Extraction settings for one language.

    min_gram and max_gram bound the length, in tokens, of the context
    windows taken immediately left and right of a mention.  max_relation_gap
    bounds how many tokens may lie between two mentions that still form a
    pair.  connector_words are lowercase tokens allowed strictly inside a
    multiword capitalized name (e.g. "Universidade de Lisboa").
    """

    name: str
    min_gram: int
    max_gram: int
    max_relation_gap: int = 10
    connector_words: frozenset[str] = frozenset()
    sentence_terminators: frozenset[str] = DEFAULT_TERMINATORS
    case_sensitive_matching: bool = True

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("profile name must be non-empty")
        if not 1 <= self.min_gram <= self.max_gram:
            raise ValueError(
                f"need 1 <= min_gram <= max_gram, got {self.min_gram}..{self.max_gram}"
            )
        if self.max_relation_gap < 1:
            raise ValueError("max_relation_gap must be >= 1")


class ProfileError(ValueError):
    """Raised for malformed profile files."""


_BOOLEANS = {"true": True, "false": False, "1": True, "0": False}


def parse_profile(text: str) -> LanguageProfile:
    """Parse the key=value profile format.

    Recognized keys are exactly the LanguageProfile fields.  Lines starting
    with '#' and blank lines are ignored.  connector_words is a
    space-separated word list; sentence_terminators is a bare run of
    characters.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ProfileError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in ("min_gram", "max_gram", "max_relation_gap"):
            try:
                values[key] = int(value.strip())
            except ValueError:
                raise ProfileError(f"line {lineno}: {key} must be an integer") from None
        elif key == "connector_words":
            values[key] = frozenset(value.split())
        elif key == "sentence_terminators":
            values[key] = frozenset(value.strip())
        elif key == "case_sensitive_matching":
            flag = _BOOLEANS.get(value.strip().lower())
            if flag is None:
                raise ProfileError(f"line {lineno}: {key} must be true or false")
            values[key] = flag
        elif key == "name":
            values[key] = value.strip()
        else:
            raise ProfileError(f"line {lineno}: unknown profile key {key!r}")
    for required in ("name", "min_gram", "max_gram"):
        if required not in values:
            raise ProfileError(f"profile is missing required key {required!r}")
    try:
        return LanguageProfile(**values)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ProfileError(str(exc)) from None


def dump_profile(profile: LanguageProfile) -> str:
    """Render a profile in the same key=value format parse_profile reads."""
    lines = [
        f"name={profile.name}",
        f"min_gram={profile.min_gram}",
        f"max_gram={profile.max_gram}",
        f"max_relation_gap={profile.max_relation_gap}",
        "connector_words=" + " ".join(sorted(profile.connector_words)),
        "sentence_terminators=" + "".join(sorted(profile.sentence_terminators)),
        "case_sensitive_matching=" + ("true" if profile.case_sensitive_matching else "false"),
    ]
    return "\n".join(lines) + "\n"


def load_profile(path: str | Path) -> LanguageProfile:
    return parse_profile(Path(path).read_text(encoding="utf-8"))


def builtin_profile(name: str) -> LanguageProfile:
    if name not in BUILTIN_PROFILE_NAMES:
        raise ProfileError(f"no built-in profile named {name!r}")
    text = resources.files("everlearn").joinpath("data", f"{name}.profile").read_text("utf-8")
    return parse_profile(text)


def resolve_profile(name_or_path: str) -> LanguageProfile:
    """Accept either a built-in profile name or a path to a profile file."""
    if name_or_path in BUILTIN_PROFILE_NAMES:
        return builtin_profile(name_or_path)
    path = Path(name_or_path)
    if path.is_file():
        return load_profile(path)
    raise ProfileError(
        f"{name_or_path!r} is neither a built-in profile ({', '.join(BUILTIN_PROFILE_NAMES)}) "
        "nor a readable profile file"
    )
