"""Bundled law specifications with their scenario templates."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..formula import Formula, normalize
from ..parser import SpecFile, parse_spec
from ..sim.genome import ScenarioTemplate
from ..violation import theta

CORPUS_DIR = Path(__file__).parent

# |violation set| of each law, computed once and frozen as regression anchors
THETA_SIZES = {"law38": 9, "law42": 4, "law52": 2}
CITATIONS = {"law38": "Article 38", "law42": "Article 42", "law52": "Article 52"}


class CorpusError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    citation: str
    spec_path: Path
    template_path: Path
    expected_theta: int
    spec: SpecFile
    template: ScenarioTemplate

    @property
    def law(self) -> Formula:
        return self.spec.formula


def load_entry(name: str) -> CorpusEntry:
    d = CORPUS_DIR / name
    spec = parse_spec((d / "spec.lb").read_text())
    entry = CorpusEntry(
        name=name,
        citation=CITATIONS[name],
        spec_path=d / "spec.lb",
        template_path=d / "template.json",
        expected_theta=THETA_SIZES[name],
        spec=spec,
        template=ScenarioTemplate.load(d / "template.json"),
    )
    got = len(theta(normalize(entry.law)))
    if got != entry.expected_theta:
        raise CorpusError(f"{name}: violation set has {got} elements, expected {entry.expected_theta}")
    return entry


def load_corpus() -> list[CorpusEntry]:
    return [load_entry(name) for name in sorted(THETA_SIZES)]
