"""Deterministic synthetic corpora for desk-scale pipeline testing.

Every family in a generated tree shares one random base body; each
family stamps its own random signature bytes over a family-unique region
of that base, then every sample gets independent uniform byte noise.
Within a family, two samples therefore differ on an expected fraction
noiseRate * (2 - noiseRate) * 255/256 of body bytes; across families
they additionally differ on the two signature regions.

Each body is wrapped as a minimal valid PE, and a per-family "code"
(familyCodeBase + family index) is folded into a few optional-header
fields with gaps far larger than the per-sample jitter. That makes
families cleanly separable in feature space, and lets benign trees be
generated far from malware trees by picking distant code bases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..pe.batch import sample_id_of
from ..pe.writer import ImportDll, PeFileSpec, SectionData, build_pe
from ..pe.writer import SECTION_CODE, SECTION_DATA
from .ingest import ROLE_MALWARE, SPLIT_UNASSIGNED, Corpus, SampleRecord, write_corpus_manifest

_STREAM_BASE = 0
_STREAM_SIGNATURE = 1
_STREAM_SAMPLE = 2


@dataclass(frozen=True)
class SynthSpec:
    family_count: int = 4
    samples_per_family: int = 120
    base_length: int = 16384
    signature_length: int = 2048
    noise_rate: float = 0.02
    seed: int = 7
    family_prefix: str = "fam"
    role: str = ROLE_MALWARE
    family_code_base: int = 0
    signature_regions: tuple[tuple[int, int], ...] | None = None

    def regions(self) -> tuple[tuple[int, int], ...]:
        """Resolved (offset, length) per family; validated pairwise disjoint."""
        if self.signature_regions is not None:
            regions = self.signature_regions
        else:
            stride = self.base_length // max(self.family_count, 1)
            length = min(self.signature_length, stride)
            regions = tuple((i * stride, length) for i in range(self.family_count))
        if len(regions) != self.family_count:
            raise ValueError(
                f"{len(regions)} signature regions for {self.family_count} families")
        spans = sorted(regions)
        for (off, length) in spans:
            if off < 0 or length <= 0 or off + length > self.base_length:
                raise ValueError(f"region ({off}, {length}) outside the base body")
        for (a_off, a_len), (b_off, _) in zip(spans, spans[1:]):
            if a_off + a_len > b_off:
                raise ValueError("signature regions overlap")
        return regions

    def validate(self) -> None:
        if self.family_count < 1 or self.samples_per_family < 1:
            raise ValueError("family_count and samples_per_family must be >= 1")
        if not 0 <= self.noise_rate < 0.5:
            raise ValueError(f"noise rate must be in [0, 0.5), got {self.noise_rate}")
        self.regions()


def family_names(spec: SynthSpec) -> list[str]:
    return [f"{spec.family_prefix}{i:02d}" for i in range(spec.family_count)]


def _rng(*slots: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(slots)))


def generate_bodies(spec: SynthSpec) -> list[list[bytes]]:
    """Per-family lists of noised body byte strings (pre-PE-wrapping)."""
    spec.validate()
    regions = spec.regions()
    base = _rng(spec.seed, _STREAM_BASE).integers(
        0, 256, spec.base_length, dtype=np.uint8)

    families: list[list[bytes]] = []
    for f in range(spec.family_count):
        offset, length = regions[f]
        signature = _rng(spec.seed, _STREAM_SIGNATURE, f).integers(
            0, 256, length, dtype=np.uint8)
        stamped = base.copy()
        stamped[offset:offset + length] = signature

        samples = []
        for s in range(spec.samples_per_family):
            rng = _rng(spec.seed, _STREAM_SAMPLE, f, s)
            body = stamped.copy()
            if spec.noise_rate > 0:
                mask = rng.random(spec.base_length) < spec.noise_rate
                body[mask] = rng.integers(0, 256, int(mask.sum()), dtype=np.uint8)
            samples.append(body.tobytes())
        families.append(samples)
    return families


def _wrap_pe(body: bytes, code: int, jitter_rng: np.random.Generator) -> bytes:
    minor_iv = int(jitter_rng.integers(0, 4))
    checksum = code * 4096 + int(jitter_rng.integers(0, 64))
    file_spec = PeFileSpec(
        major_image_version=1 + code,
        minor_image_version=minor_iv,
        checksum=checksum,
        size_of_stack_reserve=0x100000 + code * 0x10000,
        size_of_heap_reserve=0x100000 + code * 0x8000,
        sections=(
            SectionData(".text", b"\xc3" * 256, characteristics=SECTION_CODE),
            SectionData(".data", body, characteristics=SECTION_DATA),
        ),
        imports=(
            ImportDll("kernel32.dll", names=("ExitProcess", "GetProcAddress")),
            ImportDll("user32.dll", names=("MessageBoxA",)),
        ),
    )
    return build_pe(file_spec).data


def synth_corpus(spec: SynthSpec, out_dir: str | Path) -> Corpus:
    """Write the tree (one subdirectory per family) plus a manifest CSV."""
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    corpus = Corpus()
    names = family_names(spec)
    for f, samples in enumerate(generate_bodies(spec)):
        family_dir = out_dir / names[f]
        family_dir.mkdir(parents=True, exist_ok=True)
        code = spec.family_code_base + f
        for s, body in enumerate(samples):
            # Jitter draws are deliberately separate from the body noise
            # stream so header fields stay stable if body params change.
            jitter_rng = _rng(spec.seed, _STREAM_SAMPLE, f, s, 1)
            data = _wrap_pe(body, code, jitter_rng)
            path = family_dir / f"sample_{s:04d}.bin"
            path.write_bytes(data)
            corpus.records.append(SampleRecord(
                sample_id=sample_id_of(data), source_path=str(path),
                family=names[f], role=spec.role, split=SPLIT_UNASSIGNED))

    write_corpus_manifest(out_dir / "manifest.csv", corpus)
    return corpus


_SPEC_KEYS = {
    "familyCount": "family_count",
    "samplesPerFamily": "samples_per_family",
    "baseLength": "base_length",
    "signatureLength": "signature_length",
    "noiseRate": "noise_rate",
    "seed": "seed",
    "familyPrefix": "family_prefix",
    "role": "role",
    "familyCodeBase": "family_code_base",
    "signatureRegions": "signature_regions",
}


def spec_from_json(path: str | Path) -> SynthSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    kwargs = {}
    for key, value in doc.items():
        if key not in _SPEC_KEYS:
            raise ValueError(f"unknown synth config key {key!r}")
        if key == "signatureRegions" and value is not None:
            value = tuple((int(a), int(b)) for a, b in value)
        kwargs[_SPEC_KEYS[key]] = value
    return SynthSpec(**kwargs)
