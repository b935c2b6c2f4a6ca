import itertools
import json

import numpy as np
import pytest

from binsight.corpus import (
    SynthSpec,
    family_names,
    generate_bodies,
    read_corpus_manifest,
    spec_from_json,
    synth_corpus,
)
from binsight.pe import extract_features, parse_pe

SMALL = SynthSpec(family_count=3, samples_per_family=4, base_length=4096,
                  signature_length=512, noise_rate=0.02, seed=7)


def hamming_fraction(a: bytes, b: bytes) -> float:
    x = np.frombuffer(a, dtype=np.uint8)
    y = np.frombuffer(b, dtype=np.uint8)
    return float(np.mean(x != y))


def test_family_names_fixed_width():
    assert family_names(SMALL) == ["fam00", "fam01", "fam02"]
    assert family_names(SynthSpec(family_count=1, family_prefix="ben")) == ["ben00"]


def test_bodies_shape_and_length():
    families = generate_bodies(SMALL)
    assert len(families) == 3
    assert all(len(samples) == 4 for samples in families)
    assert all(len(body) == 4096 for samples in families for body in samples)


def test_bodies_deterministic_across_calls():
    assert generate_bodies(SMALL) == generate_bodies(SMALL)


def test_bodies_change_with_seed():
    other = SynthSpec(**{**SMALL.__dict__, "seed": 8})
    assert generate_bodies(SMALL) != generate_bodies(other)


def test_zero_noise_collapses_family_to_identical_bodies():
    spec = SynthSpec(**{**SMALL.__dict__, "noise_rate": 0.0})
    for samples in generate_bodies(spec):
        assert len(set(samples)) == 1


def test_zero_noise_families_differ_only_inside_signature_regions():
    spec = SynthSpec(**{**SMALL.__dict__, "noise_rate": 0.0})
    regions = spec.regions()
    families = generate_bodies(spec)
    for (fa, fb) in itertools.combinations(range(3), 2):
        a = np.frombuffer(families[fa][0], dtype=np.uint8)
        b = np.frombuffer(families[fb][0], dtype=np.uint8)
        diff = np.nonzero(a != b)[0]
        allowed = set()
        for f in (fa, fb):
            off, length = regions[f]
            allowed.update(range(off, off + length))
        assert set(diff.tolist()) <= allowed
        assert len(diff) > 0


def test_within_family_hamming_matches_closed_form():
    # Independent noise at rate q on two samples flips a byte position
    # with probability q(2-q); a flipped draw still collides with the
    # original 1/256 of the time.
    q = 0.05
    spec = SynthSpec(family_count=1, samples_per_family=50, base_length=8192,
                     noise_rate=q, seed=13)
    samples = generate_bodies(spec)[0]
    expected = q * (2 - q) * 255 / 256
    fractions = [hamming_fraction(a, b)
                 for a, b in itertools.combinations(samples, 2)]
    assert len(fractions) >= 1000
    observed = float(np.mean(fractions))
    assert observed == pytest.approx(expected, rel=0.10)


def test_cross_family_distance_exceeds_within_family():
    families = generate_bodies(SMALL)
    within = hamming_fraction(families[0][0], families[0][1])
    across = hamming_fraction(families[0][0], families[1][0])
    assert across > within


def test_region_validation():
    with pytest.raises(ValueError):
        SynthSpec(family_count=2, base_length=100,
                  signature_regions=((0, 60), (50, 40))).validate()  # overlap
    with pytest.raises(ValueError):
        SynthSpec(family_count=2, base_length=100,
                  signature_regions=((0, 10), (95, 10))).validate()  # off the end
    with pytest.raises(ValueError):
        SynthSpec(family_count=2, base_length=100,
                  signature_regions=((0, 10),)).validate()  # wrong count
    with pytest.raises(ValueError):
        SynthSpec(noise_rate=0.7).validate()
    with pytest.raises(ValueError):
        SynthSpec(family_count=0).validate()


def test_synth_corpus_tree_and_manifest(tmp_path):
    corpus = synth_corpus(SMALL, tmp_path)
    assert len(corpus) == 12
    assert corpus.family_counts == {"fam00": 4, "fam01": 4, "fam02": 4}

    for name in family_names(SMALL):
        files = sorted((tmp_path / name).glob("sample_*.bin"))
        assert len(files) == 4

    loaded = read_corpus_manifest(tmp_path / "manifest.csv")
    assert loaded.records == corpus.records


def test_synth_corpus_reruns_byte_identical(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    synth_corpus(SMALL, a_dir)
    synth_corpus(SMALL, b_dir)
    a_files = sorted(p for p in a_dir.rglob("sample_*.bin"))
    b_files = sorted(p for p in b_dir.rglob("sample_*.bin"))
    assert len(a_files) == 12
    for pa, pb in zip(a_files, b_files):
        assert pa.read_bytes() == pb.read_bytes()


def test_synth_samples_are_parseable_pes_with_family_codes(tmp_path):
    spec = SynthSpec(**{**SMALL.__dict__, "family_code_base": 5})
    synth_corpus(spec, tmp_path)
    for f, name in enumerate(family_names(spec)):
        code = 5 + f
        for path in sorted((tmp_path / name).glob("sample_*.bin")):
            meta = parse_pe(path.read_bytes())
            vec = extract_features(meta)
            assert vec["MajorImageVersion"] == 1 + code
            assert vec["SizeOfStackReserve"] == 0x100000 + code * 0x10000
            assert vec["SizeOfHeapReserve"] == 0x100000 + code * 0x8000
            assert vec["CheckSum"] // 4096 == code
            assert vec["SectionsNb"] == 3  # .text, .data, builder's .idata
            assert vec["ImportsNbDLL"] == 2
            assert vec["ImportsNb"] == 3


def test_header_jitter_varies_within_family(tmp_path):
    synth_corpus(SMALL, tmp_path)
    checksums = set()
    for path in sorted((tmp_path / "fam00").glob("sample_*.bin")):
        meta = parse_pe(path.read_bytes())
        checksums.add(meta.checksum)
    assert len(checksums) > 1  # jitter actually applied
    assert all(0 <= c < 64 for c in checksums)  # code base 0


def test_spec_from_json_round_trip(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({
        "familyCount": 2,
        "samplesPerFamily": 3,
        "baseLength": 2048,
        "noiseRate": 0.01,
        "seed": 42,
        "familyPrefix": "ben",
        "role": "benign",
        "familyCodeBase": 64,
    }))
    spec = spec_from_json(path)
    assert spec == SynthSpec(family_count=2, samples_per_family=3,
                             base_length=2048, noise_rate=0.01, seed=42,
                             family_prefix="ben", role="benign",
                             family_code_base=64)

    bad = tmp_path / "bad.json"
    bad.write_text('{"familyCont": 2}')
    with pytest.raises(ValueError):
        spec_from_json(bad)
