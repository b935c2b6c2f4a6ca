import pytest

from binsight.pe.writer import ImportDll, PeFileSpec, SectionData, build_pe
from binsight.pe.writer import SECTION_CODE, SECTION_DATA


def make_pe_bytes(checksum: int = 0, body: bytes = b"\xcc" * 300,
                  **overrides) -> bytes:
    """A small distinct PE; vary checksum/body to get unique content."""
    spec = PeFileSpec(
        checksum=checksum,
        sections=(
            SectionData(".text", b"\xc3" * 64, characteristics=SECTION_CODE),
            SectionData(".data", body, characteristics=SECTION_DATA),
        ),
        imports=(ImportDll("kernel32.dll", names=("ExitProcess",)),),
        **overrides,
    )
    return build_pe(spec).data


@pytest.fixture
def family_tree(tmp_path):
    """Corpus layout: family A x3, family B x2, a text file, a duplicate."""
    root = tmp_path / "corpus"
    (root / "A").mkdir(parents=True)
    (root / "B").mkdir(parents=True)
    for i in range(3):
        (root / "A" / f"a{i}.exe").write_bytes(make_pe_bytes(checksum=i))
    for i in range(2):
        (root / "B" / f"b{i}.exe").write_bytes(make_pe_bytes(checksum=100 + i))
    (root / "A" / "notes.txt").write_text("not a binary\n")
    # byte-identical duplicate of an existing sample
    (root / "B" / "dup_of_a0.exe").write_bytes(make_pe_bytes(checksum=0))
    return root
