import pytest

from mixlab import export
from mixlab.chain import ChainError
from mixlab.chains import ChainFamily, build


@pytest.mark.parametrize("kind,n", [("Q", 2), ("Z", 3), ("P", 2), ("Mtilde", 3), ("RT", 3), ("Qprime", 4)])
def test_round_trip(kind, n):
    fam = build(kind, n)
    meta, m = export.loads(export.dumps(fam))
    assert meta == {"kind": kind, "n": n, "dimension": fam.matrix.size}
    assert m.equals(fam.matrix)


def test_entries_are_reduced_and_sorted():
    lines = export.dumps(build("Z", 3)).splitlines()
    assert lines[:2] == ["kind=Z n=3 dimension=3", "row,col,numerator,denominator"]
    assert lines[2:] == ["0,0,3,5", "0,1,2,5", "1,0,2,15", "1,1,7,15", "1,2,2,5", "2,1,2,5", "2,2,3,5"]


def test_float_matrix_refused():
    fam = build("Q", 2)
    floaty = ChainFamily("Q", 2, fam.matrix.as_float(), fam.codec)
    with pytest.raises(ChainError):
        export.dumps(floaty)
