import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from websift.ingest import group_sessions, parse_trace_file
from websift.synth import TRACE_COLUMNS, generate_trace, trace_text


@settings(max_examples=20)
@given(st.integers(10, 200), st.floats(0, 1), st.integers(0, 2**31))
def test_exact_attack_count(n, frac, seed):
    """Session labels under the default rule match the requested fraction exactly."""
    text = trace_text(n, frac, seed)
    sessions = group_sessions(parse_trace_file(io.BytesIO(text.encode())).records)
    assert len(sessions) == n
    assert sum(s.label for s in sessions) == round(n * frac)


def test_deterministic_and_seed_sensitive():
    assert trace_text(50, 0.5, 1) == trace_text(50, 0.5, 1)
    assert trace_text(50, 0.5, 1) != trace_text(50, 0.5, 2)


def test_columns():
    rows = generate_trace(20, 0.5, 0)
    assert all(tuple(r) == TRACE_COLUMNS for r in rows)


@pytest.mark.parametrize("n, frac", [(5, 0.5), (20, 1.5), (20, -0.1)])
def test_bad_arguments(n, frac):
    with pytest.raises(ValueError):
        generate_trace(n, frac)
