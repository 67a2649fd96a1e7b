#!/usr/bin/env python3
"""Run the acceptance gate with the per-criterion lines shown inline.

Equivalent to `pytest tests/test_acceptance.py -v -s`; extra arguments
are passed straight to pytest (e.g. -k criterion_5).
"""
import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    gate = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main([str(gate), "-v", "-s", *sys.argv[1:]]))
