"""Run the acceptance criteria and show their PASS/FAIL lines."""
import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    here = Path(__file__).resolve().parents[1]
    sys.exit(pytest.main(["-q", "-s", str(here / "tests" / "test_acceptance.py"), *sys.argv[1:]]))
