"""Rewrite the golden files from the current implementation."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from _golden import FILES, GOLDEN  # noqa: E402

for name, make in FILES.items():
    (GOLDEN / name).write_text(make())
    print("wrote", GOLDEN / name)
