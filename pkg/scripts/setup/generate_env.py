#!/usr/bin/env python3
"""
Generate a .env file for the QCA toolkit

Writes every QCA_* variable with its default value so the tolerances, the
dense dimension cap and the seed can be tuned in one place.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from app.core.settings import env_template  # noqa: E402


def generate_env_file(path: Path = Path(".env"), force: bool = False) -> bool:
    """
    Write the template to path.

    Args:
        path: Target file
        force: If True, overwrite an existing file

    Returns:
        True if the file was written
    """
    if path.exists() and not force:
        print(f"ERROR: {path} already exists")
        print("Use --force to overwrite, or manually edit the file")
        return False

    path.write_text(env_template(), encoding="utf-8")
    print(f"Generated {path}")
    return True


if __name__ == "__main__":
    sys.exit(0 if generate_env_file(force="--force" in sys.argv) else 1)
